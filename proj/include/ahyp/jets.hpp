#pragma once

// Forward-mode truncated derivative tables ("jets") in n variables up to order 4.
//
// A jet stores raw partial derivatives d^a f(p) for every multi-index a with
// |a| <= k, laid out in graded lexicographic order: all indices of degree 0,
// then degree 1, ..., and within a degree, larger exponents of earlier
// variables come first. For n = 2, k = 2 the layout is
//   f, f_x, f_y, f_xx, f_xy, f_yy.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ahyp {

inline constexpr int kMaxJetDim = 4;
inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetLen = 70;  // C(4 + 4, 4)

class JetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

constexpr int binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

using MultiIndex = std::array<int, kMaxJetDim>;

struct LeibnizTerm {
    int a, b;
    double coef;
};

// Enumeration tables for a fixed dimension at the maximum order; jets of lower
// order use a prefix of every table because the layout is graded.
struct JetTables {
    int n = 0;
    std::vector<MultiIndex> index;          // position -> multi-index
    std::vector<int> degree;                // position -> |a|
    std::vector<std::array<int, kMaxJetDim>> up;  // position, var -> position of a + e_var (-1 if too high)
    std::vector<std::vector<LeibnizTerm>> leibniz;  // output position -> (a, b, binomial weight)
    std::vector<double> factorial;          // position -> a!

    explicit JetTables(int dim) : n(dim) {
        for (int d = 0; d <= kMaxJetOrder; ++d) enumerate(d);
        const int len = static_cast<int>(index.size());
        up.assign(len, {});
        factorial.assign(len, 1.0);
        for (int p = 0; p < len; ++p) {
            for (int v = 0; v < kMaxJetDim; ++v) up[p][v] = -1;
            for (int v = 0; v < n; ++v) {
                MultiIndex m = index[p];
                ++m[v];
                up[p][v] = find(m);
            }
            double f = 1.0;
            for (int v = 0; v < n; ++v)
                for (int j = 2; j <= index[p][v]; ++j) f *= j;
            factorial[p] = f;
        }
        leibniz.assign(len, {});
        for (int g = 0; g < len; ++g) {
            for (int a = 0; a < len; ++a) {
                MultiIndex rest{};
                bool ok = true;
                double w = 1.0;
                for (int v = 0; v < n; ++v) {
                    rest[v] = index[g][v] - index[a][v];
                    if (rest[v] < 0) { ok = false; break; }
                    w *= binom(index[g][v], index[a][v]);
                }
                if (!ok) continue;
                leibniz[g].push_back({a, find(rest), w});
            }
        }
    }

    int find(const MultiIndex& m) const {
        for (std::size_t p = 0; p < index.size(); ++p)
            if (index[p] == m) return static_cast<int>(p);
        return -1;
    }

private:
    void enumerate(int d) {
        MultiIndex m{};
        recurse(m, 0, d);
    }
    void recurse(MultiIndex& m, int var, int remaining) {
        if (var == n - 1) {
            m[var] = remaining;
            index.push_back(m);
            degree.push_back(sumOf(m));
            m[var] = 0;
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            m[var] = e;
            recurse(m, var + 1, remaining - e);
        }
        m[var] = 0;
    }
    int sumOf(const MultiIndex& m) const {
        int s = 0;
        for (int v = 0; v < n; ++v) s += m[v];
        return s;
    }
};

inline const JetTables& tables(int n) {
    static const std::array<JetTables, kMaxJetDim + 1> all = {
        JetTables(1), JetTables(1), JetTables(2), JetTables(3), JetTables(4)};
    return all[n];
}

}  // namespace detail

inline int jet_length(int n, int k) { return detail::binom(n + k, k); }

class Jet {
public:
    Jet() = default;

    // Constant jet.
    Jet(int n, int k, double value = 0.0) : n_(n), k_(k) {
        check_shape(n, k);
        c_.fill(0.0);
        c_[0] = value;
    }

    static Jet constant(int n, int k, double value) { return Jet(n, k, value); }

    static Jet seed(int index, double value, int n, int k) {
        if (index < 0 || index >= n)
            throw JetError("seed_variable: index " + std::to_string(index) +
                           " out of range for dimension " + std::to_string(n));
        Jet j(n, k, value);
        if (k >= 1) j.c_[1 + index] = 1.0;
        return j;
    }

    // Jet of order k whose value is `value` and whose first partials are the given
    // jets of order k - 1 (assumed to be the gradient of one function).
    static Jet from_gradient(double value, const std::vector<Jet>& grad, int n, int k) {
        if (static_cast<int>(grad.size()) != n) throw JetError("from_gradient: need one partial per variable");
        Jet r(n, k, value);
        const auto& t = detail::tables(n);
        const int len = r.size();
        for (int p = 1; p < len; ++p) {
            const auto& m = t.index[p];
            int var = 0;
            while (m[var] == 0) ++var;
            detail::MultiIndex lower = m;
            --lower[var];
            const Jet& g = grad[var];
            if (g.dim() != n || g.order() < k - 1) throw JetError("from_gradient: partial jet too short");
            r.c_[p] = g.c_[detail::tables(n).find(lower)];
        }
        return r;
    }

    int dim() const { return n_; }
    int order() const { return k_; }
    int size() const { return jet_length(n_, k_); }

    double value() const { return c_[0]; }
    double operator[](int pos) const { return c_[pos]; }
    double& operator[](int pos) { return c_[pos]; }

    // Partial derivative for a multi-index given as exponent list.
    double partial(const std::vector<int>& alpha) const {
        detail::MultiIndex m{};
        int deg = 0;
        if (static_cast<int>(alpha.size()) != n_) throw JetError("partial: multi-index length mismatch");
        for (int v = 0; v < n_; ++v) {
            m[v] = alpha[v];
            deg += alpha[v];
        }
        if (deg > k_) throw JetError("partial: order exceeds jet order");
        return c_[detail::tables(n_).find(m)];
    }

    const detail::MultiIndex& multi_index(int pos) const { return detail::tables(n_).index[pos]; }

    // First-order partial derivative of the underlying function as a jet of order k - 1.
    Jet d(int var) const {
        if (k_ == 0) throw JetError("d: cannot differentiate an order-0 jet");
        if (var < 0 || var >= n_) throw JetError("d: variable index out of range");
        Jet r(n_, k_ - 1);
        const auto& t = detail::tables(n_);
        const int len = r.size();
        for (int p = 0; p < len; ++p) r.c_[p] = c_[t.up[p][var]];
        return r;
    }

    Jet truncated(int k) const {
        if (k > k_) throw JetError("truncated: requested order exceeds jet order");
        Jet r(n_, k);
        const int len = r.size();
        std::copy(c_.begin(), c_.begin() + len, r.c_.begin());
        return r;
    }

    Jet& operator+=(const Jet& o) { return *this = *this + o; }
    Jet& operator-=(const Jet& o) { return *this = *this - o; }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }
    Jet& operator+=(double s) { c_[0] += s; return *this; }
    Jet& operator-=(double s) { c_[0] -= s; return *this; }
    Jet& operator*=(double s) {
        const int len = size();
        for (int p = 0; p < len; ++p) c_[p] *= s;
        return *this;
    }
    Jet& operator/=(double s) { return *this *= (1.0 / s); }

    // Arithmetic between jets of different order truncates to the lower order;
    // use combine() for the strict variant.
    friend Jet operator+(const Jet& a, const Jet& b) {
        Jet r = shaped(a, b);
        const int len = r.size();
        for (int p = 0; p < len; ++p) r.c_[p] = a.c_[p] + b.c_[p];
        return r;
    }
    friend Jet operator-(const Jet& a, const Jet& b) {
        Jet r = shaped(a, b);
        const int len = r.size();
        for (int p = 0; p < len; ++p) r.c_[p] = a.c_[p] - b.c_[p];
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r = shaped(a, b);
        const auto& t = detail::tables(r.n_);
        const int len = r.size();
        for (int g = 0; g < len; ++g) {
            double s = 0.0;
            for (const auto& term : t.leibniz[g]) s += term.coef * a.c_[term.a] * b.c_[term.b];
            r.c_[g] = s;
        }
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

    friend Jet operator-(const Jet& a) {
        Jet r = a;
        r *= -1.0;
        return r;
    }
    friend Jet operator+(const Jet& a, double s) { Jet r = a; r.c_[0] += s; return r; }
    friend Jet operator+(double s, const Jet& a) { return a + s; }
    friend Jet operator-(const Jet& a, double s) { Jet r = a; r.c_[0] -= s; return r; }
    friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
    friend Jet operator*(const Jet& a, double s) { Jet r = a; r *= s; return r; }
    friend Jet operator*(double s, const Jet& a) { return a * s; }
    friend Jet operator/(const Jet& a, double s) { Jet r = a; r *= 1.0 / s; return r; }
    friend Jet operator/(double s, const Jet& a) { return reciprocal(a) * s; }

    // Composition with a univariate function given its derivatives f^(m)(a0), m = 0..k.
    friend Jet compose(const Jet& a, const std::array<double, kMaxJetOrder + 1>& fd) {
        Jet delta = a;
        delta.c_[0] = 0.0;
        Jet r(a.n_, a.k_, fd[0]);
        if (a.k_ == 0) return r;
        Jet power = delta;
        double inv_fact = 1.0;
        for (int m = 1; m <= a.k_; ++m) {
            inv_fact /= m;
            const int len = r.size();
            const double w = fd[m] * inv_fact;
            for (int p = 0; p < len; ++p) r.c_[p] += w * power.c_[p];
            if (m < a.k_) power = power * delta;
        }
        return r;
    }

    friend Jet reciprocal(const Jet& a) {
        const double v = a.c_[0];
        if (v == 0.0) throw JetError("division by zero at base point");
        std::array<double, kMaxJetOrder + 1> fd{};
        double p = 1.0 / v, f = 1.0;
        for (int m = 0; m <= a.k_; ++m) {
            fd[m] = ((m % 2) ? -1.0 : 1.0) * f * p;
            p /= v;
            f *= (m + 1);
        }
        return compose(a, fd);
    }

private:
    static void check_shape(int n, int k) {
        if (n < 1 || n > kMaxJetDim)
            throw JetError("jet dimension " + std::to_string(n) + " outside 1.." + std::to_string(kMaxJetDim));
        if (k < 0 || k > kMaxJetOrder)
            throw JetError("jet order " + std::to_string(k) + " outside 0.." + std::to_string(kMaxJetOrder));
    }
    static Jet shaped(const Jet& a, const Jet& b) {
        if (a.n_ != b.n_) throw JetError("jet dimension mismatch");
        return Jet(a.n_, std::min(a.k_, b.k_));
    }

    int n_ = 1;
    int k_ = 0;
    std::array<double, kMaxJetLen> c_{};
};

enum class JetOp { add, sub, mul, div };

// Strict binary combination: (n, k) must match.
inline Jet combine(JetOp op, const Jet& a, const Jet& b) {
    if (a.dim() != b.dim()) throw JetError("combine: dimension mismatch");
    if (a.order() != b.order()) throw JetError("combine: order mismatch");
    switch (op) {
        case JetOp::add: return a + b;
        case JetOp::sub: return a - b;
        case JetOp::mul: return a * b;
        case JetOp::div:
            if (b.value() == 0.0) throw JetError("combine: division by zero at base point");
            return a / b;
    }
    throw JetError("combine: unknown op");
}

enum class Univariate { ln, exp, sqrt, sin, cos, tan, powreal };

inline std::string univariate_name(Univariate f) {
    switch (f) {
        case Univariate::ln: return "ln";
        case Univariate::exp: return "exp";
        case Univariate::sqrt: return "sqrt";
        case Univariate::sin: return "sin";
        case Univariate::cos: return "cos";
        case Univariate::tan: return "tan";
        case Univariate::powreal: return "powreal";
    }
    return "?";
}

inline Jet apply_univariate(Univariate f, const Jet& a, double r = 0.0) {
    const double v = a.value();
    const int k = a.order();
    std::array<double, kMaxJetOrder + 1> fd{};
    auto domain = [&](const char* why) {
        throw JetError(univariate_name(f) + ": " + why + " (base value " + std::to_string(v) + ")");
    };
    switch (f) {
        case Univariate::ln: {
            if (!(v > 0.0)) domain("argument must be positive");
            fd[0] = std::log(v);
            double p = 1.0 / v, fact = 1.0;
            for (int m = 1; m <= k; ++m) {
                fd[m] = ((m % 2) ? 1.0 : -1.0) * fact * p;
                p /= v;
                fact *= m;
            }
            break;
        }
        case Univariate::exp: {
            const double e = std::exp(v);
            fd.fill(e);
            break;
        }
        case Univariate::sqrt:
            if (!(v > 0.0)) domain("argument must be positive");
            return apply_univariate(Univariate::powreal, a, 0.5);
        case Univariate::sin:
        case Univariate::cos: {
            const double s = std::sin(v), c = std::cos(v);
            const std::array<double, 4> cyc = (f == Univariate::sin)
                                                  ? std::array<double, 4>{s, c, -s, -c}
                                                  : std::array<double, 4>{c, -s, -c, s};
            for (int m = 0; m <= k; ++m) fd[m] = cyc[m % 4];
            break;
        }
        case Univariate::tan: {
            const double c = std::cos(v);
            if (std::abs(c) < 1e-300) domain("pole of tan");
            // d^m tan = P_m(tan) with P_0 = t, P_{m+1} = (1 + t^2) P_m'(t).
            const double t = std::tan(v);
            std::vector<double> poly = {0.0, 1.0};
            for (int m = 0; m <= k; ++m) {
                double val = 0.0, tp = 1.0;
                for (double cf : poly) { val += cf * tp; tp *= t; }
                fd[m] = val;
                std::vector<double> der(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
                for (std::size_t j = 1; j < poly.size(); ++j) der[j - 1] = j * poly[j];
                std::vector<double> next(der.size() + 2, 0.0);
                for (std::size_t j = 0; j < der.size(); ++j) {
                    next[j] += der[j];
                    next[j + 2] += der[j];
                }
                poly = next;
            }
            break;
        }
        case Univariate::powreal: {
            if (!(v > 0.0)) domain("base must be positive for a real exponent");
            double coef = 1.0;
            for (int m = 0; m <= k; ++m) {
                fd[m] = coef * std::pow(v, r - m);
                coef *= (r - m);
            }
            break;
        }
    }
    return compose(a, fd);
}

inline Jet ln(const Jet& a) { return apply_univariate(Univariate::ln, a); }
inline Jet exp(const Jet& a) { return apply_univariate(Univariate::exp, a); }
inline Jet sqrt(const Jet& a) { return apply_univariate(Univariate::sqrt, a); }
inline Jet sin(const Jet& a) { return apply_univariate(Univariate::sin, a); }
inline Jet cos(const Jet& a) { return apply_univariate(Univariate::cos, a); }
inline Jet tan(const Jet& a) { return apply_univariate(Univariate::tan, a); }
inline Jet powreal(const Jet& a, double r) { return apply_univariate(Univariate::powreal, a, r); }

// Integer power by repeated squaring; valid for any nonzero base when e < 0.
inline Jet ipow(const Jet& a, long e) {
    if (e < 0) return reciprocal(ipow(a, -e));
    Jet result(a.dim(), a.order(), 1.0);
    Jet base = a;
    while (e > 0) {
        if (e & 1) result = result * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return result;
}

// |a| with the sign frozen at the base value.
inline Jet abs(const Jet& a) {
    if (a.value() == 0.0) throw JetError("abs: argument vanishes at base point");
    return a.value() > 0.0 ? a : -a;
}

}  // namespace ahyp
