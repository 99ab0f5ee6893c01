#pragma once

// Dense pointwise tensors over a scalar type T (double or Jet) with valence
// metadata, plus the symmetrisation and trace-free projectors used by the
// abundant and hypersurface conditions.
//
// Components are stored row-major: slot 0 varies slowest. Slot variance is
// tracked per slot; most operations assume covariant slots and say so.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "jets.hpp"

namespace ahyp {

class TensorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxRank = 7;
using Index = std::array<int, kMaxRank>;

inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }

template <class T>
class Tensor {
public:
    Tensor() = default;

    // All slots covariant unless `upper` says otherwise.
    Tensor(int n, int rank, const T& fill, std::vector<bool> upper = {})
        : n_(n), rank_(rank), upper_(std::move(upper)) {
        if (rank < 0 || rank > kMaxRank) throw TensorError("rank out of range");
        if (upper_.empty()) upper_.assign(rank, false);
        if (static_cast<int>(upper_.size()) != rank) throw TensorError("valence length mismatch");
        int count = 1;
        for (int i = 0; i < rank; ++i) count *= n;
        data_.assign(count, fill);
    }

    int dim() const { return n_; }
    int rank() const { return rank_; }
    std::size_t size() const { return data_.size(); }
    bool upper(int slot) const { return upper_[slot]; }
    const std::vector<bool>& valence() const { return upper_; }
    void set_upper(int slot, bool up) { upper_[slot] = up; }
    int covariant_count() const { return static_cast<int>(std::count(upper_.begin(), upper_.end(), false)); }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    T& flat(std::size_t i) { return data_[i]; }
    const T& flat(std::size_t i) const { return data_[i]; }

    std::size_t offset(const Index& idx) const {
        std::size_t off = 0;
        for (int s = 0; s < rank_; ++s) off = off * n_ + idx[s];
        return off;
    }
    Index unflatten(std::size_t off) const {
        Index idx{};
        for (int s = rank_ - 1; s >= 0; --s) {
            idx[s] = static_cast<int>(off % n_);
            off /= n_;
        }
        return idx;
    }

    T& at(const Index& idx) { return data_[offset(idx)]; }
    const T& at(const Index& idx) const { return data_[offset(idx)]; }

    template <class... I>
    T& operator()(I... i) {
        static_assert(sizeof...(I) <= kMaxRank);
        Index idx{static_cast<int>(i)...};
        return at(idx);
    }
    template <class... I>
    const T& operator()(I... i) const {
        Index idx{static_cast<int>(i)...};
        return at(idx);
    }

    T zero() const { return data_.empty() ? T{} : data_[0] * 0.0; }

    Tensor& operator+=(const Tensor& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = data_[i] + o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = data_[i] - o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (auto& v : data_) v = v * s;
        return *this;
    }
    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, double s) { return a *= s; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }
    friend Tensor operator-(Tensor a) { return a *= -1.0; }

    template <class S>
    Tensor scaled(const S& s) const {
        Tensor r = *this;
        for (auto& v : r.data_) v = v * s;
        return r;
    }

    void check_same(const Tensor& o) const {
        if (n_ != o.n_ || rank_ != o.rank_) throw TensorError("shape mismatch");
    }

private:
    int n_ = 0;
    int rank_ = 0;
    std::vector<bool> upper_;
    std::vector<T> data_;
};

using TensorValue = Tensor<double>;
using JetTensor = Tensor<Jet>;

// ---- structural helpers -------------------------------------------------------

template <class T>
Tensor<double> values(const Tensor<T>& t) {
    Tensor<double> r(t.dim(), t.rank(), 0.0, t.valence());
    for (std::size_t i = 0; i < t.size(); ++i) r.flat(i) = value_of(t.flat(i));
    return r;
}

inline Tensor<Jet> truncated(const Tensor<Jet>& t, int k) {
    Tensor<Jet> r = t;
    for (auto& v : r.data()) v = v.truncated(std::min(k, v.order()));
    return r;
}

template <class T>
double max_abs(const Tensor<T>& t) {
    double m = 0.0;
    for (const auto& v : t.data()) m = std::max(m, std::abs(value_of(v)));
    return m;
}

// result slot s takes the index of source slot perm[s]:
// result(i_0, ..., i_{r-1}) = src(j) with j[perm[s]] = i_s.
template <class T>
Tensor<T> permute(const Tensor<T>& src, const std::vector<int>& perm) {
    const int r = src.rank();
    if (static_cast<int>(perm.size()) != r) throw TensorError("permute: length mismatch");
    std::vector<bool> up(r);
    for (int s = 0; s < r; ++s) up[s] = src.upper(perm[s]);
    Tensor<T> out(src.dim(), r, src.zero(), up);
    for (std::size_t f = 0; f < out.size(); ++f) {
        Index i = out.unflatten(f), j{};
        for (int s = 0; s < r; ++s) j[perm[s]] = i[s];
        out.flat(f) = src.at(j);
    }
    return out;
}

template <class T>
Tensor<T> outer(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.dim() != b.dim()) throw TensorError("outer: dimension mismatch");
    std::vector<bool> up = a.valence();
    up.insert(up.end(), b.valence().begin(), b.valence().end());
    Tensor<T> out(a.dim(), a.rank() + b.rank(), a.zero() * b.zero(), up);
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out.flat(k++) = a.flat(i) * b.flat(j);
    return out;
}

// Contract slots s1 < s2 using `m` (inverse metric for two covariant slots,
// metric for two contravariant slots, identity pairing for mixed).
template <class T>
Tensor<T> contract(const Tensor<T>& a, int s1, int s2, const Tensor<T>& metric_or_inverse) {
    if (s1 == s2 || s1 < 0 || s2 < 0 || s1 >= a.rank() || s2 >= a.rank())
        throw TensorError("contract: slot mismatch");
    if (s1 > s2) std::swap(s1, s2);
    const int n = a.dim();
    const bool mixed = a.upper(s1) != a.upper(s2);
    std::vector<bool> up;
    for (int s = 0; s < a.rank(); ++s)
        if (s != s1 && s != s2) up.push_back(a.upper(s));
    Tensor<T> out(n, a.rank() - 2, a.zero(), up);
    for (std::size_t f = 0; f < out.size(); ++f) {
        Index o = out.unflatten(f), i{};
        for (int s = 0, q = 0; s < a.rank(); ++s)
            if (s != s1 && s != s2) i[s] = o[q++];
        T acc = a.zero();
        for (int p = 0; p < n; ++p) {
            if (mixed) {
                i[s1] = p;
                i[s2] = p;
                acc = acc + a.at(i);
                continue;
            }
            for (int q = 0; q < n; ++q) {
                i[s1] = p;
                i[s2] = q;
                acc = acc + metric_or_inverse(p, q) * a.at(i);
            }
        }
        out.flat(f) = acc;
    }
    return out;
}

// Raise a covariant slot with the inverse metric.
template <class T>
Tensor<T> raise(const Tensor<T>& a, int slot, const Tensor<T>& ginv) {
    if (slot < 0 || slot >= a.rank() || a.upper(slot)) throw TensorError("raise: slot mismatch");
    const int n = a.dim();
    Tensor<T> out(n, a.rank(), a.zero(), a.valence());
    out.set_upper(slot, true);
    for (std::size_t f = 0; f < out.size(); ++f) {
        Index i = out.unflatten(f);
        const int k = i[slot];
        T acc = a.zero();
        for (int p = 0; p < n; ++p) {
            i[slot] = p;
            acc = acc + ginv(k, p) * a.at(i);
        }
        out.flat(f) = acc;
    }
    return out;
}

template <class T>
Tensor<T> lower(const Tensor<T>& a, int slot, const Tensor<T>& g) {
    if (slot < 0 || slot >= a.rank() || !a.upper(slot)) throw TensorError("lower: slot mismatch");
    const int n = a.dim();
    Tensor<T> out(n, a.rank(), a.zero(), a.valence());
    out.set_upper(slot, false);
    for (std::size_t f = 0; f < out.size(); ++f) {
        Index i = out.unflatten(f);
        const int k = i[slot];
        T acc = a.zero();
        for (int p = 0; p < n; ++p) {
            i[slot] = p;
            acc = acc + g(k, p) * a.at(i);
        }
        out.flat(f) = acc;
    }
    return out;
}

// Full contraction <a, b> using g on contravariant and g^{-1} on covariant slots.
template <class T>
T inner(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& g, const Tensor<T>& ginv) {
    a.check_same(b);
    const int r = a.rank(), n = a.dim();
    Tensor<T> cur = b;
    for (int s = 0; s < r; ++s) {
        Tensor<T> next(n, r, cur.zero(), cur.valence());
        const Tensor<T>& m = a.upper(s) ? g : ginv;
        for (std::size_t f = 0; f < next.size(); ++f) {
            Index i = next.unflatten(f);
            const int k = i[s];
            T acc = cur.zero();
            for (int p = 0; p < n; ++p) {
                i[s] = p;
                acc = acc + m(k, p) * cur.at(i);
            }
            next.flat(f) = acc;
        }
        cur = std::move(next);
    }
    T acc = a.zero() * b.zero();
    for (std::size_t f = 0; f < a.size(); ++f) acc = acc + a.flat(f) * cur.flat(f);
    return acc;
}

template <class T>
T norm2(const Tensor<T>& a, const Tensor<T>& g, const Tensor<T>& ginv) {
    return inner(a, a, g, ginv);
}

// ---- metric algebra -----------------------------------------------------------

inline constexpr double kDegeneracyThreshold = 1e-10;

template <class T>
T determinant(const Tensor<T>& m) {
    const int n = m.dim();
    std::vector<T> a(m.data());
    T det = m.zero() + 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(a[r * n + c])) > std::abs(value_of(a[piv * n + c]))) piv = r;
        if (value_of(a[piv * n + c]) == 0.0) return m.zero();
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
            det = det * -1.0;
        }
        det = det * a[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            T f = a[r * n + c] / a[c * n + c];
            for (int k = c; k < n; ++k) a[r * n + k] = a[r * n + k] - f * a[c * n + k];
        }
    }
    return det;
}

template <class T>
Tensor<T> inverse_metric(const Tensor<T>& g) {
    const int n = g.dim();
    if (g.rank() != 2) throw TensorError("inverse_metric: rank must be 2");
    if (std::abs(value_of(determinant(g))) < kDegeneracyThreshold)
        throw TensorError("degenerate metric: |det| below 1e-10");
    std::vector<T> a(g.data());
    std::vector<T> inv(n * n, g.zero());
    for (int i = 0; i < n; ++i) inv[i * n + i] = g.zero() + 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(a[r * n + c])) > std::abs(value_of(a[piv * n + c]))) piv = r;
        if (piv != c)
            for (int k = 0; k < n; ++k) {
                std::swap(a[c * n + k], a[piv * n + k]);
                std::swap(inv[c * n + k], inv[piv * n + k]);
            }
        T d = a[c * n + c];
        for (int k = 0; k < n; ++k) {
            a[c * n + k] = a[c * n + k] / d;
            inv[c * n + k] = inv[c * n + k] / d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            T f = a[r * n + c];
            for (int k = 0; k < n; ++k) {
                a[r * n + k] = a[r * n + k] - f * a[c * n + k];
                inv[r * n + k] = inv[r * n + k] - f * inv[c * n + k];
            }
        }
    }
    Tensor<T> out(n, 2, g.zero(), {true, true});
    out.data() = std::move(inv);
    return out;
}

// ---- symmetrisation -------------------------------------------------------------

inline const std::vector<std::vector<int>>& permutations_of(int m) {
    static const std::array<std::vector<std::vector<int>>, 6> cache = [] {
        std::array<std::vector<std::vector<int>>, 6> c;
        for (int k = 0; k < 6; ++k) {
            std::vector<int> p(k);
            std::iota(p.begin(), p.end(), 0);
            do c[k].push_back(p);
            while (std::next_permutation(p.begin(), p.end()));
        }
        return c;
    }();
    return cache.at(m);
}

// Average over all permutations of the first m slots.
template <class T>
Tensor<T> sym_projector(int m, const Tensor<T>& b) {
    if (m < 1 || m > 5) throw TensorError("sym_projector: m out of range");
    if (b.rank() < m) throw TensorError("sym_projector: valence too small");
    const auto& perms = permutations_of(m);
    Tensor<T> out(b.dim(), b.rank(), b.zero(), b.valence());
    for (std::size_t f = 0; f < out.size(); ++f) {
        const Index i = out.unflatten(f);
        T acc = b.zero();
        for (const auto& p : perms) {
            Index j = i;
            for (int s = 0; s < m; ++s) j[s] = i[p[s]];
            acc = acc + b.at(j);
        }
        out.flat(f) = acc * (1.0 / perms.size());
    }
    return out;
}

// Trace-free symmetric projection of the first m covariant slots (m = 2, 3, 4).
template <class T>
Tensor<T> tracefree_sym_projector(int m, const Tensor<T>& b, const Tensor<T>& g, const Tensor<T>& ginv) {
    if (m < 2 || m > 4) throw TensorError("tracefree_sym_projector: m must be 2, 3 or 4");
    if (b.rank() < m) throw TensorError("tracefree_sym_projector: valence too small");
    const double n = b.dim();
    Tensor<T> sb = sym_projector(m, b);
    // Products g ⊗ (...) put g in the projected block; later slots ride along.
    Tensor<T> tr = contract(sb, 0, 1, ginv);
    if (m == 2) {
        return sb - sym_projector(2, outer(g, tr)) * (1.0 / n);
    }
    if (m == 3) {
        return sb - sym_projector(3, outer(g, tr)) * (3.0 / (n + 2.0));
    }
    Tensor<T> trtr = contract(tr, 0, 1, ginv);
    Tensor<T> inner_t = tr - outer(g, trtr) * (1.0 / (2.0 * (n + 2.0)));
    return sb - sym_projector(4, outer(g, inner_t)) * (6.0 / (n + 4.0));
}

// ---- curvature-type products and projectors ----------------------------------------

template <class T>
bool is_symmetric2(const Tensor<T>& b, double tol = 1e-10) {
    for (int i = 0; i < b.dim(); ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(value_of(b(i, j)) - value_of(b(j, i))) > tol * (1.0 + std::abs(value_of(b(i, j)))))
                return false;
    return true;
}

// (B1 ⊙ B2)(X,Y,Z,W) = B1(X,Z)B2(Y,W) + B1(Y,W)B2(X,Z) - B1(X,W)B2(Y,Z) - B1(Y,Z)B2(X,W)
template <class T>
Tensor<T> kulkarni_nomizu(const Tensor<T>& b1, const Tensor<T>& b2) {
    if (b1.rank() != 2 || b2.rank() != 2) throw TensorError("kulkarni_nomizu: rank-2 inputs required");
    if (!is_symmetric2(b1) || !is_symmetric2(b2)) throw TensorError("kulkarni_nomizu: asymmetric input");
    const int n = b1.dim();
    Tensor<T> out(n, 4, b1.zero() * b2.zero());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                for (int w = 0; w < n; ++w)
                    out(x, y, z, w) = b1(x, z) * b2(y, w) + b1(y, w) * b2(x, z) - b1(x, w) * b2(y, z) -
                                      b1(y, z) * b2(x, w);
    return out;
}

// Projection of B ∈ Sym²⊗Sym² onto algebraic Weyl tensors.
template <class T>
Tensor<T> weyl0_projector(const Tensor<T>& b, const Tensor<T>& g, const Tensor<T>& ginv) {
    if (b.rank() != 4) throw TensorError("weyl0_projector: rank-4 input required");
    const int n = b.dim();
    for (std::size_t f = 0; f < b.size(); ++f) {
        Index i = b.unflatten(f), j = i, k = i;
        std::swap(j[0], j[1]);
        std::swap(k[2], k[3]);
        const double s = std::abs(value_of(b.flat(f)));
        if (std::abs(value_of(b.at(j)) - value_of(b.flat(f))) > 1e-9 * (1 + s) ||
            std::abs(value_of(b.at(k)) - value_of(b.flat(f))) > 1e-9 * (1 + s))
            throw TensorError("weyl0_projector: input is not in Sym2 ⊗ Sym2");
    }
    Tensor<T> b1(n, 4, b.zero());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                for (int w = 0; w < n; ++w)
                    b1(x, y, z, w) = (b(x, z, y, w) - b(x, w, y, z) - b(y, z, x, w) + b(y, w, x, z)) * 0.25;
    if (n < 3) return b1 * 0.0;
    Tensor<T> bb = contract(b1, 0, 2, ginv) * (1.0 / (n - 2.0));
    T trb = contract(bb, 0, 1, ginv).flat(0);
    Tensor<T> p = bb - g.scaled(trb * (1.0 / (2.0 * (n - 1.0))));
    return b1 - kulkarni_nomizu(p, g);
}

// Projection of B ∈ T*⊗Sym³₀ onto the trace-free Codazzi-type part; half of the
// displayed 2Π expression.
template <class T>
Tensor<T> codazzi0_projector(const Tensor<T>& b, const Tensor<T>& g, const Tensor<T>& ginv,
                             double tol = 1e-9) {
    if (b.rank() != 4) throw TensorError("codazzi0_projector: rank-4 input required");
    const int n = b.dim();
    Tensor<T> tf = contract(b, 1, 2, ginv);
    const double scale = 1.0 + max_abs(b);
    if (max_abs(tf) > tol * scale) throw TensorError("codazzi0_projector: input not trace-free in slots 2-4");
    Tensor<T> bt = contract(b, 0, 1, ginv);  // b(Z, W)
    Tensor<T> out(n, 4, b.zero());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                for (int w = 0; w < n; ++w) {
                    T v = b(x, y, z, w) - b(y, x, z, w) +
                          (bt(x, z) * g(y, w) + bt(x, w) * g(y, z) - bt(y, z) * g(x, w) - bt(y, w) * g(x, z)) *
                              (1.0 / n);
                    out(x, y, z, w) = v * 0.5;
                }
    return out;
}

// Feed the vector v into `slot`: result(...) = Σ_k a(..., k, ...) v^k.
template <class T>
Tensor<T> insert_vector(const Tensor<T>& a, int slot, const Tensor<T>& v) {
    if (v.rank() != 1 || slot < 0 || slot >= a.rank()) throw TensorError("insert_vector: slot mismatch");
    const int n = a.dim();
    std::vector<bool> up;
    for (int s = 0; s < a.rank(); ++s)
        if (s != slot) up.push_back(a.upper(s));
    Tensor<T> out(n, a.rank() - 1, a.zero() * v.zero(), up);
    for (std::size_t f = 0; f < out.size(); ++f) {
        Index o = out.unflatten(f), i{};
        for (int s = 0, q = 0; s < a.rank(); ++s)
            if (s != slot) i[s] = o[q++];
        T acc = out.zero();
        for (int k = 0; k < n; ++k) {
            i[slot] = k;
            acc = acc + a.at(i) * v(k);
        }
        out.flat(f) = acc;
    }
    return out;
}

// ---- small constructors -------------------------------------------------------------

template <class T>
Tensor<T> from_values(int n, int rank, const std::vector<double>& vals, const T& proto) {
    Tensor<T> t(n, rank, proto * 0.0);
    if (vals.size() != t.size()) throw TensorError("from_values: size mismatch");
    for (std::size_t i = 0; i < vals.size(); ++i) t.flat(i) = proto * 0.0 + vals[i];
    return t;
}

}  // namespace ahyp
