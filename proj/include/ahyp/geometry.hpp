#pragma once

// Coordinate-chart geometry evaluated pointwise through jets: Christoffel
// symbols, curvature, covariant derivatives and the usual differential
// operators.
//
// Conventions:
//   ∇_{∂i} ∂j = Γ^k_ij ∂k, stored as gamma(k, i, j).
//   R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z, stored as R^l_{kij} = curv(l, k, i, j)
//   with R(∂i, ∂j)∂k = R^l_{kij} ∂l.
//   Riem(X,Y,Z,W) = g(R(X,Y)W, Z), positive on round spheres.
//   Ric(X,Y) = tr(Z ↦ R(Z,X)Y).
//   Covariant derivatives put the new slot first: (∇T)(W, X, ...) = (∇_W T)(X, ...).

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "exprlang.hpp"
#include "jets.hpp"
#include "tensor.hpp"

namespace ahyp {

using Point = std::vector<double>;

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A scalar field that can be evaluated as a jet: either a parsed expression or
// an arbitrary callable (interpolated samples, composites).
class ScalarField {
public:
    using Fn = std::function<Jet(std::span<const double>, int)>;

    ScalarField() = default;
    ScalarField(Fn fn, std::optional<Expr> expr = std::nullopt) : fn_(std::move(fn)), expr_(std::move(expr)) {}

    static ScalarField from_expr(const Expr& e, std::vector<std::string> coords, Bindings bindings = {}) {
        auto shared = std::make_shared<std::pair<std::vector<std::string>, Bindings>>(std::move(coords),
                                                                                      std::move(bindings));
        return ScalarField(
            [e, shared](std::span<const double> p, int order) {
                return eval_jet(e, shared->first, p, shared->second, order);
            },
            e);
    }
    static ScalarField constant(int n, double v) {
        return ScalarField([n, v](std::span<const double>, int order) { return Jet(n, order, v); },
                           Expr::constant(v));
    }

    Jet operator()(std::span<const double> p, int order) const { return fn_(p, order); }
    const std::optional<Expr>& expr() const { return expr_; }
    bool valid() const { return static_cast<bool>(fn_); }

private:
    Fn fn_;
    std::optional<Expr> expr_;
};

inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    std::optional<Expr> e;
    if (a.expr() && b.expr()) e = *a.expr() * *b.expr();
    return ScalarField([a, b](std::span<const double> p, int k) { return a(p, k) * b(p, k); }, e);
}
inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    std::optional<Expr> e;
    if (a.expr() && b.expr()) e = *a.expr() + *b.expr();
    return ScalarField([a, b](std::span<const double> p, int k) { return a(p, k) + b(p, k); }, e);
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    std::optional<Expr> e;
    if (a.expr() && b.expr()) e = *a.expr() - *b.expr();
    return ScalarField([a, b](std::span<const double> p, int k) { return a(p, k) - b(p, k); }, e);
}
inline ScalarField scale(double s, const ScalarField& a) {
    std::optional<Expr> e;
    if (a.expr()) e = Expr::constant(s) * *a.expr();
    return ScalarField([a, s](std::span<const double> p, int k) { return a(p, k) * s; }, e);
}
inline ScalarField log_field(const ScalarField& a) {
    std::optional<Expr> e;
    if (a.expr()) e = Expr::call(Func::ln, {*a.expr()});
    return ScalarField(
        [a](std::span<const double> p, int k) {
            Jet v = a(p, k);
            if (!(v.value() > 0.0)) throw DomainError("ln of non-positive field value");
            return ln(v);
        },
        e);
}

struct Interval {
    double lo = 0.0, hi = 1.0;
};

struct Chart {
    std::vector<std::string> coords;
    std::vector<Interval> box;
    Bindings params;

    int dim() const { return static_cast<int>(coords.size()); }
    bool contains(std::span<const double> p, double slack = 1e-12) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] < box[i].lo - slack || p[i] > box[i].hi + slack) return false;
        return true;
    }
    Point center() const {
        Point c(dim());
        for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (box[i].lo + box[i].hi);
        return c;
    }
    std::vector<std::string> declared() const {
        std::vector<std::string> v = coords;
        for (const auto& [k, _] : params) v.push_back(k);
        return v;
    }
    ScalarField field(const std::string& source) const {
        return ScalarField::from_expr(parse(source, declared()), coords, params);
    }
    ScalarField field(const Expr& e) const { return ScalarField::from_expr(e, coords, params); }
};

// Index of the symmetric pair (i <= j) / triple (i <= j <= k) in the packed lists
// used for metric and cubic components: lexicographic over sorted indices.
inline std::vector<std::vector<int>> sorted_tuples(int n, int r) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == r) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            rec(i);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

inline int packed_index(int n, std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    auto all = sorted_tuples(n, static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == idx) return static_cast<int>(i);
    return -1;
}

// Fully symmetric covariant tensor from packed component fields.
inline JetTensor symmetric_from_packed(const std::vector<ScalarField>& comps, int n, int rank,
                                       std::span<const double> p, int order) {
    auto tuples = sorted_tuples(n, rank);
    if (comps.size() != tuples.size()) throw GeometryError("packed component count mismatch");
    std::vector<Jet> vals;
    vals.reserve(comps.size());
    for (const auto& c : comps) vals.push_back(c(p, order));
    JetTensor t(n, rank, Jet(n, order));
    for (std::size_t f = 0; f < t.size(); ++f) {
        Index i = t.unflatten(f);
        std::vector<int> key(i.begin(), i.begin() + rank);
        std::sort(key.begin(), key.end());
        for (std::size_t q = 0; q < tuples.size(); ++q)
            if (tuples[q] == key) {
                t.flat(f) = vals[q];
                break;
            }
    }
    return t;
}

struct ChartGeometry {
    Chart chart;
    std::vector<ScalarField> metric;  // packed n(n+1)/2 components

    int dim() const { return chart.dim(); }

    JetTensor metric_jets(std::span<const double> p, int order) const {
        return symmetric_from_packed(metric, dim(), 2, p, order);
    }
};

// ---- connection-level operations on jets ---------------------------------------------

inline JetTensor christoffels_from(const JetTensor& g, const JetTensor& ginv) {
    const int n = g.dim();
    const int k = g.flat(0).order();
    if (k < 1) throw GeometryError("christoffels need metric jets of order >= 1");
    std::vector<JetTensor> dg;
    for (int l = 0; l < n; ++l) {
        JetTensor d(n, 2, Jet(n, k - 1));
        for (std::size_t f = 0; f < g.size(); ++f) d.flat(f) = g.flat(f).d(l);
        dg.push_back(d);
    }
    JetTensor gamma(n, 3, Jet(n, k - 1), {true, false, false});
    for (int c = 0; c < n; ++c)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Jet acc(n, k - 1);
                for (int l = 0; l < n; ++l)
                    acc = acc + ginv(c, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j)) * 0.5;
                gamma(c, i, j) = acc;
                gamma(c, j, i) = acc;
            }
    return gamma;
}

// Covariant derivative with connection coefficients conn(k, i, j); slot variances honoured.
inline JetTensor covariant_derivative(const JetTensor& t, const JetTensor& conn) {
    const int n = t.dim();
    const int r = t.rank();
    std::vector<bool> up = t.valence();
    up.insert(up.begin(), false);
    int kmin = kMaxJetOrder;
    for (const auto& v : t.data()) kmin = std::min(kmin, v.order());
    if (kmin < 1) throw GeometryError("covariant derivative needs jets of order >= 1");
    JetTensor out(n, r + 1, Jet(n, kmin - 1), up);
    for (std::size_t f = 0; f < out.size(); ++f) {
        Index i = out.unflatten(f);
        const int a = i[0];
        Index rest{};
        for (int s = 0; s < r; ++s) rest[s] = i[s + 1];
        Jet acc = t.at(rest).d(a);
        for (int s = 0; s < r; ++s) {
            Index q = rest;
            const int orig = rest[s];
            for (int m = 0; m < n; ++m) {
                q[s] = m;
                if (t.upper(s)) acc = acc + conn(orig, a, m) * t.at(q);
                else acc = acc - conn(m, a, orig) * t.at(q);
            }
        }
        out.flat(f) = acc;
    }
    return out;
}

// Curvature endomorphism R^l_{kij} of a torsion-free or general connection.
inline JetTensor curvature_of(const JetTensor& conn) {
    const int n = conn.dim();
    int kmin = kMaxJetOrder;
    for (const auto& v : conn.data()) kmin = std::min(kmin, v.order());
    if (kmin < 1) throw GeometryError("curvature needs connection jets of order >= 1");
    JetTensor curv(n, 4, Jet(n, kmin - 1), {true, false, false, false});
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Jet acc = conn(l, j, k).d(i) - conn(l, i, k).d(j);
                    for (int m = 0; m < n; ++m) acc = acc + conn(l, i, m) * conn(m, j, k) - conn(l, j, m) * conn(m, i, k);
                    curv(l, k, i, j) = acc;
                }
    return curv;
}

// Ric(X,Y) = tr(Z ↦ R(Z,X)Y) = R^l_{Y l X}.
inline JetTensor ricci_of(const JetTensor& curv) {
    const int n = curv.dim();
    JetTensor ric(n, 2, curv.zero());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            Jet acc = curv.zero();
            for (int l = 0; l < n; ++l) acc = acc + curv(l, y, l, x);
            ric(x, y) = acc;
        }
    return ric;
}

// Riem(X,Y,Z,W) = g(R(X,Y)W, Z).
inline JetTensor riemann_lowered(const JetTensor& curv, const JetTensor& g) {
    const int n = curv.dim();
    JetTensor riem(n, 4, curv.zero());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                for (int w = 0; w < n; ++w) {
                    Jet acc = curv.zero();
                    for (int l = 0; l < n; ++l) acc = acc + g(z, l) * curv(l, w, x, y);
                    riem(x, y, z, w) = acc;
                }
    return riem;
}

inline Jet trace2(const JetTensor& b, const JetTensor& ginv) { return contract(b, 0, 1, ginv).flat(0); }

// Schouten tensor (n >= 3).
inline JetTensor schouten(const JetTensor& ric, const JetTensor& g, const JetTensor& ginv) {
    const double n = g.dim();
    if (g.dim() < 3) throw GeometryError("Schouten tensor requires n >= 3");
    Jet scal = trace2(ric, ginv);
    return (ric - g.scaled(scal * (1.0 / (2.0 * (n - 1.0))))) * (1.0 / (n - 2.0));
}

// Trace-free part of a (0,2) tensor.
inline JetTensor tracefree2(const JetTensor& b, const JetTensor& g, const JetTensor& ginv) {
    Jet tr = trace2(b, ginv);
    return b - g.scaled(tr * (1.0 / g.dim()));
}

struct CurvatureStack {
    JetTensor riem, ric;
    Jet scal;
    std::optional<JetTensor> schouten, weyl;
};

// Pointwise metric data with everything derivable from g at one order.
struct PointGeometry {
    int n = 0;
    JetTensor g, ginv, gamma;

    static PointGeometry from_metric(const JetTensor& g) {
        PointGeometry pg;
        pg.n = g.dim();
        for (int i = 0; i < pg.n; ++i)
            for (int j = 0; j < i; ++j)
                if (std::abs(g(i, j).value() - g(j, i).value()) > 1e-12)
                    throw GeometryError("metric is not symmetric at the evaluation point");
        pg.g = g;
        pg.ginv = inverse_metric(g);
        pg.gamma = christoffels_from(g, pg.ginv);
        return pg;
    }
    static PointGeometry at(const ChartGeometry& cg, std::span<const double> p, int order) {
        return from_metric(cg.metric_jets(p, order));
    }

    JetTensor nabla(const JetTensor& t) const { return covariant_derivative(t, gamma); }
    JetTensor d(const Jet& f) const {
        JetTensor out(n, 1, Jet(n, std::max(f.order() - 1, 0)));
        for (int i = 0; i < n; ++i) out(i) = f.d(i);
        return out;
    }
    JetTensor gradient(const Jet& f) const { return raise(d(f), 0, ginv); }
    JetTensor hessian(const Jet& f) const {
        JetTensor h = nabla(d(f));
        // exact symmetry of the Hessian; remove rounding asymmetry
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) {
                Jet s = (h(i, j) + h(j, i)) * 0.5;
                h(i, j) = s;
                h(j, i) = s;
            }
        return h;
    }
    Jet laplacian(const Jet& f) const { return trace2(hessian(f), ginv); }
    // div T (X, ...) = g^{ab} (∇_a T)(b, X, ...)
    JetTensor divergence(const JetTensor& t) const { return contract(nabla(t), 0, 1, ginv); }

    CurvatureStack curvature() const {
        CurvatureStack cs;
        JetTensor curv = curvature_of(gamma);
        JetTensor gk = truncated(g, curv.flat(0).order());
        cs.riem = riemann_lowered(curv, gk);
        cs.ric = ricci_of(curv);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) {
                Jet s = (cs.ric(i, j) + cs.ric(j, i)) * 0.5;
                cs.ric(i, j) = s;
                cs.ric(j, i) = s;
            }
        cs.scal = trace2(cs.ric, ginv);
        if (n >= 3) {
            cs.schouten = schouten(cs.ric, g, ginv);
            cs.weyl = cs.riem - kulkarni_nomizu(*cs.schouten, truncated(g, cs.schouten->flat(0).order()));
        }
        return cs;
    }
};

// ---- sampling --------------------------------------------------------------------------

struct SampleSpec {
    std::vector<int> grid;  // nodes per coordinate; empty = no grid
    int random = 0;
    std::uint64_t seed = 1;
};

// Grid nodes (endpoints included) followed by seeded uniform random points.
inline std::vector<Point> sample_points(const Chart& chart, const SampleSpec& spec,
                                        const std::function<bool(const Point&)>& accept = {}) {
    const int n = chart.dim();
    std::vector<Point> pts;
    if (!spec.grid.empty()) {
        std::vector<int> counts(n, 1);
        for (int i = 0; i < n; ++i) counts[i] = spec.grid[std::min<std::size_t>(i, spec.grid.size() - 1)];
        std::vector<int> idx(n, 0);
        for (;;) {
            Point p(n);
            for (int i = 0; i < n; ++i) {
                const auto& b = chart.box[i];
                p[i] = counts[i] == 1 ? 0.5 * (b.lo + b.hi) : b.lo + (b.hi - b.lo) * idx[i] / (counts[i] - 1);
            }
            if (!accept || accept(p)) pts.push_back(p);
            int c = n - 1;
            while (c >= 0 && ++idx[c] == counts[c]) idx[c--] = 0;
            if (c < 0) break;
        }
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int r = 0; r < spec.random; ++r) {
        for (int attempt = 0; attempt <= 100; ++attempt) {
            if (attempt == 100) throw GeometryError("sampling: 100 consecutive points rejected");
            Point p(n);
            for (int i = 0; i < n; ++i) p[i] = chart.box[i].lo + (chart.box[i].hi - chart.box[i].lo) * unit(rng);
            if (!accept || accept(p)) {
                pts.push_back(p);
                break;
            }
        }
    }
    return pts;
}

// Accepts points where the metric is non-degenerate.
inline std::function<bool(const Point&)> nondegenerate(const ChartGeometry& cg) {
    return [&cg](const Point& p) {
        try {
            JetTensor g = cg.metric_jets(p, 0);
            return std::abs(determinant(g).value()) >= kDegeneracyThreshold;
        } catch (const std::exception&) {
            return false;
        }
    };
}

}  // namespace ahyp
