#pragma once

// Conformal rescalings on the abundant and hypersurface sides, their compatibility,
// and the move to standard scale.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "abundant.hpp"
#include "hypersurface.hpp"
#include "reconstruct.hpp"

namespace ahyp {

class ConformalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ω > 0 with Υ = d ln Ω.
struct ConformalFactor {
    ScalarField omega;

    static ConformalFactor from_expr(const Chart& chart, const std::string& src) { return {chart.field(src)}; }
    static ConformalFactor constant(int n, double c) { return {ScalarField::constant(n, c)}; }

    Jet value(std::span<const double> p, int order) const {
        Jet w = omega(p, order);
        if (!(w.value() > 0.0)) throw ConformalError("conformal factor must be positive (got " + std::to_string(w.value()) + ")");
        return w;
    }
    Jet log(std::span<const double> p, int order) const { return ln(value(p, order)); }
    // Υ at `order` (Ω evaluated one order higher)
    JetTensor upsilon(std::span<const double> p, int order) const {
        Jet l = log(p, order + 1);
        const int n = l.dim();
        JetTensor u(n, 1, Jet(n, order));
        for (int i = 0; i < n; ++i) u(i) = l.d(i);
        return u;
    }
};

inline void require_positive(const ConformalFactor& omega, const std::vector<Point>& points) {
    for (const auto& p : points) omega.value(p, 0);
}

inline ConformalFactor compose(const ConformalFactor& a, const ConformalFactor& b) { return {a.omega * b.omega}; }

// g′ = Ω²g, S′ = Ω²S, t′ = t − 3 ln Ω
inline AbundantData rescale_abundant(const AbundantData& d, const ConformalFactor& omega,
                                     const SampleSpec& check = {{3}, 5, 1}) {
    require_positive(omega, sample_points(d.chart(), check));
    const ScalarField w2 = omega.omega * omega.omega;
    AbundantData r;
    r.name = d.name;
    r.geo.chart = d.geo.chart;
    for (const auto& g : d.geo.metric) r.geo.metric.push_back(w2 * g);
    for (const auto& s : d.S) r.S.push_back(w2 * s);
    ConformalFactor om = omega;
    ScalarField t = d.t;
    r.t = ScalarField([om, t](std::span<const double> p, int k) { return t(p, k) - om.log(p, k) * 3.0; });
    return r;
}

// G′ = Ω²G, C′ = Ω²(C − Υ-pattern), A′(X,Y) = A(X,Y) + 4Υ(X)Υ(Y) − 2G(∇_X Υ̂, Y) with ∇ the
// induced connection, i.e. G(∇_X Υ̂, Y) = Hess^G ln Ω(X,Y) + C(X,Y,Υ̂).
inline HypersurfaceData rescale_hypersurface(const HypersurfaceData& hs, const ConformalFactor& omega,
                                             const SampleSpec& check = {{3}, 5, 1}) {
    require_positive(omega, sample_points(hs.chart, check));
    HypersurfaceData r = hs;
    auto G = hs.G;
    auto C = hs.C;
    auto A = hs.A;
    ConformalFactor om = omega;
    r.G = [G, om](std::span<const double> p, int k) { return G(p, k).scaled(ipow(om.value(p, k), 2)); };
    r.C = [G, C, om](std::span<const double> p, int k) {
        JetTensor up = om.upsilon(p, k);
        return (C(p, k) - cubic_pattern(up, G(p, k))).scaled(ipow(om.value(p, k), 2));
    };
    r.A = [G, C, A, om](std::span<const double> p, int k) {
        PointGeometry pg = PointGeometry::from_metric(G(p, k + 1));
        Jet l = om.log(p, k + 2);
        JetTensor up = truncated(pg.d(l), k);
        JetTensor hess = pg.hessian(l);
        JetTensor cu = feed_last(C(p, k), raise(up, 0, truncated(pg.ginv, k)));
        return A(p, k) + outer(up, up) * 4.0 - (hess + cu) * 2.0;
    };
    return r;
}

// ξ′ = Ω⁻²(ξ + 2 grad_G ln Ω), with the gradient mapped to the flat frame by W.
inline std::vector<Eigen::VectorXd> transversal_transform(const HypersurfaceData& hs, const ConformalFactor& omega,
                                                          const ImmersionGrid& grid) {
    if (grid.samples.empty()) throw ConformalError("transversal_transform: no samples");
    const int n = hs.dim();
    std::vector<Eigen::VectorXd> out;
    for (const auto& s : grid.samples) {
        if (s.W.rows() != n + 1) throw ConformalError("transversal_transform: samples carry no frame");
        const TensorValue g = values(hs.G(s.p, 0));
        const TensorValue grad = raise(values(omega.upsilon(s.p, 0)), 0, inverse_metric(g));
        Eigen::VectorXd v = s.xi;
        for (int i = 0; i < n; ++i) v += 2.0 * grad(i) * s.W.col(i);
        const double w = omega.value(s.p, 0).value();
        out.push_back(v / (w * w));
    }
    return out;
}

struct StandardScale {
    AbundantData data;
    ConformalFactor omega;
};

// Ω = exp(t/3); the result has t′ ≡ 0.
inline StandardScale to_standard_scale(const AbundantData& d) {
    ScalarField t = d.t;
    ConformalFactor omega{ScalarField([t](std::span<const double> p, int k) { return exp(t(p, k) * (1.0 / 3.0)); })};
    AbundantData r = rescale_abundant(d, omega);
    r.t = ScalarField::constant(d.dim(), 0.0);
    return {r, omega};
}

// Field-by-field comparison of the two routes build∘rescale and rescale∘build.
inline std::vector<PointResidual> compatibility_residuals(const HypersurfaceData& a, const HypersurfaceData& b,
                                                          const Point& p) {
    HsPoint x = HsPoint::at(a, p, 1);
    HsPoint y = HsPoint::at(b, p, 1);
    auto diff = [](const JetTensor& s, const JetTensor& t) { return max_abs(values(s) - values(t)); };
    return {{"G", diff(x.G(), y.G())},
            {"C", diff(x.C, y.C)},
            {"U", diff(x.U, y.U)},
            {"u", diff(x.u, y.u)},
            {"A", diff(truncated(x.A, 0), truncated(y.A, 0))}};
}

inline ResidualReport verify_compatibility(const AbundantData& d, const ConformalFactor& omega,
                                           const std::vector<Point>& points, double tol = kDefaultTol) {
    HypersurfaceData route1 = hypersurface_from_abundant(rescale_abundant(d, omega));
    HypersurfaceData route2 = rescale_hypersurface(hypersurface_from_abundant(d), omega);
    return run_checks(points, tol, [&](const Point& p) { return compatibility_residuals(route1, route2, p); });
}

}  // namespace ahyp
