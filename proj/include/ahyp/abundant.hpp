#pragma once

// Abundant manifolds (M, g, S, t): derived tensors and the defining conditions
// for n >= 3 and for n = 2.

#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "residuals.hpp"
#include "tensor.hpp"

namespace ahyp {

struct AbundantData {
    ChartGeometry geo;
    std::vector<ScalarField> S;  // packed components over sorted index triples
    ScalarField t;
    std::string name;

    int dim() const { return geo.dim(); }
    const Chart& chart() const { return geo.chart; }
};

inline int packed_count(int n, int rank) { return static_cast<int>(sorted_tuples(n, rank).size()); }

// ---- pointwise algebra shared with the hypersurface side --------------------------------

// 𝔖(A,B,C,D) = g(S_A B, S_C D) = Σ S(A,B,e) S(C,D,f) g^{ef}
inline JetTensor frak_square(const JetTensor& s, const JetTensor& ginv) {
    return contract(outer(s, s), 2, 5, ginv);
}

// 𝒮(X,Y) = tr(S_X S_Y)
inline JetTensor script_square(const JetTensor& s, const JetTensor& ginv) {
    return contract(frak_square(s, ginv), 1, 3, ginv);
}

// (X,Y) ↦ S(X,Y,v) for a vector v
inline JetTensor feed_last(const JetTensor& s, const JetTensor& v) { return insert_vector(s, s.rank() - 1, v); }

// tr_g(S(X,·,B̂(·))) = Σ S(X,a,b) B(c,d) g^{bc} g^{ad}
inline JetTensor trace_with(const JetTensor& s, const JetTensor& b, const JetTensor& ginv) {
    return contract(contract(outer(s, b), 2, 3, ginv), 1, 2, ginv);
}

// p(X,Y,Z) = w(X)g(Y,Z) + w(Y)g(X,Z) + w(Z)g(X,Y)
inline JetTensor trace_pattern(const JetTensor& w, const JetTensor& g) {
    JetTensor wg = outer(w, g);
    return wg + permute(wg, {1, 0, 2}) + permute(wg, {1, 2, 0});
}

// Evaluated data at one point, all jets at a common order.
struct AbundantPoint {
    int n = 0;
    int order = 0;
    PointGeometry pg;
    JetTensor S, dt, gradt;
    Jet t;

    static AbundantPoint at(const AbundantData& d, std::span<const double> p, int order) {
        AbundantPoint a;
        a.n = d.dim();
        a.order = order;
        a.pg = PointGeometry::at(d.geo, p, order);
        a.S = symmetric_from_packed(d.S, a.n, 3, p, order);
        a.t = d.t(p, order);
        a.dt = a.pg.d(a.t);
        a.gradt = raise(a.dt, 0, a.pg.ginv);
        return a;
    }
    const JetTensor& g() const { return pg.g; }
    const JetTensor& ginv() const { return pg.ginv; }
    Jet s_norm2() const { return norm2(S, pg.g, pg.ginv); }
    JetTensor frak() const { return frak_square(S, pg.ginv); }
    JetTensor script() const { return script_square(S, pg.ginv); }
    // (∇S)(X,Y,Z,W) = (∇_W S)(X,Y,Z)
    JetTensor nabla_S_last() const { return permute(pg.nabla(S), {1, 2, 3, 0}); }
};

// 𝒯(X,Y,Z) = S(X,Y,Z) + T(X)g(Y,Z) + T(Y)g(X,Z) − (2/n) g(X,Y) T(Z), T = dt
inline JetTensor structure_tensor_jets(const AbundantPoint& a) {
    JetTensor tg = outer(a.dt, a.g());
    JetTensor gt = outer(a.g(), a.dt);
    return a.S + tg + permute(tg, {1, 0, 2}) - gt * (2.0 / a.n);
}

// S₁(X,Y,Z,W) = 𝔖(Y,Z,X,W) + 3S(X,Y,W)dt(Z) + S(X,Y,Z)dt(W) + (4/(n−2)𝒮(Y,Z) − 3S(Y,Z,grad t)) g(X,W)
inline JetTensor s1_jets(const AbundantPoint& a) {
    if (a.n < 3) throw GeometryError("S1 is defined for n >= 3 only");
    const double n = a.n;
    JetTensor sd = outer(a.S, a.dt);
    JetTensor coef = a.script() * (4.0 / (n - 2.0)) - feed_last(a.S, a.gradt) * 3.0;
    return permute(a.frak(), {2, 0, 1, 3}) + permute(sd, {0, 1, 3, 2}) * 3.0 + sd +
           permute(outer(coef, a.g()), {2, 0, 1, 3});
}

// Ⅹ = div S + (2/3) S(grad t)   (n = 2)
inline JetTensor sha_jets(const AbundantPoint& a) {
    return a.pg.divergence(a.S) + feed_last(a.S, a.gradt) * (2.0 / 3.0);
}

// τ: trace-free part of the Ric–τ identity for n >= 3; the displayed definition for n = 2.
inline JetTensor tau_jets(const AbundantPoint& a, const CurvatureStack& cs) {
    const double n = a.n;
    const JetTensor& g = a.g();
    const JetTensor& gi = a.ginv();
    if (a.n >= 3) {
        JetTensor b = feed_last(a.S, a.gradt) + outer(a.dt, a.dt);
        return tracefree2(a.script(), g, gi) * (2.0 / (3.0 * (n - 2.0))) - tracefree2(b, g, gi) * (2.0 / 3.0) +
               tracefree2(*cs.schouten, g, gi) * 2.0;
    }
    JetTensor hess = a.pg.hessian(a.t);
    Jet dt2 = norm2(a.dt, g, gi);
    JetTensor tau = hess * (2.0 / 3.0) - feed_last(a.S, a.gradt) * (2.0 / 3.0) + sha_jets(a) * (1.0 / 3.0) -
                    (outer(a.dt, a.dt) - g.scaled(dt2 * 0.5)) * (8.0 / 9.0) - g.scaled(a.s_norm2() * (1.0 / 9.0)) -
                    g.scaled(cs.scal * 0.5);
    return tau;
}

struct ShaBetaEta {
    JetTensor sha, beta, eta;
};

inline ShaBetaEta sha_beta_eta_jets(const AbundantPoint& a, const CurvatureStack& cs) {
    if (a.n != 2) throw GeometryError("sha/beta/eta are defined for n = 2 only");
    ShaBetaEta r;
    r.sha = sha_jets(a);
    r.beta = trace_with(a.S, r.sha, a.ginv());
    r.eta = trace_with(a.S, tau_jets(a, cs), a.ginv());
    return r;
}

// ---- value-level API -------------------------------------------------------------------

inline constexpr int kAbundantOrder = 3;

inline TensorValue structure_tensor(const AbundantData& d, const Point& p) {
    return values(structure_tensor_jets(AbundantPoint::at(d, p, 1)));
}

inline TensorValue s1_tensor(const AbundantData& d, const Point& p) {
    if (d.dim() < 3) throw GeometryError("S1 is defined for n >= 3 only; n = 2 uses its own system");
    return values(s1_jets(AbundantPoint::at(d, p, 1)));
}

inline TensorValue tau(const AbundantData& d, const Point& p) {
    AbundantPoint a = AbundantPoint::at(d, p, 2);
    return values(tau_jets(a, a.pg.curvature()));
}

struct ShaBetaEtaValue {
    TensorValue sha, beta, eta;
};

inline ShaBetaEtaValue sha_beta_eta(const AbundantData& d, const Point& p) {
    if (d.dim() != 2) throw GeometryError("sha/beta/eta are defined for n = 2 only");
    AbundantPoint a = AbundantPoint::at(d, p, 2);
    ShaBetaEta r = sha_beta_eta_jets(a, a.pg.curvature());
    return {values(r.sha), values(r.beta), values(r.eta)};
}

// Residuals of the defining conditions at one point.
inline std::vector<PointResidual> abundant_residuals(const AbundantData& d, const Point& p,
                                                     int order = kAbundantOrder) {
    const int n = d.dim();
    AbundantPoint a = AbundantPoint::at(d, p, order);
    CurvatureStack cs = a.pg.curvature();
    const JetTensor& g = a.g();
    const JetTensor& gi = a.ginv();
    std::vector<PointResidual> out;
    out.push_back({"s_tracefree", max_abs(values(contract(a.S, 0, 1, gi)))});
    JetTensor nS = a.nabla_S_last();

    if (n >= 3) {
        const double nn = n;
        JetTensor hess = a.pg.hessian(a.t);
        Jet dt2 = norm2(a.dt, g, gi);
        JetTensor rhs = *cs.schouten * 3.0 + (outer(a.dt, a.dt) - g.scaled(dt2 * 0.5)) * (1.0 / 3.0) +
                        (a.script() + g.scaled(a.s_norm2() * ((nn - 6.0) / (2.0 * (nn - 1.0) * (nn + 2.0))))) *
                            (1.0 / (3.0 * (nn - 2.0)));
        out.push_back({"hessian_t", max_abs(values(hess - rhs))});
        JetTensor ds_rhs = tracefree_sym_projector(3, s1_jets(a), g, gi) * (1.0 / 3.0);
        out.push_back({"ds", max_abs(values(nS - ds_rhs))});
        out.push_back({"weyl_s", max_abs(values(weyl0_projector(a.frak(), g, gi)))});
        // curvature of ∇^S = ∇^g − Ŝ against P^S ⧀ g
        JetTensor shat = raise(a.S, 2, gi);
        JetTensor conn = a.pg.gamma;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) conn(k, i, j) = conn(k, i, j) - shat(i, j, k);
        JetTensor curvS = curvature_of(conn);
        JetTensor riemS = riemann_lowered(curvS, g);
        JetTensor ricS = ricci_of(curvS);
        JetTensor ps = (ricS - g.scaled(trace2(ricS, gi) * (1.0 / (2.0 * (nn - 1.0))))) * (1.0 / (nn - 2.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) {
                Jet s = (ps(i, j) + ps(j, i)) * 0.5;
                ps(i, j) = s;
                ps(j, i) = s;
            }
        out.push_back({"curvature_s", max_abs(values(riemS - kulkarni_nomizu(ps, truncated(g, ps.flat(0).order()))))});
        if (n >= 4) out.push_back({"weyl_g", max_abs(values(*cs.weyl))});
        else out.push_back({"weyl_g", 0.0, true});
        return out;
    }

    // n = 2
    JetTensor sha = sha_jets(a);
    JetTensor tau2 = tau_jets(a, cs);
    JetTensor beta = trace_with(a.S, sha, gi);
    JetTensor eta = trace_with(a.S, tau2, gi);
    {
        JetTensor sd = outer(a.S, a.dt);                       // S(X,Y,Z)dt(W)
        JetTensor ds = outer(a.dt, a.S);                       // dt(X)S(Y,Z,W)
        JetTensor xg = outer(sha, g);                          // Ⅹ(X,Y)g(Z,W)
        JetTensor inner_t = sd * (-2.0 / 3.0) + ds * 2.0 + xg;
        JetTensor rhs = tracefree_sym_projector(3, inner_t, g, gi);
        out.push_back({"ds_2d", max_abs(values(nS - rhs))});
    }
    {
        JetTensor nX = permute(a.pg.nabla(sha), {1, 2, 0});  // (X,Y,Z) = (∇_Z Ⅹ)(X,Y)
        JetTensor bg = outer(beta, g);                        // β(X)g(Y,Z)
        JetTensor gb = outer(g, beta);                        // g(X,Y)β(Z)
        JetTensor t1 = sym_projector(2, bg - gb * 0.5);
        JetTensor xgt = feed_last(sha, a.gradt);              // Ⅹ(·, grad t)
        JetTensor t2 = sym_projector(3, outer(sha, a.dt) - outer(g, xgt) * 0.5);
        JetTensor rhs = a.S.scaled(a.s_norm2() * (1.0 / 3.0)) + t1 * (4.0 / 3.0) + t2 * (4.0 / 3.0);
        out.push_back({"dxi_2d", max_abs(values(nX - rhs))});
    }
    {
        JetTensor div_tau = a.pg.divergence(tau2);
        JetTensor dscal = a.pg.d(cs.scal);
        JetTensor sgg = feed_last(feed_last(a.S, a.gradt), a.gradt);
        JetTensor rhs = eta * -1.0 + beta - feed_last(sha, a.gradt) * (2.0 / 3.0) - sgg * (4.0 / 9.0) -
                        a.dt.scaled(a.s_norm2() * (5.0 / 9.0)) + dscal * 0.5 - a.dt.scaled(cs.scal);
        out.push_back({"div_tau_2d", max_abs(values(div_tau - rhs))});
    }
    out.push_back({"tau_tracefree", std::abs(trace2(tau2, gi).value())});
    out.push_back({"tau_symmetric", std::abs(tau2(0, 1).value() - tau2(1, 0).value())});
    return out;
}

inline ResidualReport verify_conditions(const AbundantData& d, const std::vector<Point>& points,
                                        double tol = kDefaultTol, int order = kAbundantOrder) {
    return run_checks(points, tol, [&](const Point& p) { return abundant_residuals(d, p, order); });
}

// Residual of the single-potential equation (n >= 3):
// ∇²V − (1/n)ΔV g = 𝒯(·,·,grad V) + τ V
inline double verify_potential_equation(const AbundantData& d, const ScalarField& V, const Point& p) {
    if (d.dim() < 3)
        throw GeometryError("potential equation is only available for n >= 3; the 2D coupling is not specified");
    AbundantPoint a = AbundantPoint::at(d, p, 2);
    CurvatureStack cs = a.pg.curvature();
    Jet v = V(p, 2);
    JetTensor hv = a.pg.hessian(v);
    JetTensor lhs = tracefree2(hv, a.g(), a.ginv());
    JetTensor gradv = a.pg.gradient(v);
    JetTensor rhs = feed_last(structure_tensor_jets(a), gradv) + tau_jets(a, cs).scaled(v);
    return max_abs(values(lhs - rhs));
}

}  // namespace ahyp
