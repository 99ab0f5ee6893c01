#pragma once

// Relative affine hypersurface data (G, C = U + u-pattern, A): the ansatz built
// from abundant data, integrability and abundance checks, and the reverse
// direction back to (S, t).

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <thread>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abundant.hpp"
#include "geometry.hpp"
#include "residuals.hpp"
#include "tensor.hpp"

namespace ahyp {

class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HypersurfaceData {
    using Provider = std::function<JetTensor(std::span<const double>, int)>;

    std::string name;
    Chart chart;
    Provider G;  // (0,2) metric jets
    Provider C;  // (0,3) cubic jets
    Provider A;  // (0,2) Weingarten form jets

    int dim() const { return chart.dim(); }
};

// ---- algebra on the cubic ---------------------------------------------------------------

template <class T>
Tensor<T> cubic_pattern(const Tensor<T>& w, const Tensor<T>& g) {
    Tensor<T> wg = outer(w, g);
    return wg + permute(wg, {1, 0, 2}) + permute(wg, {1, 2, 0});
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> decompose_cubic(const Tensor<T>& c, const Tensor<T>& g) {
    if (c.rank() != 3) throw TensorError("decompose_cubic: rank-3 input required");
    const Tensor<T> ginv = inverse_metric(g);
    const double scale = 1.0 + max_abs(c);
    for (const auto& p : permutations_of(3)) {
        if (max_abs(c - permute(c, p)) > 1e-10 * scale) throw TensorError("decompose_cubic: C is not symmetric");
    }
    Tensor<T> u = contract(c, 1, 2, ginv) * (1.0 / (c.dim() + 2.0));
    Tensor<T> U = c - cubic_pattern(u, g);
    return {U, u};
}

template <class T>
Tensor<T> recompose_cubic(const Tensor<T>& U, const Tensor<T>& u, const Tensor<T>& g) {
    return U + cubic_pattern(u, g);
}

// Pointwise evaluation of hypersurface data.
struct HsPoint {
    int n = 0;
    PointGeometry pg;
    JetTensor C, Chat, U, u, A;

    // G and C at `order`, A at order − 1 (at least 0).
    static HsPoint at(const HypersurfaceData& hs, std::span<const double> p, int order) {
        HsPoint h;
        h.n = hs.dim();
        h.pg = PointGeometry::from_metric(hs.G(p, order));
        h.C = hs.C(p, order);
        h.Chat = raise(h.C, 2, h.pg.ginv);  // Ĉ(X,Y)^k stored as (X,Y,k)
        auto [U, u] = decompose_cubic(h.C, h.pg.g);
        h.U = U;
        h.u = u;
        h.A = hs.A(p, std::max(order - 1, 0));
        return h;
    }
    const JetTensor& G() const { return pg.g; }
    const JetTensor& Ginv() const { return pg.ginv; }

    // connection coefficients conn(k,i,j) of ∇^G + s·Ĉ
    JetTensor shifted_connection(double s) const {
        JetTensor conn = pg.gamma;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) conn(k, i, j) = conn(k, i, j) + Chat(i, j, k) * s;
        return conn;
    }
};

// ---- forward build ----------------------------------------------------------------------

// A from the ansatz, evaluated from abundant jets at order k (result order k − 2).
inline JetTensor ansatz_weingarten(const AbundantPoint& a, const CurvatureStack& cs) {
    const double n = a.n;
    const JetTensor& g = a.g();
    const JetTensor& gi = a.ginv();
    JetTensor hess = a.pg.hessian(a.t);
    if (a.n == 2) {
        Jet lap = trace2(hess, gi);
        Jet dt2 = norm2(a.dt, g, gi);
        JetTensor div_s = a.pg.divergence(a.S);
        return (hess * 2.0 - g.scaled(lap) - div_s) * (1.0 / 3.0) +
               g.scaled((cs.scal - a.s_norm2() * (1.0 / 9.0) + dt2 * (4.0 / 9.0)) * 0.5);
    }
    JetTensor u = a.dt * (1.0 / 3.0);
    JetTensor c = (a.S + cubic_pattern(a.dt, g)) * (1.0 / 3.0);
    JetTensor nabla_u = hess * (1.0 / 3.0);
    JetTensor div_c = a.pg.divergence(c);
    Jet c2 = norm2(c, g, gi);
    Jet u2 = norm2(u, g, gi);
    return (nabla_u * (n + 2.0) - div_c) * (2.0 / n) +
           g.scaled((cs.scal - c2 + u2 * ((n + 2.0) * (n + 2.0))) * (1.0 / (n * (n - 1.0))));
}

inline HypersurfaceData hypersurface_from_abundant(const AbundantData& d) {
    HypersurfaceData hs;
    hs.name = d.name;
    hs.chart = d.chart();
    auto data = std::make_shared<AbundantData>(d);
    hs.G = [data](std::span<const double> p, int k) { return data->geo.metric_jets(p, k); };
    hs.C = [data](std::span<const double> p, int k) {
        AbundantPoint a = AbundantPoint::at(*data, p, k + 1);
        return truncated((a.S + cubic_pattern(a.dt, a.g())) * (1.0 / 3.0), k);
    };
    hs.A = [data](std::span<const double> p, int k) {
        if (k + 2 > kMaxJetOrder) throw JetError("Weingarten form requested beyond the maximum jet order");
        AbundantPoint a = AbundantPoint::at(*data, p, k + 2);
        return truncated(ansatz_weingarten(a, a.pg.curvature()), k);
    };
    return hs;
}

struct BuildOptions {
    bool force = false;
    double tol = kDefaultTol;
    SampleSpec samples{{5}, 20, 1};
};

// Builds (G, C, A) from abundant data; the abundant conditions are checked first
// unless `force` is set.
inline HypersurfaceData build_from_abundant(const AbundantData& d, const BuildOptions& opt = {}) {
    if (!opt.force) {
        ResidualReport rep = verify_conditions(d, sample_points(d.chart(), opt.samples), opt.tol);
        if (!rep.pass()) {
            std::string msg = "abundant conditions fail:";
            for (const auto& f : rep.failing()) msg += " " + f;
            if (rep.rows.empty() && !rep.errors.empty()) msg += " " + rep.errors.front();
            throw PreconditionError(msg);
        }
    }
    return hypersurface_from_abundant(d);
}

// Ric*/(n−1) for ∇* = ∇^G − Ĉ, from G at order k+2 and C at order k+1.
inline JetTensor dual_curvature_weingarten(const JetTensor& g, const JetTensor& c) {
    PointGeometry pg = PointGeometry::from_metric(g);
    const int n = g.dim();
    JetTensor chat = raise(c, 2, pg.ginv);
    JetTensor conn = pg.gamma;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) conn(k, i, j) = conn(k, i, j) - chat(i, j, k);
    return ricci_of(curvature_of(conn)) * (1.0 / (n - 1.0));
}

inline TensorValue weingarten_via_dual_curvature(const HypersurfaceData& hs, const Point& p) {
    return values(dual_curvature_weingarten(hs.G(p, 2), hs.C(p, 1)));
}

// Hypersurface data from explicit G and C fields; A defaults to Ric*/(n−1).
inline HypersurfaceData hypersurface_from_fields(const Chart& chart, std::vector<ScalarField> g,
                                                 std::vector<ScalarField> c,
                                                 std::optional<std::vector<ScalarField>> a = std::nullopt) {
    HypersurfaceData hs;
    hs.chart = chart;
    const int n = chart.dim();
    auto gs = std::make_shared<std::vector<ScalarField>>(std::move(g));
    auto cs = std::make_shared<std::vector<ScalarField>>(std::move(c));
    hs.G = [gs, n](std::span<const double> p, int k) { return symmetric_from_packed(*gs, n, 2, p, k); };
    hs.C = [cs, n](std::span<const double> p, int k) { return symmetric_from_packed(*cs, n, 3, p, k); };
    if (a) {
        auto as = std::make_shared<std::vector<ScalarField>>(std::move(*a));
        hs.A = [as, n](std::span<const double> p, int k) { return symmetric_from_packed(*as, n, 2, p, k); };
    } else {
        hs.A = [gs, cs, n](std::span<const double> p, int k) {
            if (k + 2 > kMaxJetOrder) throw JetError("Weingarten form requested beyond the maximum jet order");
            return dual_curvature_weingarten(symmetric_from_packed(*gs, n, 2, p, k + 2),
                                             symmetric_from_packed(*cs, n, 3, p, k + 1));
        };
    }
    return hs;
}

// A → A + c·G
inline HypersurfaceData with_weingarten_shift(HypersurfaceData hs, double c) {
    auto base = hs.A;
    auto gp = hs.G;
    hs.A = [base, gp, c](std::span<const double> p, int k) { return base(p, k) + truncated(gp(p, k), k) * c; };
    return hs;
}

// ---- integrability ------------------------------------------------------------------------

// 𝒞(X,Y) = tr(C_X C_Y), ℭ(X,Y,Z,W) = G(C_X Y, C_Z W)
inline JetTensor script_c(const JetTensor& c, const JetTensor& ginv) { return script_square(c, ginv); }
inline JetTensor frak_c(const JetTensor& c, const JetTensor& ginv) { return frak_square(c, ginv); }

// Vector-valued Codazzi defect (∇_Y Â)(X) − (∇_X Â)(Y) with the induced connection ∇ = ∇^G + Ĉ,
// stored as (X, Y, k).
inline JetTensor weingarten_codazzi_defect(const HsPoint& h) {
    JetTensor ahat = raise(h.A, 1, h.Ginv());  // Â(X)^k as (X, k)
    JetTensor conn = h.shifted_connection(1.0);
    JetTensor na = covariant_derivative(ahat, conn);  // (Y, X, k) = (∇_Y Â)(X)^k
    return na - permute(na, {1, 0, 2});
}

inline std::vector<PointResidual> integrability_residuals(const HypersurfaceData& hs, const Point& p) {
    const int n = hs.dim();
    const double nn = n;
    HsPoint h = HsPoint::at(hs, p, 2);
    const JetTensor& G = h.G();
    const JetTensor& Gi = h.Ginv();
    CurvatureStack cs = h.pg.curvature();
    std::vector<PointResidual> out;

    JetTensor A0 = truncated(h.A, 0);
    Jet trA = trace2(A0, Gi);
    JetTensor nabla_u = h.pg.nabla(h.u);
    JetTensor div_c = h.pg.divergence(h.C);
    Jet c2 = norm2(h.C, G, Gi);
    Jet u2 = norm2(h.u, G, Gi);

    out.push_back({"a_symmetric", max_abs(values(A0 - permute(A0, {1, 0})))});
    out.push_back({"a0", max_abs(values(tracefree2(A0, G, Gi) - (nabla_u * (nn + 2.0) - div_c) * (2.0 / nn)))});
    out.push_back({"tr_a", std::abs((trA * (nn - 1.0) - (cs.scal - c2 + u2 * ((nn + 2.0) * (nn + 2.0)))).value())});
    {
        JetTensor uhat = raise(h.u, 0, Gi);
        JetTensor lhs = tracefree2(A0, G, Gi) * ((nn - 2.0) / 2.0) + G.scaled(trA * ((nn - 1.0) / nn));
        JetTensor rhs = cs.ric - script_c(h.C, Gi) + feed_last(h.C, uhat) * (nn + 2.0);
        out.push_back({"a_ric", max_abs(values(lhs - rhs))});
    }
    if (n >= 3) {
        JetTensor wc = weyl0_projector(frak_c(h.C, Gi), G, Gi) * 2.0;
        JetTensor wu = weyl0_projector(frak_c(h.U, Gi), G, Gi) * 2.0;
        out.push_back({"a_weyl", std::max(max_abs(values(*cs.weyl - wc)), max_abs(values(*cs.weyl - wu)))});
    } else {
        out.push_back({"a_weyl", 0.0, true});
    }
    out.push_back({"u_codazzi", max_abs(values(codazzi0_projector(h.pg.nabla(h.U), G, Gi)))});
    out.push_back({"a_codazzi", max_abs(values(weingarten_codazzi_defect(h)))});
    return out;
}

inline ResidualReport verify_integrability(const HypersurfaceData& hs, const std::vector<Point>& points,
                                           double tol = kDefaultTol) {
    return run_checks(points, tol, [&](const Point& p) { return integrability_residuals(hs, p); });
}

// Structure equations in curvature form: the induced connection ∇ = ∇^G + Ĉ satisfies
// R(X,Y)Z = G(Y,Z)Â(X) − G(X,Z)Â(Y), the dual ∇* = ∇^G − Ĉ satisfies R*(X,Y)Z = A(Y,Z)X − A(X,Z)Y.
inline std::vector<PointResidual> gauss_direct_residuals(const HypersurfaceData& hs, const Point& p) {
    const int n = hs.dim();
    HsPoint h = HsPoint::at(hs, p, 2);
    const JetTensor& G = h.G();
    JetTensor A0 = truncated(h.A, 0);
    JetTensor Ahat = raise(A0, 1, h.Ginv());  // (X, k)
    JetTensor rind = curvature_of(h.shifted_connection(1.0));
    JetTensor rdual = curvature_of(h.shifted_connection(-1.0));
    double gi = 0.0, gd = 0.0;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                for (int l = 0; l < n; ++l) {
                    double ind = (G(y, z) * Ahat(x, l) - G(x, z) * Ahat(y, l)).value();
                    double dual = (l == x ? A0(y, z).value() : 0.0) - (l == y ? A0(x, z).value() : 0.0);
                    gi = std::max(gi, std::abs(rind(l, z, x, y).value() - ind));
                    gd = std::max(gd, std::abs(rdual(l, z, x, y).value() - dual));
                }
    return {{"gauss_induced", gi}, {"gauss_dual", gd}};
}

// ---- abundant hypersurface conditions -----------------------------------------------------

inline std::vector<PointResidual> abundant_hypersurface_residuals(const HypersurfaceData& hs, const Point& p) {
    const int n = hs.dim();
    const double nn = n;
    HsPoint h = HsPoint::at(hs, p, 2);
    const JetTensor& G = h.G();
    const JetTensor& Gi = h.Ginv();
    CurvatureStack cs = h.pg.curvature();
    std::vector<PointResidual> out;
    JetTensor nU = h.pg.nabla(h.U);
    if (n >= 3) {
        JetTensor frakU = frak_c(h.U, Gi);  // symmetrised below, slot order immaterial
        JetTensor lhs = tracefree_sym_projector(4, nU, G, Gi);
        JetTensor rhs = tracefree_sym_projector(4, frakU + outer(h.U, h.u) * 4.0, G, Gi);
        out.push_back({"du", max_abs(values(lhs - rhs))});
        Jet u2 = norm2(h.u, G, Gi);
        Jet U2 = norm2(h.U, G, Gi);
        JetTensor r = *cs.schouten + outer(h.u, h.u) - G.scaled(u2 * 0.5) +
                      (script_c(h.U, Gi) + G.scaled(U2 * ((nn - 6.0) / (2.0 * (nn + 2.0) * (nn - 1.0))))) *
                          (1.0 / (nn - 2.0));
        out.push_back({"du_1form", max_abs(values(h.pg.nabla(h.u) - r))});
        return out;
    }
    JetTensor uhat = raise(h.u, 0, Gi);
    JetTensor X = (h.pg.divergence(h.U) + feed_last(h.U, uhat) * 2.0) * 3.0;
    Jet U2 = norm2(h.U, G, Gi);
    {
        JetTensor lhs = tracefree_sym_projector(4, nU, G, Gi);
        JetTensor rhs = tracefree_sym_projector(4, outer(h.U, h.u), G, Gi) * 4.0;
        out.push_back({"du_2d", max_abs(values(lhs - rhs))});
    }
    {
        JetTensor nX = h.pg.nabla(X);  // (Z, X, Y)
        JetTensor b = nX - outer(h.u, X) * 4.0;  // derivative slot first in both terms
        JetTensor lhs = tracefree_sym_projector(3, b, G, Gi);
        JetTensor rhs = h.U.scaled(U2 * 9.0);
        out.push_back({"ddivu_2d", max_abs(values(lhs - rhs))});
    }
    {
        Jet divu = trace2(h.pg.nabla(h.u), Gi);
        out.push_back({"divu_2d", std::abs((divu - cs.scal * 0.5 - U2).value())});
    }
    return out;
}

inline ResidualReport verify_abundant_conditions(const HypersurfaceData& hs, const std::vector<Point>& points,
                                                 double tol = kDefaultTol) {
    return run_checks(points, tol, [&](const Point& p) { return abundant_hypersurface_residuals(hs, p); });
}

// ---- identities checked on data built from abundant manifolds (n >= 3) ----------------------

inline std::vector<PointResidual> appendix_residuals(const AbundantData& d, const Point& p) {
    const int n = d.dim();
    if (n < 3) throw GeometryError("these identities are stated for n >= 3");
    const double nn = n;
    AbundantPoint a = AbundantPoint::at(d, p, 2);
    const JetTensor& g = a.g();
    const JetTensor& gi = a.ginv();
    JetTensor nS = a.nabla_S_last();   // (X,Y,Z,W) = ∇_W S(X,Y,Z)
    JetTensor nSf = a.pg.nabla(a.S);   // (W,X,Y,Z)
    JetTensor scr = a.script();
    JetTensor frk = a.frak();
    Jet s2 = a.s_norm2();
    JetTensor sgrad = feed_last(a.S, a.gradt);
    std::vector<PointResidual> out;
    // 3 div S = 2n/(n−2) 𝒮 − n S(grad t) − 2/(n−2) |S|² g
    {
        JetTensor lhs = a.pg.divergence(a.S) * 3.0;
        JetTensor rhs = scr * (2.0 * nn / (nn - 2.0)) - sgrad * nn - g.scaled(s2 * (2.0 / (nn - 2.0)));
        out.push_back({"div_s", max_abs(values(lhs - rhs))});
    }
    out.push_back({"codazzi_ds", max_abs(values(codazzi0_projector(nSf, g, gi)))});
    {
        const int N = n;
        double worst = 0.0;
        for (int x = 0; x < N; ++x)
            for (int y = 0; y < N; ++y)
                for (int z = 0; z < N; ++z)
                    for (int w = 0; w < N; ++w) {
                        Jet rhs = (frk(x, w, y, z) + frk(y, w, x, z) + frk(z, w, x, y)) * (1.0 / 3.0);
                        rhs = rhs + a.S(x, y, w) * a.dt(z) + a.S(y, z, w) * a.dt(x) + a.S(x, z, w) * a.dt(y) +
                              a.S(x, y, z) * a.dt(w);
                        rhs = rhs + (scr(y, z) * g(x, w) + scr(x, z) * g(y, w) + scr(x, y) * g(z, w)) *
                                        (4.0 / (3.0 * (nn - 2.0)));
                        rhs = rhs - (sgrad(y, z) * g(x, w) + sgrad(x, z) * g(y, w) + sgrad(x, y) * g(z, w));
                        Jet br = (g(x, y) * scr(z, w) + g(y, z) * scr(x, w) + g(z, x) * scr(y, w)) *
                                     ((2.0 / 9.0) * (nn + 2.0) / (nn - 2.0)) +
                                 (g(x, y) * g(z, w) + g(y, z) * g(x, w) + g(z, x) * g(y, w)) * s2 *
                                     (4.0 / (9.0 * (nn - 2.0)));
                        rhs = rhs - br * (3.0 / (nn + 2.0));
                        worst = std::max(worst, std::abs((nS(x, y, z, w) * 3.0 - rhs).value()));
                    }
        out.push_back({"ds_full", worst});
    }
    // U(X,Y,û) = 2/(n−2) 𝒰̊ − (1/n) div U, with U = S/3, u = dt/3
    {
        JetTensor U = a.S * (1.0 / 3.0);
        JetTensor uhat = a.gradt * (1.0 / 3.0);
        JetTensor lhs = feed_last(U, uhat);
        JetTensor rhs = tracefree2(script_square(U, gi), g, gi) * (2.0 / (nn - 2.0)) - a.pg.divergence(U) * (1.0 / nn);
        out.push_back({"div_u_formula", max_abs(values(lhs - rhs))});
    }
    return out;
}

// Identities for a symmetric cubic split into (U, u), evaluated from jets (G at order ≥ 1).
inline std::vector<PointResidual> cubic_split_identity_residuals(const PointGeometry& pg, const JetTensor& U,
                                                                 const JetTensor& u) {
    const double n = pg.n;
    const JetTensor& G = pg.g;
    const JetTensor& Gi = pg.ginv;
    JetTensor C = recompose_cubic(U, u, G);
    JetTensor uhat = raise(u, 0, Gi);
    Jet u2 = norm2(u, G, Gi);
    std::vector<PointResidual> out;
    {
        JetTensor lhs = tracefree2(script_square(C, Gi), G, Gi);
        JetTensor rhs = tracefree2(script_square(U, Gi), G, Gi) + feed_last(U, uhat) * 4.0 +
                        (outer(u, u) - G.scaled(u2 * (1.0 / n))) * (n + 6.0);
        out.push_back({"script_c", max_abs(values(lhs - rhs))});
    }
    {
        JetTensor nu = pg.nabla(u);  // (Y, X) = ∇_Y u(X)
        JetTensor lhs = pg.divergence(C);
        JetTensor rhs = pg.divergence(U) + nu + permute(nu, {1, 0}) + G.scaled(trace2(nu, Gi));
        out.push_back({"div_c", max_abs(values(lhs - rhs))});
    }
    return out;
}

// ---- reverse direction ------------------------------------------------------------------

// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                               int max_depth = 40) {
    struct Rec {
        const std::function<double(double)>& f;
        double go(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const double diff = left + right - whole;
            if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
            return go(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + go(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    } rec{f};
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec.go(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, max_depth);
}

// Tensor-product Chebyshev interpolant on a box, evaluated as a jet.
class ChebyshevField {
public:
    ChebyshevField(std::vector<Interval> box, int nodes) : box_(std::move(box)), N_(nodes) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < box_.size(); ++i) total *= N_;
        coeff_.assign(total, 0.0);
    }

    int dim() const { return static_cast<int>(box_.size()); }
    int nodes() const { return N_; }
    std::size_t size() const { return coeff_.size(); }

    // Node j along axis i (Chebyshev–Gauss points).
    double node(int axis, int j) const {
        const double s = std::cos(std::numbers::pi * (j + 0.5) / N_);
        return 0.5 * (box_[axis].lo + box_[axis].hi) + 0.5 * (box_[axis].hi - box_[axis].lo) * s;
    }
    Point node_point(std::size_t flat) const {
        Point p(dim());
        for (int i = dim() - 1; i >= 0; --i) {
            p[i] = node(i, static_cast<int>(flat % N_));
            flat /= N_;
        }
        return p;
    }

    // Converts samples at node_point(0..size-1) into series coefficients.
    void fit(std::vector<double> samples) {
        if (samples.size() != coeff_.size()) throw GeometryError("ChebyshevField: sample count mismatch");
        std::size_t stride = 1;
        std::vector<double> line(N_), out(N_);
        for (int axis = dim() - 1; axis >= 0; --axis) {
            const std::size_t block = stride * N_;
            for (std::size_t base = 0; base < samples.size(); base += block)
                for (std::size_t off = 0; off < stride; ++off) {
                    for (int j = 0; j < N_; ++j) line[j] = samples[base + off + j * stride];
                    for (int k = 0; k < N_; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < N_; ++j) acc += line[j] * std::cos(std::numbers::pi * k * (j + 0.5) / N_);
                        out[k] = acc * (k == 0 ? 1.0 : 2.0) / N_;
                    }
                    for (int k = 0; k < N_; ++k) samples[base + off + k * stride] = out[k];
                }
            stride *= N_;
        }
        coeff_ = std::move(samples);
    }

    Jet operator()(std::span<const double> p, int order) const {
        const int n = dim();
        std::vector<std::vector<Jet>> T(n);
        for (int i = 0; i < n; ++i) {
            const double c = 0.5 * (box_[i].lo + box_[i].hi), h = 0.5 * (box_[i].hi - box_[i].lo);
            Jet s = (Jet::seed(i, p[i], n, order) - c) * (1.0 / h);
            T[i].reserve(N_);
            T[i].push_back(Jet(n, order, 1.0));
            if (N_ > 1) T[i].push_back(s);
            for (int k = 2; k < N_; ++k) T[i].push_back(s * T[i][k - 1] * 2.0 - T[i][k - 2]);
        }
        return fold(T, 0, 0, order);
    }

private:
    Jet fold(const std::vector<std::vector<Jet>>& T, int axis, std::size_t offset, int order) const {
        const int n = dim();
        Jet acc(n, order, 0.0);
        std::size_t stride = 1;
        for (int i = axis + 1; i < n; ++i) stride *= N_;
        for (int k = 0; k < N_; ++k) {
            const std::size_t off = offset + k * stride;
            if (axis == n - 1) acc = acc + T[axis][k] * coeff_[off];
            else acc = acc + T[axis][k] * fold(T, axis + 1, off, order);
        }
        return acc;
    }

    std::vector<Interval> box_;
    int N_;
    std::vector<double> coeff_;
};

struct RecoverOptions {
    int nodes = 0;  // per axis; 0 picks a default by dimension
    double closed_tol = 1e-8;
    double quad_tol = 1e-10;
    SampleSpec closed_samples{{4}, 10, 3};
    unsigned threads = 0;  // 0 = hardware concurrency
};

inline int default_recover_nodes(int n) { return n == 2 ? 32 : n == 3 ? 12 : 8; }

// (U, u) values at a point without building the connection
inline std::pair<TensorValue, TensorValue> split_values(const HypersurfaceData& hs, const Point& p) {
    return decompose_cubic(values(hs.C(p, 0)), values(hs.G(p, 0)));
}

// max |du| at a point
inline double closedness_defect(const HypersurfaceData& hs, const Point& p) {
    HsPoint h = HsPoint::at(hs, p, 1);
    double m = 0.0;
    for (int i = 0; i < h.n; ++i)
        for (int j = 0; j < i; ++j) m = std::max(m, std::abs(h.u(j).d(i).value() - h.u(i).d(j).value()));
    return m;
}

// 3∫ u along the straight segment from `base` to `p`
inline double integrate_potential(const HypersurfaceData& hs, const Point& base, const Point& p, double tol = 1e-10) {
    const int n = hs.dim();
    Point dir(n);
    for (int i = 0; i < n; ++i) dir[i] = p[i] - base[i];
    Point q(n);
    auto f = [&](double s) {
        for (int i = 0; i < n; ++i) q[i] = base[i] + s * dir[i];
        const TensorValue u = split_values(hs, q).second;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += u(i) * dir[i];
        return 3.0 * acc;
    };
    return adaptive_simpson(f, 0.0, 1.0, tol);
}

// Abundant data (G, S = 3U, t = 3∫u with t(base) = 0) from hypersurface data.
inline AbundantData recover_abundant(const HypersurfaceData& hs, const Point& base, const RecoverOptions& opt = {}) {
    const Chart& chart = hs.chart;
    const int n = hs.dim();
    if (static_cast<int>(base.size()) != n || !chart.contains(base))
        throw GeometryError("recover_abundant: base point outside the chart domain");
    for (const auto& p : sample_points(chart, opt.closed_samples)) {
        const double defect = closedness_defect(hs, p);
        if (!(defect < opt.closed_tol))
            throw PreconditionError("recover_abundant: u is not closed (|du| = " + std::to_string(defect) + ")");
    }

    const int N = opt.nodes > 0 ? opt.nodes : default_recover_nodes(n);
    const auto tuples = sorted_tuples(n, 3);
    ChebyshevField proto(chart.box, N);
    const std::size_t total = proto.size();
    std::vector<std::vector<double>> s_samples(tuples.size(), std::vector<double>(total));
    std::vector<double> t_samples(total);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t f = begin; f < end; ++f) {
            const Point p = proto.node_point(f);
            const TensorValue U = split_values(hs, p).first;
            for (std::size_t c = 0; c < tuples.size(); ++c) {
                const auto& ix = tuples[c];
                s_samples[c][f] = 3.0 * U(ix[0], ix[1], ix[2]);
            }
            t_samples[f] = integrate_potential(hs, base, p, opt.quad_tol);
        }
    };
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (total + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t b = w * chunk, e = std::min(total, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
    }

    AbundantData d;
    d.name = hs.name.empty() ? "recovered" : hs.name + "-recovered";
    d.geo.chart = chart;
    auto G = hs.G;
    for (const auto& ij : sorted_tuples(n, 2)) {
        const int i = ij[0], j = ij[1];
        d.geo.metric.push_back(ScalarField([G, i, j](std::span<const double> p, int k) { return G(p, k)(i, j); }));
    }
    for (auto& samples : s_samples) {
        auto field = std::make_shared<ChebyshevField>(proto);
        field->fit(std::move(samples));
        d.S.push_back(ScalarField([field](std::span<const double> p, int k) { return (*field)(p, k); }));
    }
    // Values come from the interpolant (shifted so that t(base) = 0); derivatives are dt = 3u exactly.
    auto tf = std::make_shared<ChebyshevField>(proto);
    tf->fit(std::move(t_samples));
    const double t0 = (*tf)(base, 0).value();
    auto C = hs.C;
    d.t = ScalarField([tf, t0, G, C, n](std::span<const double> p, int k) {
        const double value = (*tf)(p, 0).value() - t0;
        if (k == 0) return Jet(n, 0, value);
        const JetTensor u = decompose_cubic(C(p, k - 1), G(p, k - 1)).second;
        std::vector<Jet> grad;
        for (int i = 0; i < n; ++i) grad.push_back(u(i) * 3.0);
        return Jet::from_gradient(value, grad, n, k);
    });
    return d;
}

}  // namespace ahyp
