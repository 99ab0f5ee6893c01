#pragma once

// Geometric predicates on built hypersurfaces and the matching conditions on the
// abundant side.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "abundant.hpp"
#include "hypersurface.hpp"
#include "residuals.hpp"

namespace ahyp {

enum class Verdict { yes, no, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::yes: return "true";
        case Verdict::no: return "false";
        default: return "inconclusive";
    }
}

// yes below tol/10, no above 10·tol, inconclusive in between
inline Verdict verdict_for(double residual, double tol) {
    if (std::isnan(residual)) return Verdict::inconclusive;
    if (residual <= tol / 10.0) return Verdict::yes;
    if (residual >= tol * 10.0) return Verdict::no;
    return Verdict::inconclusive;
}

struct Predicate {
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    double residual = 0.0;
    double threshold = kDefaultTol;
};

struct ClassificationReport {
    std::vector<Predicate> predicates;
    std::optional<double> mu;  // relative-sphere constant when the verdict is yes
    double mu_variance = 0.0;
    int points = 0;
    int failed_points = 0;
    std::vector<std::string> errors;

    const Predicate* find(const std::string& name) const {
        for (const auto& p : predicates)
            if (p.name == name) return &p;
        return nullptr;
    }
    Verdict verdict(const std::string& name) const {
        const Predicate* p = find(name);
        return p ? p->verdict : Verdict::inconclusive;
    }
};

// Pointwise predicate residuals of a hypersurface.
struct PredicateSample {
    double u = 0.0, U = 0.0, A = 0.0, sphere = 0.0, nabla_c = 0.0, mu = 0.0;
};

inline PredicateSample predicate_sample(const HypersurfaceData& hs, const Point& p) {
    HsPoint h = HsPoint::at(hs, p, 1);
    const int n = h.n;
    PredicateSample s;
    s.u = max_abs(values(h.u));
    s.U = max_abs(values(h.U));
    const TensorValue A = values(truncated(h.A, 0));
    const TensorValue Ahat = raise(A, 1, values(h.Ginv()));
    s.A = max_abs(A);
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += Ahat(i, i);
    s.mu = -tr / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.sphere = std::max(s.sphere, std::abs(Ahat(i, j) + (i == j ? s.mu : 0.0)));
    const TensorValue nc = values(h.pg.nabla(h.C));
    for (const auto& perm : permutations_of(4)) s.nabla_c = std::max(s.nabla_c, max_abs(nc - permute(nc, perm)));
    return s;
}

inline ClassificationReport classify_all(const HypersurfaceData& hs, const std::vector<Point>& points,
                                         double tol = kDefaultTol) {
    ClassificationReport rep;
    rep.points = static_cast<int>(points.size());
    PredicateSample worst;
    std::vector<double> mus;
    for (const auto& p : points) {
        PredicateSample s;
        try {
            s = predicate_sample(hs, p);
        } catch (const std::exception& e) {
            ++rep.failed_points;
            if (rep.errors.size() < 5) rep.errors.push_back(e.what());
            continue;
        }
        worst.u = std::max(worst.u, s.u);
        worst.U = std::max(worst.U, s.U);
        worst.A = std::max(worst.A, s.A);
        worst.sphere = std::max(worst.sphere, s.sphere);
        worst.nabla_c = std::max(worst.nabla_c, s.nabla_c);
        mus.push_back(s.mu);
    }
    if (mus.empty()) {
        for (const char* name : {"blaschke", "quadric_type", "relative_sphere", "relative_sphere_dual",
                                 "improper_sphere", "graph"})
            rep.predicates.push_back({name, Verdict::inconclusive, std::nan(""), tol});
        return rep;
    }
    double mean = 0.0;
    for (double m : mus) mean += m;
    mean /= static_cast<double>(mus.size());
    double var = 0.0;
    for (double m : mus) var += (m - mean) * (m - mean);
    var /= static_cast<double>(mus.size());
    rep.mu_variance = var;

    auto add = [&](const std::string& name, double r) {
        Predicate p{name, verdict_for(r, tol), r, tol};
        rep.predicates.push_back(p);
        return p.verdict;
    };
    add("blaschke", worst.u);
    // quadric-type is a plain threshold test on |U|
    rep.predicates.push_back({"quadric_type", worst.U < tol ? Verdict::yes : Verdict::no, worst.U, tol});
    Verdict sphere = add("relative_sphere", worst.sphere);
    if (sphere == Verdict::yes && !(var < 1e-12 * (1.0 + mean * mean))) {
        rep.predicates.back().verdict = Verdict::no;
        rep.predicates.back().residual = std::max(worst.sphere, std::sqrt(var));
        sphere = Verdict::no;
    }
    add("relative_sphere_dual", worst.nabla_c);
    Verdict improper = add("improper_sphere", worst.A);
    add("graph", worst.A);
    if (improper == Verdict::yes) {
        for (auto& p : rep.predicates)
            if (p.name == "relative_sphere") p.verdict = Verdict::yes;
        rep.mu = 0.0;
    } else if (sphere == Verdict::yes) {
        rep.mu = mean;
    }
    return rep;
}

// ---- abundant side -------------------------------------------------------------------------

inline std::vector<PointResidual> graph_condition_residuals(const AbundantData& d, const Point& p) {
    const int n = d.dim();
    const double nn = n;
    AbundantPoint a = AbundantPoint::at(d, p, 2);
    CurvatureStack cs = a.pg.curvature();
    const JetTensor& g = a.g();
    const JetTensor& gi = a.ginv();
    const Jet dt2 = norm2(a.dt, g, gi);
    const Jet s2 = a.s_norm2();
    if (n >= 3) {
        JetTensor tau = tau_jets(a, cs);
        JetTensor pz = tracefree2(*cs.schouten, g, gi);
        Jet scal = (s2 - dt2 * ((nn - 1.0) * (nn + 2.0))) * (1.0 / 9.0);
        return {{"graph_schouten", max_abs(values(pz - tau * 0.125))},
                {"graph_scal", std::abs((cs.scal - scal).value())}};
    }
    JetTensor tau = tau_jets(a, cs);
    JetTensor rhs = sha_jets(a) * (2.0 / 3.0) -
                    (feed_last(a.S, a.gradt) + outer(a.dt, a.dt) - g.scaled(dt2 * 0.5)) * (8.0 / 9.0);
    Jet scal = (s2 - dt2 * 4.0) * (1.0 / 9.0);
    return {{"graph_scal_2d", std::abs((cs.scal - scal).value())}, {"graph_tau_2d", max_abs(values(tau - rhs))}};
}

inline ResidualReport graph_conditions_from_abundant(const AbundantData& d, const std::vector<Point>& points,
                                                     double tol = kDefaultTol) {
    return run_checks(points, tol, [&](const Point& p) { return graph_condition_residuals(d, p); });
}

// sup 9(Scal − |U|² + (n−1)(n+2)|u|²) with U = S/3, u = dt/3, after checking τ ≡ 0 and ∇Riem ≡ 0.
inline double perfect_square_residual(const AbundantData& d, const std::vector<Point>& points,
                                      double tol = kDefaultTol) {
    const int n = d.dim();
    if (n < 3) throw PreconditionError("perfect_square_residual: n >= 3 required");
    const double nn = n;
    double worst = 0.0;
    for (const auto& p : points) {
        AbundantPoint a = AbundantPoint::at(d, p, 3);
        CurvatureStack cs = a.pg.curvature();
        const double tau_norm = max_abs(values(tau_jets(a, cs)));
        if (!(tau_norm < tol)) throw PreconditionError("perfect_square_residual: tau does not vanish");
        const double nabla_riem = max_abs(values(a.pg.nabla(cs.riem)));
        if (!(nabla_riem < tol)) throw PreconditionError("perfect_square_residual: curvature is not parallel");
        const Jet U2 = a.s_norm2() * (1.0 / 9.0);
        const Jet u2 = norm2(a.dt, a.g(), a.ginv()) * (1.0 / 9.0);
        const double v = 9.0 * (cs.scal - U2 + u2 * ((nn - 1.0) * (nn + 2.0))).value();
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

}  // namespace ahyp
