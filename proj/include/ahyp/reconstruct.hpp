#pragma once

// Immersion recovery by integrating the flat connection on TM ⊕ ℝ, flatness and
// convergence checks, affine and quadric fits, OBJ export.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypersurface.hpp"

namespace ahyp {

class ReconstructError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultStep = 1e-3;
inline constexpr double kFrameDegeneracy = 1e-10;

struct FrameState {
    Point p;
    Eigen::MatrixXd W;  // columns: flat-frame coordinates of ∂₁,…,∂ₙ, ξ
    Eigen::VectorXd f;

    static FrameState identity(const Point& p) {
        const int m = static_cast<int>(p.size()) + 1;
        return {p, Eigen::MatrixXd::Identity(m, m), Eigen::VectorXd::Zero(m)};
    }
    Eigen::VectorXd xi() const { return W.col(W.cols() - 1); }
};

// All n direction matrices ω_i at p.
inline std::vector<Eigen::MatrixXd> connection_matrices(const HypersurfaceData& hs, std::span<const double> p) {
    const int n = hs.dim();
    if (!hs.chart.contains(p)) throw ReconstructError("connection_matrix: point outside the chart domain");
    const JetTensor g = hs.G(p, 1);
    const JetTensor ginv = inverse_metric(g);
    const TensorValue gamma = values(christoffels_from(g, ginv));
    const TensorValue gv = values(g);
    const TensorValue giv = values(ginv);
    const TensorValue c = values(hs.C(p, 0));
    const TensorValue a = values(hs.A(p, 0));
    const TensorValue chat = raise(c, 2, giv);
    const TensorValue ahat = raise(a, 1, giv);
    std::vector<Eigen::MatrixXd> out(n, Eigen::MatrixXd::Zero(n + 1, n + 1));
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd& w = out[i];
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) w(k, j) = gamma(k, i, j) + chat(i, j, k);
            w(n, j) = gv(i, j);
        }
        for (int k = 0; k < n; ++k) w(k, n) = -ahat(i, k);
    }
    return out;
}

inline Eigen::MatrixXd connection_matrix(const HypersurfaceData& hs, std::span<const double> p, int i) {
    if (i < 0 || i >= hs.dim()) throw ReconstructError("connection_matrix: direction index out of range");
    return connection_matrices(hs, p)[i];
}

namespace detail {

struct FrameDerivative {
    Eigen::MatrixXd dW;
    Eigen::VectorXd df;
};

// ω(v) = Σ vⁱ ω_i at p
inline Eigen::MatrixXd omega_along(const HypersurfaceData& hs, const Point& p, const std::vector<double>& v) {
    const int n = hs.dim();
    auto om = connection_matrices(hs, p);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i) omega += v[i] * om[i];
    return omega;
}

}  // namespace detail

// Straight segment from s.p to `to` with classical RK4, step ≤ `step`.
inline FrameState integrate_segment(const HypersurfaceData& hs, FrameState s, const Point& to, double step) {
    const int n = hs.dim();
    if (!(step > 0.0)) throw ReconstructError("integrate_path: step must be positive");
    if (!hs.chart.contains(to)) throw ReconstructError("integrate_path: path leaves the chart domain");
    std::vector<double> v(n);
    double len = 0.0;
    for (int i = 0; i < n; ++i) {
        v[i] = to[i] - s.p[i];
        len += v[i] * v[i];
    }
    len = std::sqrt(len);
    if (len == 0.0) return s;
    const int m = static_cast<int>(std::ceil(len / step - 1e-12));
    const double h = 1.0 / m;  // parameter step, velocity v
    const Point start = s.p;
    auto at = [&](double tau) {
        Point q(n);
        for (int i = 0; i < n; ++i) q[i] = start[i] + tau * v[i];
        return q;
    };
    Eigen::VectorXd vp = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i < n; ++i) vp(i) = v[i];
    Eigen::MatrixXd om0 = detail::omega_along(hs, start, v);
    for (int k = 0; k < m; ++k) {
        const double t0 = static_cast<double>(k) / m;
        const Point pm = at(t0 + 0.5 * h), p1 = (k + 1 == m) ? to : at(t0 + h);
        const Eigen::MatrixXd omm = detail::omega_along(hs, pm, v);
        const Eigen::MatrixXd om1 = detail::omega_along(hs, p1, v);
        const Eigen::MatrixXd W1 = s.W * om0;
        const Eigen::MatrixXd W2 = (s.W + 0.5 * h * W1) * omm;
        const Eigen::MatrixXd W3 = (s.W + 0.5 * h * W2) * omm;
        const Eigen::MatrixXd W4 = (s.W + h * W3) * om1;
        // f' = W·v, so the stages reuse the W stages
        const Eigen::VectorXd f1 = s.W * vp, f2 = (s.W + 0.5 * h * W1) * vp, f3 = (s.W + 0.5 * h * W2) * vp,
                              f4 = (s.W + h * W3) * vp;
        s.W += (h / 6.0) * (W1 + 2.0 * W2 + 2.0 * W3 + W4);
        s.f += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
        s.p = p1;
        om0 = om1;
        if (!(std::abs(s.W.determinant()) > kFrameDegeneracy))
            throw ReconstructError("integrate_path: frame degenerates along the path");
    }
    return s;
}

// Polyline path; the state starts at the identity on path.front().
inline FrameState integrate_path(const HypersurfaceData& hs, const std::vector<Point>& path,
                                 double step = kDefaultStep) {
    if (path.empty()) throw ReconstructError("integrate_path: empty path");
    if (!hs.chart.contains(path.front())) throw ReconstructError("integrate_path: path leaves the chart domain");
    FrameState s = FrameState::identity(path.front());
    for (std::size_t i = 1; i < path.size(); ++i) s = integrate_segment(hs, std::move(s), path[i], step);
    return s;
}

// Axis-by-axis path from `from` to `to`, visiting axes in `order`.
inline std::vector<Point> axis_path(const Point& from, const Point& to, const std::vector<int>& order) {
    std::vector<Point> path{from};
    Point cur = from;
    for (int axis : order) {
        if (cur[axis] == to[axis]) continue;
        cur[axis] = to[axis];
        path.push_back(cur);
    }
    return path;
}

inline std::vector<int> axis_order(int n, bool reversed = false) {
    std::vector<int> o(n);
    for (int i = 0; i < n; ++i) o[i] = reversed ? n - 1 - i : i;
    return o;
}

// ---- grids -------------------------------------------------------------------------------

struct GridSpec {
    std::vector<int> counts;              // nodes per axis (≥ 2), one entry per axis
    std::optional<std::vector<Interval>> box;  // defaults to the chart box
    std::optional<Point> base;            // defaults to the box center
};

struct ImmersionSample {
    Point p;
    Eigen::VectorXd f;
    Eigen::VectorXd xi;
    Eigen::MatrixXd W;
};

struct ImmersionGrid {
    std::vector<int> counts;
    Point base;
    std::vector<ImmersionSample> samples;  // row-major: last axis fastest
};

inline std::vector<std::vector<double>> grid_axes(const std::vector<Interval>& box, const std::vector<int>& counts) {
    std::vector<std::vector<double>> axes(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
        if (counts[i] < 2) throw ReconstructError("immerse_grid: at least two nodes per axis are required");
        for (int j = 0; j < counts[i]; ++j)
            axes[i].push_back(box[i].lo + (box[i].hi - box[i].lo) * j / (counts[i] - 1.0));
    }
    return axes;
}

namespace detail {

// States reached from `s` by moving along `axis` to every node value, in node order.
inline std::vector<FrameState> sweep_axis(const HypersurfaceData& hs, const FrameState& s, int axis,
                                          const std::vector<double>& nodes, double step) {
    std::vector<FrameState> out(nodes.size());
    // nodes above and below the start are reached by walking outward
    std::size_t split = 0;
    while (split < nodes.size() && nodes[split] < s.p[axis]) ++split;
    FrameState cur = s;
    for (std::size_t j = split; j < nodes.size(); ++j) {
        Point to = cur.p;
        to[axis] = nodes[j];
        cur = integrate_segment(hs, std::move(cur), to, step);
        out[j] = cur;
    }
    cur = s;
    for (std::size_t j = split; j-- > 0;) {
        Point to = cur.p;
        to[axis] = nodes[j];
        cur = integrate_segment(hs, std::move(cur), to, step);
        out[j] = cur;
    }
    return out;
}

inline void sweep(const HypersurfaceData& hs, const FrameState& s, int axis,
                  const std::vector<std::vector<double>>& axes, double step, std::vector<FrameState>& out) {
    auto line = sweep_axis(hs, s, axis, axes[axis], step);
    if (axis + 1 == static_cast<int>(axes.size())) {
        for (auto& st : line) out.push_back(std::move(st));
        return;
    }
    for (const auto& st : line) sweep(hs, st, axis + 1, axes, step, out);
}

}  // namespace detail

inline ImmersionGrid immerse_grid(const HypersurfaceData& hs, const GridSpec& spec, double step = kDefaultStep) {
    const int n = hs.dim();
    const std::vector<Interval> box = spec.box.value_or(hs.chart.box);
    if (static_cast<int>(box.size()) != n || static_cast<int>(spec.counts.size()) != n)
        throw ReconstructError("immerse_grid: grid dimension does not match the chart");
    for (int i = 0; i < n; ++i)
        if (box[i].lo < hs.chart.box[i].lo - 1e-12 || box[i].hi > hs.chart.box[i].hi + 1e-12)
            throw ReconstructError("immerse_grid: grid box leaves the chart domain");
    Point base(n);
    for (int i = 0; i < n; ++i) base[i] = 0.5 * (box[i].lo + box[i].hi);
    if (spec.base) base = *spec.base;
    if (!hs.chart.contains(base)) throw ReconstructError("immerse_grid: base point outside the chart domain");
    const auto axes = grid_axes(box, spec.counts);
    std::vector<FrameState> states;
    detail::sweep(hs, FrameState::identity(base), 0, axes, step, states);
    ImmersionGrid grid{spec.counts, base, {}};
    for (auto& st : states) grid.samples.push_back({st.p, st.f, st.xi(), st.W});
    return grid;
}

// ---- flatness and convergence ---------------------------------------------------------------

inline double holonomy_residual(const HypersurfaceData& hs, const std::vector<Point>& loop,
                                double step = kDefaultStep) {
    if (loop.size() < 2) throw ReconstructError("holonomy_residual: loop needs at least two vertices");
    double gap = 0.0;
    for (std::size_t i = 0; i < loop.front().size(); ++i) gap = std::max(gap, std::abs(loop.front()[i] - loop.back()[i]));
    if (gap > 1e-12) throw ReconstructError("holonomy_residual: loop is not closed");
    FrameState s = integrate_path(hs, loop, step);
    const int m = static_cast<int>(s.W.rows());
    return (s.W - Eigen::MatrixXd::Identity(m, m)).norm();
}

// Axis-aligned square loop in the (x₀, x₁) plane centered in the chart box. The side is
// `side`, or the largest that fits when the box is narrower.
inline std::vector<Point> square_loop(const Chart& chart, double side = 1.0) {
    Point c = chart.center();
    double s = side;
    for (int i = 0; i < 2; ++i) s = std::min(s, chart.box[i].hi - chart.box[i].lo);
    const double h = 0.5 * s;
    std::vector<Point> loop;
    const double corners[5][2] = {{-h, -h}, {h, -h}, {h, h}, {-h, h}, {-h, -h}};
    for (const auto& cr : corners) {
        Point p = c;
        p[0] = std::clamp(c[0] + cr[0], chart.box[0].lo, chart.box[0].hi);
        p[1] = std::clamp(c[1] + cr[1], chart.box[1].lo, chart.box[1].hi);
        loop.push_back(p);
    }
    return loop;
}

inline constexpr double kRichardsonStep = 0.02;

struct ConvergenceOrder {
    double order = 0.0;
    bool exact = false;  // differences at rounding level: integration is exact
    double diff_coarse = 0.0, diff_fine = 0.0;
    bool pass(double min_order = 3.8) const { return exact || order >= min_order; }
};

inline double state_distance(const FrameState& a, const FrameState& b) {
    return std::sqrt((a.W - b.W).squaredNorm() + (a.f - b.f).squaredNorm());
}

// Richardson estimate of the RK4 order along `path` with steps h, h/2, h/4.
inline ConvergenceOrder richardson_order(const HypersurfaceData& hs, const std::vector<Point>& path, double h = kRichardsonStep) {
    FrameState a = integrate_path(hs, path, h);
    FrameState b = integrate_path(hs, path, h / 2);
    FrameState c = integrate_path(hs, path, h / 4);
    ConvergenceOrder r;
    r.diff_coarse = state_distance(a, b);
    r.diff_fine = state_distance(b, c);
    if (r.diff_coarse < 1e-13 || r.diff_fine < 1e-13) {
        r.exact = r.diff_coarse < 1e-13 && r.diff_fine < 1e-13;
        r.order = r.exact ? std::numeric_limits<double>::infinity() : 0.0;
        return r;
    }
    r.order = std::log2(r.diff_coarse / r.diff_fine);
    return r;
}

// Endpoint mismatch between x-first and reversed axis orderings.
inline double path_independence(const HypersurfaceData& hs, const Point& from, const Point& to,
                                double step = kDefaultStep) {
    const int n = hs.dim();
    FrameState a = integrate_path(hs, axis_path(from, to, axis_order(n)), step);
    FrameState b = integrate_path(hs, axis_path(from, to, axis_order(n, true)), step);
    return state_distance(a, b);
}

// ---- fits ------------------------------------------------------------------------------------

struct AffineFit {
    Eigen::MatrixXd L;
    Eigen::VectorXd b;
    double rms = 0.0;
};

// Least squares L·rec + b ≈ ref.
inline AffineFit affine_fit(const std::vector<Eigen::VectorXd>& rec, const std::vector<Eigen::VectorXd>& ref) {
    if (rec.size() != ref.size() || rec.empty()) throw ReconstructError("affine_fit: sample count mismatch");
    const int d = static_cast<int>(rec.front().size());
    const int e = static_cast<int>(ref.front().size());
    const int m = static_cast<int>(rec.size());
    if (m < d * (d + 1)) throw ReconstructError("affine_fit: too few samples");
    Eigen::MatrixXd X(m, d + 1);
    Eigen::MatrixXd Y(m, e);
    for (int r = 0; r < m; ++r) {
        X.row(r).head(d) = rec[r].transpose();
        X(r, d) = 1.0;
        Y.row(r) = ref[r].transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-12);
    if (qr.rank() < d + 1) throw ReconstructError("affine_fit: samples are affinely degenerate");
    Eigen::MatrixXd sol = qr.solve(Y);  // (d+1) × e
    AffineFit fit;
    fit.L = sol.topRows(d).transpose();
    fit.b = sol.row(d).transpose();
    fit.rms = std::sqrt((X * sol - Y).squaredNorm() / m);
    return fit;
}

inline AffineFit affine_fit(const ImmersionGrid& grid, const std::function<Point(const Point&)>& reference) {
    std::vector<Eigen::VectorXd> rec, ref;
    for (const auto& s : grid.samples) {
        rec.push_back(s.f);
        Point r = reference(s.p);
        ref.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    }
    return affine_fit(rec, ref);
}

struct QuadricFit {
    Eigen::VectorXd coefficients;  // monomials 1, x_i, x_i x_j (i ≤ j) in normalized coordinates
    Eigen::VectorXd center;
    double scale = 1.0;
    double ratio = 0.0;            // σ_min / σ_max
};

inline QuadricFit quadric_fit(const std::vector<Eigen::VectorXd>& pts) {
    if (pts.empty()) throw ReconstructError("quadric_fit: no samples");
    const int d = static_cast<int>(pts.front().size());
    const int mono = (d + 1) * (d + 2) / 2;
    const int m = static_cast<int>(pts.size());
    if (m < 2 * mono) throw ReconstructError("quadric_fit: too few samples");
    QuadricFit q;
    q.center = Eigen::VectorXd::Zero(d);
    for (const auto& p : pts) q.center += p;
    q.center /= m;
    double spread = 0.0;
    for (const auto& p : pts) spread = std::max(spread, (p - q.center).cwiseAbs().maxCoeff());
    if (!(spread > 0.0)) throw ReconstructError("quadric_fit: degenerate sample configuration");
    q.scale = 1.0 / spread;
    Eigen::MatrixXd M(m, mono);
    for (int r = 0; r < m; ++r) {
        Eigen::VectorXd x = (pts[r] - q.center) * q.scale;
        int c = 0;
        M(r, c++) = 1.0;
        for (int i = 0; i < d; ++i) M(r, c++) = x(i);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) M(r, c++) = x(i) * x(j);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0)) throw ReconstructError("quadric_fit: degenerate sample configuration");
    q.ratio = sv(mono - 1) / sv(0);
    q.coefficients = svd.matrixV().col(mono - 1);
    return q;
}

inline QuadricFit quadric_fit(const ImmersionGrid& grid) {
    std::vector<Eigen::VectorXd> pts;
    for (const auto& s : grid.samples) pts.push_back(s.f);
    return quadric_fit(pts);
}

// ---- export ----------------------------------------------------------------------------------

struct Mesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;  // 0-based
};

// Vertex k = i·N₁ + j for node (i, j); each grid cell gives two triangles.
inline Mesh grid_mesh(const ImmersionGrid& grid) {
    if (grid.counts.size() != 2) throw ReconstructError("export_mesh: only two-dimensional grids are supported");
    const int n0 = grid.counts[0], n1 = grid.counts[1];
    if (static_cast<int>(grid.samples.size()) != n0 * n1) throw ReconstructError("export_mesh: samples do not form a grid");
    Mesh mesh;
    for (const auto& s : grid.samples) {
        if (s.f.size() != 3) throw ReconstructError("export_mesh: expected points in R^3");
        mesh.vertices.emplace_back(s.f(0), s.f(1), s.f(2));
    }
    for (int i = 0; i + 1 < n0; ++i)
        for (int j = 0; j + 1 < n1; ++j) {
            const int a = i * n1 + j, b = (i + 1) * n1 + j, c = (i + 1) * n1 + j + 1, d = i * n1 + j + 1;
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    return mesh;
}

inline std::string obj_text(const Mesh& mesh) {
    std::string out;
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v(0), v(1), v(2));
        out += buf;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out += buf;
    }
    return out;
}

inline void export_mesh(const ImmersionGrid& grid, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ReconstructError("export_mesh: cannot open " + path);
    os << obj_text(grid_mesh(grid));
    if (!os) throw ReconstructError("export_mesh: write failed for " + path);
}

}  // namespace ahyp
