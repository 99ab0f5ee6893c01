#pragma once

// Per-condition residual tables accumulated over sample points.

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace ahyp {

inline constexpr double kDefaultTol = 1e-8;

struct ResidualRow {
    std::string name;
    double max_residual = 0.0;
    double tol = kDefaultTol;
    bool trivial = false;  // holds identically (e.g. for dimensional reasons)
    int evaluated = 0;
    Point worst_point;

    bool pass() const { return trivial || (evaluated > 0 && max_residual <= tol); }
};

struct ResidualReport {
    std::vector<ResidualRow> rows;
    int points = 0;
    int failed_points = 0;
    std::vector<std::string> errors;  // first few per-point evaluation errors

    ResidualRow& row(const std::string& name, double tol) {
        for (auto& r : rows)
            if (r.name == name) return r;
        rows.push_back(ResidualRow{name, 0.0, tol});
        return rows.back();
    }
    const ResidualRow* find(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return &r;
        return nullptr;
    }
    double residual(const std::string& name) const {
        const ResidualRow* r = find(name);
        return r ? r->max_residual : std::numeric_limits<double>::quiet_NaN();
    }
    void record(const std::string& name, double value, double tol, const Point& p) {
        ResidualRow& r = row(name, tol);
        if (r.evaluated++ == 0 || !(value <= r.max_residual)) {  // NaN propagates as a failure
            r.max_residual = std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
            r.worst_point = p;
        }
    }
    void mark_trivial(const std::string& name, double tol) { row(name, tol).trivial = true; }
    bool pass() const {
        if (rows.empty()) return false;
        return std::all_of(rows.begin(), rows.end(), [](const ResidualRow& r) { return r.pass(); });
    }
    std::vector<std::string> failing() const {
        std::vector<std::string> out;
        for (const auto& r : rows)
            if (!r.pass()) out.push_back(r.name);
        return out;
    }
    double max_residual() const {
        double m = 0.0;
        for (const auto& r : rows)
            if (!r.trivial) m = std::max(m, r.max_residual);
        return m;
    }
};

// One named residual produced at a single point.
struct PointResidual {
    std::string name;
    double value = 0.0;
    bool trivial = false;
};

// Evaluates `check` at every point; points that throw are excluded and counted.
inline ResidualReport run_checks(const std::vector<Point>& points, double tol,
                                 const std::function<std::vector<PointResidual>(const Point&)>& check) {
    ResidualReport rep;
    rep.points = static_cast<int>(points.size());
    for (const auto& p : points) {
        std::vector<PointResidual> res;
        try {
            res = check(p);
        } catch (const std::exception& e) {
            ++rep.failed_points;
            if (rep.errors.size() < 5) rep.errors.push_back(e.what());
            continue;
        }
        for (const auto& r : res) {
            if (r.trivial) rep.mark_trivial(r.name, tol);
            else rep.record(r.name, r.value, tol, p);
        }
    }
    return rep;
}

}  // namespace ahyp
