#pragma once

// JSON reports (schema_version 1).

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "classify.hpp"
#include "residuals.hpp"
#include "spec_io.hpp"

namespace ahyp {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolName = "ahyp";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// NaN and infinities become null.
inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json point_json(const Point& p) {
    Json a = Json::array();
    for (double x : p) a.push_back(number_json(x));
    return a;
}

inline Json residual_report_json(const std::string& name, const ResidualReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({{"name", r.name},
                        {"max_residual", number_json(r.max_residual)},
                        {"tol", r.tol},
                        {"trivial", r.trivial},
                        {"evaluated", r.evaluated},
                        {"pass", r.pass()},
                        {"worst_point", point_json(r.worst_point)}});
    }
    Json j{{"name", name},
           {"pass", rep.pass() && rep.failed_points == 0},
           {"points", rep.points},
           {"failed_points", rep.failed_points},
           {"max_residual", number_json(rep.max_residual())},
           {"rows", rows}};
    if (!rep.errors.empty()) j["errors"] = rep.errors;
    return j;
}

inline Json classification_json(const ClassificationReport& rep) {
    Json preds = Json::array();
    for (const auto& p : rep.predicates)
        preds.push_back({{"name", p.name},
                         {"verdict", to_string(p.verdict)},
                         {"residual", number_json(p.residual)},
                         {"threshold", p.threshold}});
    Json j{{"predicates", preds},
           {"mu", rep.mu ? number_json(*rep.mu) : Json(nullptr)},
           {"mu_variance", number_json(rep.mu_variance)},
           {"points", rep.points},
           {"failed_points", rep.failed_points}};
    if (!rep.errors.empty()) j["errors"] = rep.errors;
    return j;
}

struct ReportSettings {
    double tol = kDefaultTol;
    std::uint64_t seed = 1;
    std::vector<int> grid;
    int random = 0;
    double step = 0.0;
    int order = 0;
};

inline Json report_envelope(const std::string& command, const RunSpec& spec, const ReportSettings& s) {
    Json box = Json::array();
    for (const auto& iv : spec.chart.box) box.push_back({iv.lo, iv.hi});
    return Json{{"schema_version", kReportSchemaVersion},
                {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
                {"command", command},
                {"system", {{"name", spec.name}, {"dimension", spec.dim()}, {"coords", spec.chart.coords}, {"box", box}}},
                {"settings",
                 {{"tol", s.tol}, {"seed", s.seed}, {"grid", s.grid}, {"random", s.random}, {"step", s.step},
                  {"order", s.order}}},
                {"checks", Json::array()},
                {"pass", true}};
}

// Appends a check and folds its verdict into the report's overall pass flag.
inline void add_check(Json& report, Json check) {
    const bool ok = check.value("pass", false);
    report["checks"].push_back(std::move(check));
    report["pass"] = report["pass"].get<bool>() && ok;
}

}  // namespace ahyp
