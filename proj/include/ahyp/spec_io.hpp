#pragma once

// TOML run specifications: parsing, validation, and serialization of catalog entries.

#include <toml.hpp>

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "exprlang.hpp"
#include "geometry.hpp"
#include "residuals.hpp"

namespace ahyp {

class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunSpec {
    std::string name = "system";
    Chart chart;
    std::vector<std::string> g;  // packed over sorted index pairs
    std::vector<std::string> S;  // packed over sorted index triples
    std::string t = "0";
    std::optional<std::string> omega;

    SampleSpec samples{{10}, 100, 1};
    double tol = kDefaultTol;
    int order = 3;

    std::vector<int> mesh_grid;  // reconstruct grid, defaults to 20 per axis
    double step = 1e-3;
    std::vector<std::string> reference;
    std::optional<Point> base;

    ExpectedFlags expected;
    std::string out_dir = ".";

    int dim() const { return chart.dim(); }

    AbundantData data() const {
        AbundantData d;
        d.name = name;
        d.geo.chart = chart;
        for (const auto& e : g) d.geo.metric.push_back(chart.field(e));
        for (const auto& e : S) d.S.push_back(chart.field(e));
        d.t = chart.field(t);
        return d;
    }

    std::vector<int> reconstruct_grid() const { return mesh_grid.empty() ? std::vector<int>(dim(), 20) : mesh_grid; }
};

namespace detail {

inline double number(const toml::node& n, const std::string& key) {
    if (auto d = n.value<double>()) return *d;
    throw SpecError("spec: '" + key + "' must be a number");
}

inline std::vector<std::string> string_array(const toml::node_view<const toml::node>& v, const std::string& key) {
    const toml::array* arr = v.as_array();
    if (!arr) throw SpecError("spec: '" + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *arr) {
        auto s = e.value<std::string>();
        if (!s) throw SpecError("spec: '" + key + "' must contain only strings");
        out.push_back(*s);
    }
    return out;
}

inline std::vector<int> grid_counts(const toml::node_view<const toml::node>& v, const std::string& key) {
    if (auto k = v.value<int64_t>()) return {static_cast<int>(*k)};
    const toml::array* arr = v.as_array();
    if (!arr) throw SpecError("spec: '" + key + "' must be an integer or an array of integers");
    std::vector<int> out;
    for (const auto& e : *arr) {
        auto k = e.value<int64_t>();
        if (!k) throw SpecError("spec: '" + key + "' must contain integers");
        out.push_back(static_cast<int>(*k));
    }
    return out;
}

// Absent keys give nullopt; present keys of the wrong type throw.
template <class T>
std::optional<T> optional_value(const toml::node_view<const toml::node>& v, const std::string& key) {
    if (!v) return std::nullopt;
    if (auto x = v.value<T>()) return *x;
    throw SpecError("spec: '" + key + "' has the wrong type");
}

inline std::optional<bool> flag(const toml::node_view<const toml::node>& v, const std::string& key) {
    return optional_value<bool>(v, key);
}

inline void check_expr(const Chart& chart, const std::string& src, const std::string& where) {
    try {
        parse(src, chart.declared());
    } catch (const ParseError& e) {
        throw SpecError("spec: " + where + ": " + e.what());
    }
}

}  // namespace detail

// Validates sizes and expressions; throws SpecError.
inline void validate(const RunSpec& s) {
    const int n = s.dim();
    if (n < 2 || n > kMaxJetDim) throw SpecError("spec: dimension must be between 2 and " + std::to_string(kMaxJetDim));
    if (static_cast<int>(s.chart.box.size()) != n) throw SpecError("spec: box must have one interval per coordinate");
    for (const auto& iv : s.chart.box)
        if (!(iv.lo < iv.hi)) throw SpecError("spec: box intervals must satisfy lo < hi");
    const std::size_t ng = sorted_tuples(n, 2).size(), ns = sorted_tuples(n, 3).size();
    if (s.g.size() != ng)
        throw SpecError("spec: metric needs " + std::to_string(ng) + " entries, got " + std::to_string(s.g.size()));
    if (s.S.size() != ns)
        throw SpecError("spec: S needs " + std::to_string(ns) + " entries, got " + std::to_string(s.S.size()));
    for (std::size_t i = 0; i < s.g.size(); ++i) detail::check_expr(s.chart, s.g[i], "g[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < s.S.size(); ++i) detail::check_expr(s.chart, s.S[i], "S[" + std::to_string(i) + "]");
    detail::check_expr(s.chart, s.t, "t");
    if (s.omega) detail::check_expr(s.chart, *s.omega, "omega");
    for (std::size_t i = 0; i < s.reference.size(); ++i)
        detail::check_expr(s.chart, s.reference[i], "reference[" + std::to_string(i) + "]");
    if (!s.reference.empty() && static_cast<int>(s.reference.size()) != n + 1)
        throw SpecError("spec: reference immersion needs n+1 components");
    const auto& sg = s.samples.grid;
    if (!sg.empty() && sg.size() != 1 && static_cast<int>(sg.size()) != n)
        throw SpecError("spec: sampling.grid needs 1 or n counts");
    for (int c : sg)
        if (c < 1) throw SpecError("spec: sampling.grid counts must be positive");
    if (s.samples.random < 0) throw SpecError("spec: sampling.random must be non-negative");
    if (sg.empty() && s.samples.random == 0) throw SpecError("spec: sampling selects no points");
    if (!s.mesh_grid.empty() && static_cast<int>(s.mesh_grid.size()) != n)
        throw SpecError("spec: reconstruct.grid needs 1 or n counts");
    for (int c : s.mesh_grid)
        if (c < 2) throw SpecError("spec: reconstruct.grid counts must be at least 2");
    if (!(s.tol > 0.0)) throw SpecError("spec: tol must be positive");
    if (!(s.step > 0.0)) throw SpecError("spec: step must be positive");
    if (s.order < 3 || s.order > kMaxJetOrder)
        throw SpecError("spec: jet order cap must be between 3 and " + std::to_string(kMaxJetOrder));
    if (s.base && (static_cast<int>(s.base->size()) != n || !s.chart.contains(*s.base)))
        throw SpecError("spec: base point must lie in the box");
}

inline RunSpec parse_spec(std::string_view text, const std::string& source_name = "spec") {
    toml::table tbl;
    try {
        tbl = toml::parse(text, source_name);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "spec: " << e.description() << " at line " << e.source().begin.line;
        throw SpecError(os.str());
    }
    const toml::node_view<const toml::node> root{static_cast<const toml::node&>(tbl)};
    RunSpec s;
    if (auto nm = detail::optional_value<std::string>(root["name"], "name")) s.name = *nm;
    s.chart.coords = detail::string_array(root["chart"]["coords"], "chart.coords");
    const toml::array* box = root["chart"]["box"].as_array();
    if (!box) throw SpecError("spec: missing 'chart.box'");
    for (const auto& iv : *box) {
        const toml::array* pair = iv.as_array();
        if (!pair || pair->size() != 2) throw SpecError("spec: each box entry must be [lo, hi]");
        s.chart.box.push_back({detail::number(*pair->get(0), "chart.box"), detail::number(*pair->get(1), "chart.box")});
    }
    if (const toml::table* params = root["params"].as_table())
        for (const auto& [k, v] : *params) s.chart.params[std::string(k.str())] = detail::number(v, "params");
    s.g = detail::string_array(root["fields"]["g"], "fields.g");
    s.S = detail::string_array(root["fields"]["S"], "fields.S");
    if (auto t = detail::optional_value<std::string>(root["fields"]["t"], "fields.t")) s.t = *t;
    if (auto o = detail::optional_value<std::string>(root["fields"]["omega"], "fields.omega")) s.omega = *o;

    if (root["sampling"]["grid"]) s.samples.grid = detail::grid_counts(root["sampling"]["grid"], "sampling.grid");
    if (auto r = detail::optional_value<int64_t>(root["sampling"]["random"], "sampling.random")) s.samples.random = static_cast<int>(*r);
    if (auto sd = detail::optional_value<int64_t>(root["sampling"]["seed"], "sampling.seed")) s.samples.seed = static_cast<std::uint64_t>(*sd);
    if (auto tol = detail::optional_value<double>(root["tolerances"]["tol"], "tolerances.tol")) s.tol = *tol;
    if (auto ord = detail::optional_value<int64_t>(root["jets"]["order"], "jets.order")) s.order = static_cast<int>(*ord);

    if (root["reconstruct"]["grid"]) s.mesh_grid = detail::grid_counts(root["reconstruct"]["grid"], "reconstruct.grid");
    if (auto st = detail::optional_value<double>(root["reconstruct"]["step"], "reconstruct.step")) s.step = *st;
    if (root["reconstruct"]["reference"]) s.reference = detail::string_array(root["reconstruct"]["reference"], "reconstruct.reference");
    if (const toml::array* b = root["reconstruct"]["base"].as_array()) {
        Point p;
        for (const auto& e : *b) p.push_back(detail::number(e, "reconstruct.base"));
        s.base = p;
    }
    s.expected.blaschke = detail::flag(root["expected"]["blaschke"], "expected.blaschke");
    s.expected.quadric = detail::flag(root["expected"]["quadric_type"], "expected.quadric_type");
    s.expected.improper_sphere = detail::flag(root["expected"]["improper_sphere"], "expected.improper_sphere");
    s.expected.graph = detail::flag(root["expected"]["graph"], "expected.graph");
    if (auto out = detail::optional_value<std::string>(root["output"]["dir"], "output.dir")) s.out_dir = *out;
    if (s.mesh_grid.size() == 1) s.mesh_grid.assign(s.dim(), s.mesh_grid.front());
    validate(s);
    return s;
}

inline RunSpec spec_from_catalog(const CatalogEntry& e) {
    RunSpec s;
    s.name = e.name;
    s.chart = e.chart;
    s.g = e.metric;
    s.S = e.S;
    s.t = e.t;
    s.reference = e.reference;
    s.expected = e.expected;
    return s;
}

inline std::string to_toml(const RunSpec& s) {
    auto strings = [](const std::vector<std::string>& v) {
        toml::array a;
        for (const auto& x : v) a.push_back(x);
        return a;
    };
    toml::table root;
    root.insert("name", s.name);
    toml::array box;
    for (const auto& iv : s.chart.box) box.push_back(toml::array{iv.lo, iv.hi});
    root.insert("chart", toml::table{{"coords", strings(s.chart.coords)}, {"box", box}});
    if (!s.chart.params.empty()) {
        toml::table params;
        for (const auto& [k, v] : s.chart.params) params.insert(k, v);
        root.insert("params", params);
    }
    toml::table fields{{"g", strings(s.g)}, {"S", strings(s.S)}, {"t", s.t}};
    if (s.omega) fields.insert("omega", *s.omega);
    root.insert("fields", fields);
    toml::array grid;
    for (int c : s.samples.grid) grid.push_back(c);
    root.insert("sampling", toml::table{{"grid", grid},
                                        {"random", static_cast<int64_t>(s.samples.random)},
                                        {"seed", static_cast<int64_t>(s.samples.seed)}});
    root.insert("tolerances", toml::table{{"tol", s.tol}});
    toml::table rec{{"step", s.step}};
    if (!s.mesh_grid.empty()) {
        toml::array mg;
        for (int c : s.mesh_grid) mg.push_back(c);
        rec.insert("grid", mg);
    }
    if (!s.reference.empty()) rec.insert("reference", strings(s.reference));
    root.insert("reconstruct", rec);
    toml::table expected;
    if (s.expected.blaschke) expected.insert("blaschke", *s.expected.blaschke);
    if (s.expected.quadric) expected.insert("quadric_type", *s.expected.quadric);
    if (s.expected.improper_sphere) expected.insert("improper_sphere", *s.expected.improper_sphere);
    if (s.expected.graph) expected.insert("graph", *s.expected.graph);
    if (!expected.empty()) root.insert("expected", expected);
    std::ostringstream os;
    os << root << "\n";
    return os.str();
}

}  // namespace ahyp
