#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ahyp/report.hpp"
#include "ahyp/spec_io.hpp"
#include "support.hpp"

using namespace ahyp;
using namespace ahyp::test;

namespace {

const char* kMinimal = R"toml(
name = "flat"
[chart]
coords = ["x", "y"]
box = [[0.5, 2.0], [0.5, 2.0]]
[fields]
g = ["1", "0", "1"]
S = ["0", "0", "0", "0"]
)toml";

const char* kFull = R"toml(
name = "sw1-file"
[chart]
coords = ["x", "y"]
box = [[0.5, 2.0], [0.5, 2.0]]
[params]
k = 0.75
[fields]
g = ["1", "0", "1"]
S = ["-k/x", "k/y", "k/x", "-k/y"]
t = "-k*ln(x*y)"
omega = "exp(x)"
[sampling]
grid = [4, 5]
random = 7
seed = 42
[tolerances]
tol = 1e-6
[jets]
order = 4
[reconstruct]
grid = 6
step = 0.002
reference = ["ln(x)", "ln(y)", "(x^2+y^2)/4"]
base = [1.0, 1.5]
[expected]
blaschke = false
quadric_type = false
improper_sphere = true
graph = true
[output]
dir = "out/sw1"
)toml";

std::string with_line(std::string text, const std::string& after, const std::string& line) {
    const auto pos = text.find(after);
    if (pos == std::string::npos) throw std::logic_error("anchor not found: " + after);
    text.insert(pos + after.size(), "\n" + line);
    return text;
}

std::string replaced(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    if (pos == std::string::npos) throw std::logic_error("text not found: " + from);
    return text.replace(pos, from.size(), to);
}

double field_gap(const ScalarField& a, const ScalarField& b, const Chart& chart) {
    Rng rng(9);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Point p = random_point(chart, rng);
        worst = std::max(worst, std::abs(a(p, 0).value() - b(p, 0).value()));
    }
    return worst;
}

}  // namespace

TEST(ParseSpec, MinimalSpecUsesDefaults) {
    const RunSpec s = parse_spec(kMinimal);
    EXPECT_EQ(s.name, "flat");
    EXPECT_EQ(s.dim(), 2);
    EXPECT_EQ(s.t, "0");
    EXPECT_FALSE(s.omega.has_value());
    EXPECT_EQ(s.samples.grid, std::vector<int>{10});
    EXPECT_EQ(s.samples.random, 100);
    EXPECT_EQ(s.samples.seed, 1u);
    EXPECT_EQ(s.tol, 1e-8);
    EXPECT_EQ(s.order, 3);
    EXPECT_EQ(s.step, 1e-3);
    EXPECT_TRUE(s.reference.empty());
    EXPECT_FALSE(s.base.has_value());
    EXPECT_FALSE(s.expected.blaschke.has_value());
    EXPECT_EQ(s.reconstruct_grid(), (std::vector<int>{20, 20}));
}

TEST(ParseSpec, FullSpecReadsEveryKey) {
    const RunSpec s = parse_spec(kFull);
    EXPECT_EQ(s.name, "sw1-file");
    EXPECT_EQ(s.chart.coords, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(s.chart.box[1].lo, 0.5);
    EXPECT_EQ(s.chart.box[1].hi, 2.0);
    EXPECT_EQ(s.chart.params.at("k"), 0.75);
    EXPECT_EQ(s.S[1], "k/y");
    EXPECT_EQ(*s.omega, "exp(x)");
    EXPECT_EQ(s.samples.grid, (std::vector<int>{4, 5}));
    EXPECT_EQ(s.samples.random, 7);
    EXPECT_EQ(s.samples.seed, 42u);
    EXPECT_EQ(s.tol, 1e-6);
    EXPECT_EQ(s.order, 4);
    EXPECT_EQ(s.mesh_grid, (std::vector<int>{6, 6}));
    EXPECT_EQ(s.step, 0.002);
    EXPECT_EQ(s.reference.size(), 3u);
    EXPECT_EQ(*s.base, (Point{1.0, 1.5}));
    EXPECT_EQ(s.expected.blaschke, false);
    EXPECT_EQ(s.expected.quadric, false);
    EXPECT_EQ(s.expected.improper_sphere, true);
    EXPECT_EQ(s.expected.graph, true);
    EXPECT_EQ(s.out_dir, "out/sw1");
}

TEST(ParseSpec, ParamsBindIntoFields) {
    const RunSpec s = parse_spec(kFull);
    const CatalogEntry e = catalog_get("sw1");
    const AbundantData a = s.data(), b = e.data();
    for (std::size_t i = 0; i < a.S.size(); ++i) EXPECT_LT(field_gap(a.S[i], b.S[i], s.chart), 1e-15) << i;
    EXPECT_LT(field_gap(a.t, b.t, s.chart), 1e-15);
    EXPECT_TRUE(verify_conditions(a, sample_points(s.chart, s.samples)).pass());
}

TEST(ParseSpec, CatalogRoundTrip) {
    for (const auto& name : catalog_list()) {
        const RunSpec s = spec_from_catalog(catalog_get(name));
        const std::string text = to_toml(s);
        const RunSpec back = parse_spec(text, name);
        EXPECT_EQ(back.name, s.name);
        EXPECT_EQ(back.chart.coords, s.chart.coords);
        ASSERT_EQ(back.chart.box.size(), s.chart.box.size());
        for (std::size_t i = 0; i < s.chart.box.size(); ++i) {
            EXPECT_EQ(back.chart.box[i].lo, s.chart.box[i].lo);
            EXPECT_EQ(back.chart.box[i].hi, s.chart.box[i].hi);
        }
        EXPECT_EQ(back.g, s.g);
        EXPECT_EQ(back.S, s.S);
        EXPECT_EQ(back.t, s.t);
        EXPECT_EQ(back.reference, s.reference);
        EXPECT_EQ(back.expected.blaschke, s.expected.blaschke);
        EXPECT_EQ(back.expected.quadric, s.expected.quadric);
        EXPECT_EQ(back.expected.improper_sphere, s.expected.improper_sphere);
        EXPECT_EQ(back.expected.graph, s.expected.graph);
        EXPECT_EQ(back.samples.grid, s.samples.grid);
        EXPECT_EQ(back.samples.random, s.samples.random);
        EXPECT_EQ(back.tol, s.tol);
        EXPECT_EQ(back.step, s.step);
        EXPECT_EQ(to_toml(back), text) << name;
    }
}

TEST(ParseSpec, FullSpecRoundTripKeepsOptionalFields) {
    const RunSpec s = parse_spec(kFull);
    const RunSpec back = parse_spec(to_toml(s));
    EXPECT_EQ(back.chart.params, s.chart.params);
    EXPECT_EQ(back.omega, s.omega);
    EXPECT_EQ(back.mesh_grid, s.mesh_grid);
    EXPECT_EQ(back.samples.seed, s.samples.seed);
}

TEST(ParseSpec, SyntaxErrorReportsLine) {
    try {
        parse_spec("name = \"x\"\n[chart\ncoords = []\n", "broken.toml");
        FAIL() << "expected SpecError";
    } catch (const SpecError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ParseSpec, StructuralErrors) {
    const std::string base = kMinimal;
    // missing keys
    EXPECT_THROW(parse_spec(replaced(base, "box = [[0.5, 2.0], [0.5, 2.0]]", "")), SpecError);
    EXPECT_THROW(parse_spec(replaced(base, "g = [\"1\", \"0\", \"1\"]", "")), SpecError);
    // mistyped values
    EXPECT_THROW(parse_spec(replaced(base, "g = [\"1\", \"0\", \"1\"]", "g = [1, 0, 1]")), SpecError);
    EXPECT_THROW(parse_spec(replaced(base, "[[0.5, 2.0], [0.5, 2.0]]", "[[0.5, 2.0], [0.5]]")), SpecError);
    EXPECT_THROW(parse_spec(replaced(base, "[[0.5, 2.0], [0.5, 2.0]]", "[[0.5, 2.0], [\"a\", 2.0]]")), SpecError);
    EXPECT_THROW(parse_spec(with_line(base, "[fields]", "t = 3")), SpecError);
    EXPECT_THROW(parse_spec(with_line(base, "[fields]", "omega = true")), SpecError);
    EXPECT_THROW(parse_spec("name = 5\n" + base.substr(base.find("[chart]"))), SpecError);
    EXPECT_THROW(parse_spec(base + "[tolerances]\ntol = \"small\"\n"), SpecError);
    EXPECT_THROW(parse_spec(base + "[sampling]\nseed = 1.5\n"), SpecError);
    EXPECT_THROW(parse_spec(base + "[expected]\ngraph = \"yes\"\n"), SpecError);
}

TEST(ParseSpec, ValidationErrors) {
    const std::string base = kMinimal;
    auto bad = [](const std::string& text) { EXPECT_THROW(parse_spec(text), SpecError) << text; };
    bad(replaced(base, "[[0.5, 2.0], [0.5, 2.0]]", "[[2.0, 0.5], [0.5, 2.0]]"));
    bad(replaced(base, "[[0.5, 2.0], [0.5, 2.0]]", "[[0.5, 2.0]]"));
    bad(replaced(base, "g = [\"1\", \"0\", \"1\"]", "g = [\"1\", \"1\"]"));
    bad(replaced(base, "S = [\"0\", \"0\", \"0\", \"0\"]", "S = [\"0\", \"0\", \"0\"]"));
    bad(replaced(base, "g = [\"1\", \"0\", \"1\"]", "g = [\"1+\", \"0\", \"1\"]"));
    bad(replaced(base, "g = [\"1\", \"0\", \"1\"]", "g = [\"z\", \"0\", \"1\"]"));
    bad(with_line(base, "[fields]", "t = \"foo(x)\""));
    bad(with_line(base, "[fields]", "omega = \"x*\""));
    bad(base + "[tolerances]\ntol = 0.0\n");
    bad(base + "[tolerances]\ntol = -1e-8\n");
    bad(base + "[jets]\norder = 2\n");
    bad(base + "[jets]\norder = 5\n");
    bad(base + "[reconstruct]\nstep = 0.0\n");
    bad(base + "[reconstruct]\nreference = [\"x\", \"y\"]\n");
    bad(base + "[reconstruct]\nbase = [0.0, 1.0]\n");
    bad(base + "[reconstruct]\ngrid = 1\n");
    bad(base + "[reconstruct]\ngrid = [3, 3, 3]\n");
    bad(base + "[sampling]\ngrid = 0\n");
    bad(base + "[sampling]\ngrid = [2, 2, 2]\n");
    bad(base + "[sampling]\nrandom = -1\n");
    bad(base + "[sampling]\ngrid = []\nrandom = 0\n");
    bad(replaced(base, "coords = [\"x\", \"y\"]", "coords = [\"x\"]"));
}

TEST(ParseSpec, DimensionLimits) {
    const std::string five = R"toml(
[chart]
coords = ["a", "b", "c", "d", "e"]
box = [[0, 1], [0, 1], [0, 1], [0, 1], [0, 1]]
[fields]
g = []
S = []
)toml";
    EXPECT_THROW(parse_spec(five), SpecError);
}

TEST(Report, NumberJsonMapsNonFiniteToNull) {
    EXPECT_TRUE(number_json(std::numeric_limits<double>::quiet_NaN()).is_null());
    EXPECT_TRUE(number_json(std::numeric_limits<double>::infinity()).is_null());
    EXPECT_EQ(number_json(1.5).get<double>(), 1.5);
}

TEST(Report, EnvelopeSchema) {
    const RunSpec s = spec_from_catalog(catalog_get("sw2"));
    ReportSettings rs;
    rs.tol = 1e-8;
    rs.seed = 3;
    rs.grid = {10, 10};
    rs.random = 100;
    Json r = report_envelope("verify", s, rs);
    EXPECT_EQ(r["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(r["tool"]["name"], "ahyp");
    EXPECT_EQ(r["command"], "verify");
    EXPECT_EQ(r["system"]["name"], "sw2");
    EXPECT_EQ(r["system"]["dimension"], 2);
    EXPECT_EQ(r["system"]["coords"], Json({"x", "y"}));
    EXPECT_EQ(r["system"]["box"][0][0].get<double>(), -1.0);
    EXPECT_EQ(r["settings"]["seed"], 3);
    EXPECT_EQ(r["settings"]["grid"], Json({10, 10}));
    EXPECT_TRUE(r["checks"].is_array());
    EXPECT_TRUE(r["pass"].get<bool>());
    std::vector<std::string> keys;
    for (auto it = r.begin(); it != r.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "tool", "command", "system", "settings", "checks",
                                              "pass"}));
}

TEST(Report, AddCheckFoldsPass) {
    Json r = report_envelope("verify", spec_from_catalog(catalog_get("sw1")), {});
    add_check(r, {{"name", "a"}, {"pass", true}});
    EXPECT_TRUE(r["pass"].get<bool>());
    add_check(r, {{"name", "b"}, {"pass", false}});
    EXPECT_FALSE(r["pass"].get<bool>());
    add_check(r, {{"name", "c"}, {"pass", true}});
    EXPECT_FALSE(r["pass"].get<bool>());
    add_check(r, {{"name", "no-flag"}});
    EXPECT_EQ(r["checks"].size(), 4u);
}

TEST(Report, ResidualReportJson) {
    const CatalogEntry e = catalog_get("sw1");
    ResidualReport rep = verify_conditions(e.data(), {Point{0.0, 1.0}, Point{1.0, 1.0}, Point{1.5, 0.7}});
    const Json j = residual_report_json("conditions", rep);
    EXPECT_EQ(j["name"], "conditions");
    EXPECT_EQ(j["points"], 3);
    EXPECT_EQ(j["failed_points"], 1);
    EXPECT_FALSE(j["pass"].get<bool>());
    EXPECT_TRUE(j["errors"].is_array());
    ASSERT_EQ(j["rows"].size(), rep.rows.size());
    for (const auto& row : j["rows"]) {
        for (const char* k : {"name", "max_residual", "tol", "trivial", "evaluated", "pass", "worst_point"})
            EXPECT_TRUE(row.contains(k)) << k;
        if (!row["trivial"].get<bool>()) EXPECT_EQ(row["worst_point"].size(), 2u);
    }
    const Json clean = residual_report_json("c", verify_conditions(e.data(), {Point{1.0, 1.0}}));
    EXPECT_TRUE(clean["pass"].get<bool>());
    EXPECT_FALSE(clean.contains("errors"));
}

TEST(Report, ClassificationJson) {
    const CatalogEntry e = catalog_get("ho-2");
    ClassificationReport rep = classify_all(hypersurface_from_abundant(e.data()), {Point{0.1, 0.2}, Point{1.0, -1.0}});
    const Json j = classification_json(rep);
    ASSERT_EQ(j["predicates"].size(), rep.predicates.size());
    for (const auto& p : j["predicates"]) {
        EXPECT_EQ(p["verdict"], "true") << p["name"];
        EXPECT_TRUE(p.contains("residual"));
        EXPECT_TRUE(p.contains("threshold"));
    }
    EXPECT_NEAR(j["mu"].get<double>(), 0.0, 1e-12);
    EXPECT_EQ(j["points"], 2);
    EXPECT_EQ(j["failed_points"], 0);
}

TEST(ParseSpec, IntegerWhereNumberExpectedIsAccepted) {
    const RunSpec s = parse_spec(std::string(kMinimal) + "[tolerances]\ntol = 1\n[reconstruct]\nstep = 1\n");
    EXPECT_EQ(s.tol, 1.0);
    EXPECT_EQ(s.step, 1.0);
}
