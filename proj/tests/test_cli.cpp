#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ahyp/report.hpp"
#include "ahyp/spec_io.hpp"

#ifndef AHYP_CLI_PATH
#error "AHYP_CLI_PATH must point at the ahyp executable"
#endif

namespace fs = std::filesystem;
using namespace ahyp;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("ahyp-cli-" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliRun run(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string("\"") + AHYP_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                                err.string() + "\"";
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path export_entry(const std::string& name) const {
        const CliRun r = run("catalog export " + name + " --out \"" + dir_.string() + "\"");
        EXPECT_EQ(r.code, 0) << r.err;
        return fs::path(r.out.substr(0, r.out.find('\n')));
    }

    std::string q(const fs::path& p) const { return "\"" + p.string() + "\""; }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, CatalogList) {
    const CliRun r = run("catalog list");
    EXPECT_EQ(r.code, 0);
    for (const auto& n : catalog_list()) EXPECT_NE(r.out.find(n + "\n"), std::string::npos) << n;
}

TEST_F(CliTest, CatalogGetPrintsParsableSpec) {
    const CliRun r = run("catalog get sw2");
    EXPECT_EQ(r.code, 0);
    const RunSpec s = parse_spec(r.out);
    EXPECT_EQ(s.name, "sw2");
    EXPECT_EQ(s.S, catalog_get("sw2").S);
}

TEST_F(CliTest, VerifyExportedSw1Passes) {
    const fs::path spec = export_entry("sw1");
    ASSERT_TRUE(fs::exists(spec));
    const CliRun r = run("verify " + q(spec));
    EXPECT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(j["tool"]["version"], kToolVersion);
    EXPECT_EQ(j["command"], "verify");
    EXPECT_EQ(j["settings"]["tol"].get<double>(), 1e-8);
    EXPECT_EQ(j["settings"]["seed"], 1);
    ASSERT_EQ(j["checks"].size(), 1u);
    const Json& c = j["checks"][0];
    EXPECT_TRUE(c["pass"].get<bool>());
    EXPECT_EQ(c["points"], 200);
    EXPECT_LT(c["max_residual"].get<double>(), 1e-8);
    EXPECT_TRUE(j["pass"].get<bool>());
}

TEST_F(CliTest, ShippedSampleSpecPasses) {
    const fs::path spec = fs::path(AHYP_TEST_DATA) / "sw1.toml";
    EXPECT_EQ(run("verify " + q(spec)).code, 0);
    EXPECT_EQ(run("classify " + q(spec)).code, 0);
}

TEST_F(CliTest, ScaledCubicFailsAndNamesTheEquation) {
    RunSpec s = parse_spec(slurp(export_entry("sw1")));
    for (auto& e : s.S) e = "1.1*(" + e + ")";
    const fs::path spec = dir_ / "scaled.toml";
    spit(spec, to_toml(s));
    const CliRun r = run("verify " + q(spec));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("dxi_2d"), std::string::npos) << r.err;
    EXPECT_FALSE(Json::parse(r.out)["pass"].get<bool>());
}

TEST_F(CliTest, ErrorExitCodes) {
    const fs::path bad = dir_ / "bad.toml";
    spit(bad, "name = \"x\"\n[chart\n");
    EXPECT_EQ(run("verify " + q(bad)).code, 2);
    const fs::path short_g = dir_ / "short.toml";
    spit(short_g, "[chart]\ncoords = [\"x\", \"y\"]\nbox = [[0, 1], [0, 1]]\n[fields]\ng = [\"1\"]\nS = []\n");
    const CliRun sized = run("verify " + q(short_g));
    EXPECT_EQ(sized.code, 2);
    EXPECT_NE(sized.err.find("metric"), std::string::npos) << sized.err;
    EXPECT_EQ(run("verify " + q(dir_ / "missing.toml")).code, 3);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("verify --no-such-flag").code, 2);
    EXPECT_EQ(run("verify").code, 2);
    EXPECT_EQ(run("verify --catalog nope").code, 2);
    EXPECT_EQ(run("verify --catalog sw1 --grid 3xfoo").code, 2);
    EXPECT_EQ(run("verify --catalog sw1 --order 7").code, 2);
    EXPECT_EQ(run("catalog frobnicate sw1").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, UnwritableOutputIsAnIoError) {
    const fs::path blocker = dir_ / "file";
    spit(blocker, "x");
    EXPECT_EQ(run("verify --catalog sw1 --grid 2 --out " + q(blocker / "sub")).code, 3);
}

TEST_F(CliTest, ReportsAreDeterministic) {
    const CliRun a = run("verify --catalog sw2 --seed 7 --out " + q(dir_));
    const CliRun b = run("verify --catalog sw2 --seed 7");
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(slurp(dir_ / "sw2-verify.json"), a.out);
    const CliRun c = run("verify --catalog sw2 --seed 8");
    EXPECT_NE(c.out, a.out);
    EXPECT_EQ(Json::parse(c.out)["settings"]["seed"], 8);
}

TEST_F(CliTest, GridAndTolFlagsOverrideTheSpec) {
    const CliRun r = run("verify --catalog sw1 --grid 3x4 --tol 1e-6");
    EXPECT_EQ(r.code, 0);
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["settings"]["grid"], Json({3, 4}));
    EXPECT_EQ(j["settings"]["tol"].get<double>(), 1e-6);
    EXPECT_EQ(j["checks"][0]["points"], 12 + 100);
}

TEST_F(CliTest, ReconstructOscillatorEmitsQuadricMesh) {
    const CliRun r = run("reconstruct --catalog ho-2 --grid 6 --out " + q(dir_));
    EXPECT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_LT(j["quadric_fit"]["ratio"].get<double>(), 1e-8);
    EXPECT_TRUE(j["quadric_fit"]["is_quadric_at_1e-8"].get<bool>());
    EXPECT_EQ(j["samples"], 36);
    const fs::path obj = dir_ / "harmonic-oscillator-2.obj";
    ASSERT_TRUE(fs::exists(obj));
    const std::string mesh = slurp(obj);
    int v = 0, f = 0;
    std::istringstream is(mesh);
    for (std::string line; std::getline(is, line);) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    EXPECT_EQ(v, 36);
    EXPECT_EQ(f, 50);
    for (const auto& c : j["checks"]) EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
    EXPECT_TRUE(fs::exists(dir_ / "harmonic-oscillator-2-samples.json"));
}

TEST_F(CliTest, ClassifyMatchesExpectedFlags) {
    for (const char* name : {"sw1", "s7"}) {
        const CliRun r = run(std::string("classify --catalog ") + name + " --grid 3");
        EXPECT_EQ(r.code, 0) << name << r.err;
        const Json j = Json::parse(r.out);
        EXPECT_TRUE(j.contains("classification"));
        EXPECT_TRUE(j.contains("graph_conditions"));
    }
}

TEST_F(CliTest, ClassifyNonAbundantNeedsForce) {
    RunSpec s = spec_from_catalog(catalog_get("sw1"));
    s.t = "0";
    const fs::path spec = dir_ / "tilted.toml";
    spit(spec, to_toml(s));
    const CliRun r = run("classify " + q(spec) + " --grid 3");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("precondition"), std::string::npos) << r.err;
}

TEST_F(CliTest, BuildAndIntegrability) {
    const CliRun b = run("build --catalog sw2 --grid 2");
    EXPECT_EQ(b.code, 0) << b.err;
    const Json j = Json::parse(b.out);
    ASSERT_FALSE(j["fields"].empty());
    EXPECT_EQ(j["fields"][0]["G"].size(), 4u);
    EXPECT_EQ(j["fields"][0]["C"].size(), 8u);
    EXPECT_EQ(run("integrability --catalog ho-3 --grid 2").code, 0);
}

TEST_F(CliTest, ConformalStandardScaleRoundTrip) {
    const CliRun r = run("conformal --catalog sw1 --standard --grid 3 --out " + q(dir_));
    EXPECT_EQ(r.code, 0) << r.err;
    const fs::path rescaled = dir_ / "sw1-rescaled.toml";
    ASSERT_TRUE(fs::exists(rescaled));
    const CliRun v = run("verify " + q(rescaled) + " --grid 3");
    EXPECT_EQ(v.code, 0) << v.err;
    EXPECT_EQ(run("conformal --catalog sw1 --grid 3").code, 2);
    EXPECT_EQ(run("conformal --catalog sw1 --grid 3 --omega \"1+x^2\"").code, 0);
}
