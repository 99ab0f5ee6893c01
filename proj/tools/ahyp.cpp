// Command-line front end: verify, build, integrability, reconstruct, classify,
// conformal, catalog.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "ahyp/catalog.hpp"
#include "ahyp/classify.hpp"
#include "ahyp/conformal.hpp"
#include "ahyp/hypersurface.hpp"
#include "ahyp/reconstruct.hpp"
#include "ahyp/report.hpp"
#include "ahyp/spec_io.hpp"

namespace fs = std::filesystem;
using namespace ahyp;

namespace {

enum Exit { kOk = 0, kFail = 1, kParse = 2, kIo = 3 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string spec_path;
    std::string catalog_name;
    std::optional<double> tol;
    std::string grid;
    std::optional<double> step;
    std::optional<std::uint64_t> seed;
    std::optional<int> order;
    bool force = false;
    std::string out;
    std::string omega;
    bool standard = false;
    double fit_tol = 1e-4;
    double holonomy_tol = 1e-7;
};

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size() || v < 1) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            throw SpecError("--grid expects NxM (positive integers), got '" + text + "'");
        }
    }
    if (out.empty()) throw SpecError("--grid expects NxM");
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed for " + path.string());
}

// Loads the TOML run file (or catalog entry) and applies flag overrides; `mesh` routes --grid to the reconstruct grid.
RunSpec load_spec(const Options& o, bool mesh = false) {
    RunSpec s;
    if (!o.catalog_name.empty()) {
        try {
            s = spec_from_catalog(catalog_get(o.catalog_name));
        } catch (const CatalogError& e) {
            throw SpecError(e.what());
        }
    } else {
        if (o.spec_path.empty()) throw SpecError("a spec file or --catalog NAME is required");
        s = parse_spec(read_file(o.spec_path), o.spec_path);
    }
    if (o.tol) s.tol = *o.tol;
    if (o.step) s.step = *o.step;
    if (o.seed) s.samples.seed = *o.seed;
    if (o.order) s.order = *o.order;
    if (!o.grid.empty()) {
        auto g = parse_grid(o.grid);
        if (g.size() == 1) g.assign(s.dim(), g.front());
        if (mesh) s.mesh_grid = g;
        else s.samples.grid = g;
    }
    if (!o.out.empty()) s.out_dir = o.out;
    if (!o.omega.empty()) s.omega = o.omega;
    validate(s);
    return s;
}

ReportSettings settings_of(const RunSpec& s, bool mesh = false) {
    return {s.tol, s.samples.seed, mesh ? s.reconstruct_grid() : s.samples.grid, mesh ? 0 : s.samples.random, s.step,
            s.order};
}

int emit(const Options& o, const RunSpec& s, const Json& report) {
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!o.out.empty()) write_file(fs::path(s.out_dir) / (s.name + "-" + report["command"].get<std::string>() + ".json"), text);
    for (const auto& c : report["checks"]) {
        if (c.value("pass", false)) continue;
        std::string failing;
        if (c.contains("rows"))
            for (const auto& r : c["rows"])
                if (!r.value("pass", true)) failing += " " + r["name"].get<std::string>();
        std::cerr << "FAIL " << c["name"].get<std::string>() << (failing.empty() ? "" : ":" + failing) << "\n";
    }
    return report["pass"].get<bool>() ? kOk : kFail;
}

Json simple_check(const std::string& name, bool pass, Json extra = Json::object()) {
    Json j{{"name", name}, {"pass", pass}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

HypersurfaceData build_checked(const RunSpec& s, const AbundantData& d, const Options& o) {
    BuildOptions bo;
    bo.force = o.force;
    bo.tol = s.tol;
    bo.samples = s.samples;
    return build_from_abundant(d, bo);
}

Json tensor_json(const TensorValue& t) {
    Json a = Json::array();
    for (std::size_t i = 0; i < t.size(); ++i) a.push_back(number_json(t.flat(i)));
    return a;
}

// ---- commands ----------------------------------------------------------------------------------

int cmd_verify(const Options& o) {
    RunSpec s = load_spec(o);
    AbundantData d = s.data();
    Json report = report_envelope("verify", s, settings_of(s));
    add_check(report, residual_report_json("abundant_conditions", verify_conditions(d, sample_points(s.chart, s.samples), s.tol)));
    return emit(o, s, report);
}

int cmd_build(const Options& o) {
    RunSpec s = load_spec(o);
    AbundantData d = s.data();
    Json report = report_envelope("build", s, settings_of(s));
    HypersurfaceData hs;
    try {
        hs = build_checked(s, d, o);
        add_check(report, simple_check("precondition", true, {{"forced", o.force}}));
    } catch (const PreconditionError& e) {
        add_check(report, simple_check("precondition", false, {{"message", e.what()}}));
        return emit(o, s, report);
    }
    const auto points = sample_points(s.chart, s.samples);
    Json fields = Json::array();
    for (const auto& p : points) {
        try {
            HsPoint h = HsPoint::at(hs, p, 1);
            fields.push_back({{"point", point_json(p)},
                              {"G", tensor_json(values(h.G()))},
                              {"C", tensor_json(values(h.C))},
                              {"U", tensor_json(values(h.U))},
                              {"u", tensor_json(values(h.u))},
                              {"A", tensor_json(values(truncated(h.A, 0)))}});
        } catch (const std::exception& e) {
            fields.push_back({{"point", point_json(p)}, {"error", e.what()}});
        }
    }
    report["fields"] = fields;
    report["layout"] = "row-major component arrays; G, A: n^2 entries; C, U: n^3; u: n";
    add_check(report, residual_report_json("weingarten_dual", run_checks(points, s.tol, [&](const Point& p) {
                                               const TensorValue a = values(hs.A(p, 0));
                                               return std::vector<PointResidual>{
                                                   {"a_vs_dual_curvature", max_abs(a - weingarten_via_dual_curvature(hs, p))}};
                                           })));
    return emit(o, s, report);
}

int cmd_integrability(const Options& o) {
    RunSpec s = load_spec(o);
    AbundantData d = s.data();
    Json report = report_envelope("integrability", s, settings_of(s));
    HypersurfaceData hs;
    try {
        hs = build_checked(s, d, o);
    } catch (const PreconditionError& e) {
        add_check(report, simple_check("precondition", false, {{"message", e.what()}}));
        return emit(o, s, report);
    }
    const auto points = sample_points(s.chart, s.samples);
    add_check(report, residual_report_json("integrability", verify_integrability(hs, points, s.tol)));
    add_check(report, residual_report_json("structure_equations", run_checks(points, s.tol, [&](const Point& p) {
                                               return gauss_direct_residuals(hs, p);
                                           })));
    add_check(report, residual_report_json("abundant_hypersurface", verify_abundant_conditions(hs, points, s.tol)));
    return emit(o, s, report);
}

int cmd_reconstruct(const Options& o) {
    RunSpec s = load_spec(o, true);
    AbundantData d = s.data();
    Json report = report_envelope("reconstruct", s, settings_of(s, true));
    HypersurfaceData hs;
    try {
        hs = build_checked(s, d, o);
    } catch (const PreconditionError& e) {
        add_check(report, simple_check("precondition", false, {{"message", e.what()}}));
        return emit(o, s, report);
    }
    GridSpec gs;
    gs.counts = s.reconstruct_grid();
    gs.base = s.base;
    ImmersionGrid grid = immerse_grid(hs, gs, s.step);

    const double hol = holonomy_residual(hs, square_loop(s.chart), s.step);
    add_check(report, simple_check("holonomy", hol < o.holonomy_tol,
                                   {{"residual", number_json(hol)}, {"threshold", o.holonomy_tol}}));
    const ConvergenceOrder ro = richardson_order(hs, square_loop(s.chart));
    add_check(report, simple_check("rk4_order", ro.pass(),
                                   {{"order", ro.exact ? Json("exact") : number_json(ro.order)},
                                    {"minimum", 3.8},
                                    {"steps", {kRichardsonStep, kRichardsonStep / 2, kRichardsonStep / 4}}}));
    if (!s.reference.empty()) {
        std::vector<Expr> ref;
        for (const auto& r : s.reference) ref.push_back(parse(r, s.chart.declared()));
        AffineFit fit = affine_fit(grid, [&](const Point& p) {
            Point out;
            for (const auto& e : ref) out.push_back(eval_value(e, s.chart.coords, p, s.chart.params));
            return out;
        });
        add_check(report, simple_check("affine_fit", fit.rms < o.fit_tol,
                                       {{"rms", number_json(fit.rms)}, {"threshold", o.fit_tol}}));
    }
    QuadricFit q = quadric_fit(grid);
    report["quadric_fit"] = {{"ratio", number_json(q.ratio)}, {"is_quadric_at_1e-8", q.ratio < 1e-8}};

    Json samples = Json::array();
    for (const auto& smp : grid.samples) {
        Json f = Json::array(), xi = Json::array();
        for (Eigen::Index i = 0; i < smp.f.size(); ++i) f.push_back(number_json(smp.f(i)));
        for (Eigen::Index i = 0; i < smp.xi.size(); ++i) xi.push_back(number_json(smp.xi(i)));
        samples.push_back({{"p", point_json(smp.p)}, {"f", f}, {"xi", xi}});
    }
    Json artifacts = Json::array();
    const fs::path dir = s.out_dir;
    write_file(dir / (s.name + "-samples.json"), samples.dump(1) + "\n");
    artifacts.push_back((dir / (s.name + "-samples.json")).string());
    if (s.dim() == 2) {
        write_file(dir / (s.name + ".obj"), obj_text(grid_mesh(grid)));
        artifacts.push_back((dir / (s.name + ".obj")).string());
    }
    report["artifacts"] = artifacts;
    report["samples"] = static_cast<int>(grid.samples.size());
    return emit(o, s, report);
}

int cmd_classify(const Options& o) {
    RunSpec s = load_spec(o);
    AbundantData d = s.data();
    Json report = report_envelope("classify", s, settings_of(s));
    HypersurfaceData hs;
    try {
        hs = build_checked(s, d, o);
    } catch (const PreconditionError& e) {
        add_check(report, simple_check("precondition", false, {{"message", e.what()}}));
        return emit(o, s, report);
    }
    const auto points = sample_points(s.chart, s.samples);
    ClassificationReport cls = classify_all(hs, points, s.tol);
    report["classification"] = classification_json(cls);
    ResidualReport graph = graph_conditions_from_abundant(d, points, s.tol);
    report["graph_conditions"] = residual_report_json("graph_conditions", graph);
    const Verdict hs_graph = cls.verdict("graph");
    const bool coherent = hs_graph == Verdict::inconclusive || (hs_graph == Verdict::yes) == graph.pass();
    add_check(report, simple_check("graph_coherence", coherent,
                                   {{"hypersurface", to_string(hs_graph)}, {"abundant", graph.pass()}}));
    const Verdict sphere = cls.verdict("relative_sphere"), dual = cls.verdict("relative_sphere_dual");
    add_check(report, simple_check("relative_sphere_coherence",
                                   sphere == dual || sphere == Verdict::inconclusive || dual == Verdict::inconclusive));
    Json mismatches = Json::array();
    auto expect = [&](const char* name, const std::optional<bool>& want) {
        if (!want) return;
        const Verdict v = cls.verdict(name);
        if (v != (*want ? Verdict::yes : Verdict::no)) mismatches.push_back(name);
    };
    expect("blaschke", s.expected.blaschke);
    expect("quadric_type", s.expected.quadric);
    expect("improper_sphere", s.expected.improper_sphere);
    expect("graph", s.expected.graph);
    add_check(report, simple_check("expected_flags", mismatches.empty(), {{"mismatches", mismatches}}));
    if (s.dim() >= 3) {
        try {
            report["perfect_square"] = number_json(perfect_square_residual(d, points, s.tol));
        } catch (const PreconditionError& e) {
            report["perfect_square"] = {{"skipped", e.what()}};
        }
    }
    return emit(o, s, report);
}

// Textual rescaled spec: g′ = Ω²g, S′ = Ω²S, t′ = t − 3 ln Ω.
RunSpec rescaled_spec(const RunSpec& s, const std::string& omega) {
    RunSpec r = s;
    r.name = s.name + "-rescaled";
    r.omega.reset();
    for (auto& e : r.g) e = "(" + omega + ")^2*(" + e + ")";
    for (auto& e : r.S) e = "(" + omega + ")^2*(" + e + ")";
    r.t = "(" + s.t + ")-3*ln(" + omega + ")";
    r.reference.clear();
    r.expected = {};
    return r;
}

int cmd_conformal(const Options& o) {
    RunSpec s = load_spec(o);
    if (o.standard) s.omega = "exp((" + s.t + ")/3)";
    if (!s.omega) throw SpecError("conformal: no conformal factor (set fields.omega, --omega or --standard)");
    validate(s);
    AbundantData d = s.data();
    Json report = report_envelope("conformal", s, settings_of(s));
    report["omega"] = *s.omega;
    const ConformalFactor omega = ConformalFactor::from_expr(s.chart, *s.omega);
    const auto points = sample_points(s.chart, s.samples);
    add_check(report, residual_report_json("compatibility", verify_compatibility(d, omega, points, s.tol)));
    HypersurfaceData hs = hypersurface_from_abundant(d);
    ResidualReport before = verify_abundant_conditions(hs, points, s.tol);
    ResidualReport after = verify_abundant_conditions(rescale_hypersurface(hs, omega), points, s.tol);
    const double drift = std::abs(after.max_residual() - before.max_residual());
    add_check(report, simple_check("conformal_invariance", before.pass() == after.pass() && drift < s.tol,
                                   {{"before", number_json(before.max_residual())},
                                    {"after", number_json(after.max_residual())}}));
    if (!o.out.empty()) {
        RunSpec r = rescaled_spec(s, *s.omega);
        if (o.standard) r.t = "0";
        const fs::path path = fs::path(s.out_dir) / (r.name + ".toml");
        write_file(path, to_toml(r));
        report["artifacts"] = Json::array({path.string()});
    }
    return emit(o, s, report);
}

int cmd_catalog(const std::string& action, const std::string& name, const Options& o) {
    if (action == "list") {
        for (const auto& n : catalog_list()) std::cout << n << "\n";
        return kOk;
    }
    if (name.empty()) throw SpecError("catalog " + action + ": entry name required");
    CatalogEntry e;
    try {
        e = catalog_get(name);
    } catch (const CatalogError& err) {
        throw SpecError(err.what());
    }
    const std::string text = to_toml(spec_from_catalog(e));
    if (action == "get") {
        std::cout << "# " << e.note << "\n" << text;
        return kOk;
    }
    if (action == "export") {
        const fs::path path = fs::path(o.out.empty() ? "." : o.out) / (e.name + ".toml");
        write_file(path, text);
        std::cout << path.string() << "\n";
        return kOk;
    }
    throw SpecError("catalog: unknown action '" + action + "' (list, get, export)");
}

void add_common(CLI::App* sub, Options& o, bool mesh = false) {
    sub->add_option("spec", o.spec_path, "TOML spec file");
    sub->add_option("--catalog", o.catalog_name, "use a catalog entry instead of a spec file");
    sub->add_option("--tol", o.tol, "residual tolerance");
    sub->add_option("--grid", o.grid, mesh ? "reconstruction grid NxM" : "sampling grid NxM");
    sub->add_option("--step", o.step, "RK4 step");
    sub->add_option("--seed", o.seed, "random sampling seed");
    sub->add_option("--order", o.order, "jet order cap (3..4)");
    sub->add_flag("--force", o.force, "skip the abundant-condition precondition");
    sub->add_option("--out", o.out, "output directory for reports and artifacts");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Abundant manifolds and relative affine hypersurfaces"};
    app.require_subcommand(1);
    Options o;
    auto* verify = app.add_subcommand("verify", "check the abundant-manifold conditions");
    auto* build = app.add_subcommand("build", "build hypersurface data (G, C, A) and dump it");
    auto* integ = app.add_subcommand("integrability", "check the integrability conditions of the built data");
    auto* recon = app.add_subcommand("reconstruct", "integrate the immersion, fit, export a mesh");
    auto* classify = app.add_subcommand("classify", "evaluate geometric predicates");
    auto* conformal = app.add_subcommand("conformal", "rescale and check compatibility");
    auto* catalog = app.add_subcommand("catalog", "list, print or export catalog systems");
    for (auto* sub : {verify, build, integ, classify, conformal}) add_common(sub, o);
    add_common(recon, o, true);
    recon->add_option("--fit-tol", o.fit_tol, "affine-fit RMS threshold");
    recon->add_option("--holonomy-tol", o.holonomy_tol, "holonomy residual threshold");
    conformal->add_option("--omega", o.omega, "conformal factor expression");
    conformal->add_flag("--standard", o.standard, "use the standard-scale factor exp(t/3)");
    std::string action, entry;
    catalog->add_option("action", action, "list | get | export")->required();
    catalog->add_option("name", entry, "entry name");
    catalog->add_option("--out", o.out, "export directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kParse;
    }
    try {
        if (*verify) return cmd_verify(o);
        if (*build) return cmd_build(o);
        if (*integ) return cmd_integrability(o);
        if (*recon) return cmd_reconstruct(o);
        if (*classify) return cmd_classify(o);
        if (*conformal) return cmd_conformal(o);
        if (*catalog) return cmd_catalog(action, entry, o);
    } catch (const SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const ReconstructError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    }
    return kParse;
}
