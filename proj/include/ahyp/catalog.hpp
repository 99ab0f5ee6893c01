#pragma once

// Worked systems shipped as ready-made abundant data with reference immersions.
//
// Packed component order: metric over (0,0),(0,1),...; S over sorted index
// triples (0,0,0),(0,0,1),(0,1,1),(1,1,1) in 2D.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abundant.hpp"
#include "exprlang.hpp"

namespace ahyp {

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExpectedFlags {
    std::optional<bool> blaschke, quadric, improper_sphere, graph;
};

struct CatalogEntry {
    std::string name;
    Chart chart;
    std::vector<std::string> metric;  // packed n(n+1)/2
    std::vector<std::string> S;       // packed n(n+1)(n+2)/6
    std::string t = "0";
    std::optional<std::string> potential;
    Bindings potential_params;
    std::vector<std::string> reference;  // immersion components, empty if none
    bool reference_derived = false;
    ExpectedFlags expected;
    bool classification_only = false;
    std::string note;

    int dim() const { return chart.dim(); }

    AbundantData data() const {
        AbundantData d;
        d.name = name;
        d.geo.chart = chart;
        for (const auto& m : metric) d.geo.metric.push_back(chart.field(m));
        for (const auto& s : S) d.S.push_back(chart.field(s));
        d.t = chart.field(t);
        return d;
    }

    bool has_reference() const { return !reference.empty(); }

    Point reference_at(std::span<const double> p) const {
        if (reference.empty()) throw CatalogError("entry '" + name + "' has no reference immersion");
        Point out;
        for (const auto& r : reference) out.push_back(eval_value(parse(r, chart.coords), chart.coords, p, {}));
        return out;
    }
};

namespace detail {

inline std::vector<std::string> euclidean_metric(int n) {
    std::vector<std::string> m;
    for (const auto& ij : sorted_tuples(n, 2)) m.push_back(ij[0] == ij[1] ? "1" : "0");
    return m;
}

inline std::vector<std::string> zeros(std::size_t k) { return std::vector<std::string>(k, "0"); }

inline CatalogEntry harmonic_oscillator(int n) {
    static const char* names[] = {"x", "y", "z", "w"};
    CatalogEntry e;
    e.name = "harmonic-oscillator-" + std::to_string(n);
    for (int i = 0; i < n; ++i) {
        e.chart.coords.push_back(names[i]);
        e.chart.box.push_back({-2.0, 2.0});
    }
    e.metric = euclidean_metric(n);
    e.S = zeros(sorted_tuples(n, 3).size());
    e.t = "0";
    std::string v = "a0*(";
    std::string quad;
    for (int i = 0; i < n; ++i) {
        v += std::string(i ? "+" : "") + names[i] + "^2";
        quad += std::string(i ? "+" : "") + names[i] + "^2";
        e.reference.push_back(names[i]);
    }
    v += ")";
    for (int i = 0; i < n; ++i) v += std::string("+a") + std::to_string(i + 1) + "*" + names[i];
    v += "+c";
    e.potential = v;
    e.potential_params = {{"a0", 1.0}, {"c", 0.0}};
    for (int i = 0; i < n; ++i) e.potential_params["a" + std::to_string(i + 1)] = 0.0;
    e.reference.push_back("(" + quad + ")/2");
    e.reference_derived = n != 2;
    e.expected = {true, true, true, true};
    e.note = "Euclidean space with S = 0, t = 0; reference immersion is the paraboloid (x, |x|^2/2).";
    return e;
}

inline const std::string kSphereFactor = "4/(1+x^2+y^2)^2";

inline CatalogEntry sw1() {
    CatalogEntry e;
    e.name = "sw1";
    e.chart = {{"x", "y"}, {{0.5, 2.0}, {0.5, 2.0}}, {}};
    e.metric = {"1", "0", "1"};
    e.S = {"-3/(4*x)", "3/(4*y)", "3/(4*x)", "-3/(4*y)"};
    e.t = "-3/4*ln(x*y)";
    e.potential = "a0*(x^2+y^2)+a1/x^2+a2/y^2+a3";
    e.potential_params = {{"a0", 1}, {"a1", 1}, {"a2", 1}, {"a3", 0}};
    e.reference = {"ln(x)", "ln(y)", "(x^2+y^2)/4"};
    e.expected = {false, false, true, true};
    e.note = "S = 3U and t = 3*int(u) from the cubic -(1/x)dx^3 - (1/y)dy^3 on the flat plane.";
    return e;
}

inline CatalogEntry sw2() {
    CatalogEntry e;
    e.name = "sw2";
    e.chart = {{"x", "y"}, {{-1.0, 1.0}, {0.5, 2.0}}, {}};
    e.metric = {"1", "0", "1"};
    e.S = {"0", "3/(4*y)", "0", "-3/(4*y)"};
    e.t = "-3/4*ln(y)";
    e.potential = "a0*(4*x^2+y^2)+a1*x+a2/y^2+a3";
    e.potential_params = {{"a0", 1}, {"a1", 1}, {"a2", 1}, {"a3", 0}};
    e.reference = {"x", "ln(y)", "x^2/2+y^2/4"};
    e.expected = {false, false, true, true};
    e.note = "S = 3U and t = 3*int(u) from the cubic -(1/y)dy^3 on the flat plane.";
    return e;
}

inline CatalogEntry s9_generic() {
    CatalogEntry e;
    e.name = "s9-generic";
    e.chart = {{"x", "y"}, {{0.2, 0.7}, {0.2, 0.7}}, {}};
    e.metric = {kSphereFactor, "0", kSphereFactor};
    const std::string den = "((x^2+y^2-1)*(x^2+y^2+1)^3)";
    const std::string sxxx = "(-3*(5*x^4-10*x^2*y^2+y^4-1)/(x*" + den + "))";
    const std::string sxxy = "(3*(x^4-10*x^2*y^2+5*y^4-1)/(y*" + den + "))";
    e.S = {sxxx, sxxy, "-" + sxxx, "-" + sxxy};
    e.t = "-3/4*ln(x*y*(1-x^2-y^2))+9/4*ln(1+x^2+y^2)";
    e.potential = "a0*(x^2+y^2+1)^2/(x^2+y^2-1)^2+a1*(x^2+y^2+1)^2/x^2+a2*(x^2+y^2+1)^2/y^2+a3";
    e.potential_params = {{"a0", 1}, {"a1", 1}, {"a2", 1}, {"a3", 0}};
    e.reference = {"ln(abs(x)/abs(x^2+y^2-1))", "ln(abs(y)/abs(x^2+y^2-1))",
                   "1/2*ln((x^2+y^2+1)/abs(x^2+y^2-1))"};
    e.expected = {false, false, true, true};
    e.note = "Round-sphere metric in stereographic coordinates; (S, t) derived from the reference immersion "
             "with constant transversal field.";
    return e;
}

inline CatalogEntry s7() {
    CatalogEntry e;
    e.name = "s7";
    e.chart = {{"x", "y"}, {{0.2, 0.7}, {0.2, 0.7}}, {}};
    e.metric = {kSphereFactor, "0", kSphereFactor};
    const std::string den = "((x^2+y^2-1)*(x^2+y^2+1)^3*((x-1)^2+y^2)*((x+1)^2+y^2))";
    const std::string sxxx = "(12*x*(x^4-10*x^2*y^2-2*x^2+5*y^4+6*y^2+1)/" + den + ")";
    const std::string sxxy = "(12*y*(5*x^4-10*x^2*y^2-6*x^2+y^4+2*y^2+1)/" + den + ")";
    e.S = {sxxx, sxxy, "-" + sxxx, "-" + sxxy};
    e.t = "-3/4*ln(((x-1)^2+y^2)*((x+1)^2+y^2)*(1-x^2-y^2))+9/4*ln(1+x^2+y^2)";
    e.potential =
        "a0*2*x/sqrt(4*y^2+(x^2+y^2-1)^2)+a1*2*y*(1+x^2+y^2)^2/((x^2+y^2-1)^2*sqrt(4*y^2+(x^2+y^2-1)^2))"
        "+a2*(1+x^2+y^2)^2/(x^2+y^2-1)^2+a3";
    e.potential_params = {{"a0", 1}, {"a1", 1}, {"a2", 1}, {"a3", 0}};
    e.expected = {false, false, false, false};
    e.classification_only = true;
    e.note = "Round-sphere metric; (S, t) obtained by solving the single-potential equation for the published "
             "potential basis. Classification check only.";
    return e;
}

}  // namespace detail

inline std::vector<std::string> catalog_list() {
    return {"harmonic-oscillator-2", "harmonic-oscillator-3", "harmonic-oscillator-4", "sw1", "sw2",
            "s9-generic", "s7"};
}

inline CatalogEntry catalog_get(const std::string& name) {
    std::string key = name;
    if (key.rfind("ho-", 0) == 0) key = "harmonic-oscillator-" + key.substr(3);
    if (key.rfind("harmonic-oscillator-", 0) == 0) {
        const std::string num = key.substr(20);
        if (num == "2" || num == "3" || num == "4") return detail::harmonic_oscillator(std::stoi(num));
    }
    if (key == "sw1") return detail::sw1();
    if (key == "sw2") return detail::sw2();
    if (key == "s9-generic" || key == "s9") return detail::s9_generic();
    if (key == "s7") return detail::s7();
    throw CatalogError("unknown catalog entry '" + name + "'");
}

inline Point reference_immersion(const std::string& name, std::span<const double> p) {
    return catalog_get(name).reference_at(p);
}

}  // namespace ahyp
