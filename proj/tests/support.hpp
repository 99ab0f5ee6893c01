#pragma once

// Test-side oracles: random tensors, finite differences, catalog helpers.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ahyp/catalog.hpp"
#include "ahyp/exprlang.hpp"
#include "ahyp/geometry.hpp"
#include "ahyp/tensor.hpp"

namespace ahyp::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline TensorValue random_tensor(int n, int rank, Rng& rng) {
    TensorValue t(n, rank, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) t.flat(i) = uniform(rng);
    return t;
}

inline TensorValue identity_metric(int n) {
    TensorValue g(n, 2, 0.0);
    for (int i = 0; i < n; ++i) g(i, i) = 1.0;
    return g;
}

// Positive definite: identity plus a small symmetric perturbation.
inline TensorValue random_metric(int n, Rng& rng) {
    TensorValue g = identity_metric(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = 0.2 * uniform(rng);
            g(i, j) += v;
            if (i != j) g(j, i) += v;
        }
    return g;
}

// Symmetric rank-3 tensor.
inline TensorValue random_symmetric3(int n, Rng& rng) { return sym_projector(3, random_tensor(n, 3, rng)); }

inline Point random_point(const Chart& chart, Rng& rng, double margin = 0.05) {
    Point p;
    for (const auto& iv : chart.box) {
        const double w = iv.hi - iv.lo;
        p.push_back(uniform(rng, iv.lo + margin * w, iv.hi - margin * w));
    }
    return p;
}

using ScalarFn = std::function<double(const Point&)>;

// Nested five-point central differences for ∂^alpha f at p.
inline double fd_partial(const ScalarFn& f, const Point& p, std::vector<int> alpha, double h) {
    int axis = -1;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > 0) {
            axis = static_cast<int>(i);
            break;
        }
    if (axis < 0) return f(p);
    alpha[axis] -= 1;
    auto at = [&](double s) {
        Point q = p;
        q[axis] += s * h;
        return fd_partial(f, q, alpha, h);
    };
    return (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
}

// Five-point differences with one Richardson step (h, h/2), removing the O(h^4) term.
inline double fd_partial_extrapolated(const ScalarFn& f, const Point& p, const std::vector<int>& alpha, double h) {
    return (16.0 * fd_partial(f, p, alpha, h / 2.0) - fd_partial(f, p, alpha, h)) / 15.0;
}

// Plain two-point central difference of the first derivative.
inline double fd_first(const ScalarFn& f, const Point& p, int axis, double h) {
    Point a = p, b = p;
    a[axis] += h;
    b[axis] -= h;
    return (f(a) - f(b)) / (2.0 * h);
}

inline std::vector<int> alpha_of(const Jet& j, int pos) {
    std::vector<int> a(j.dim());
    for (int v = 0; v < j.dim(); ++v) a[v] = j.multi_index(pos)[v];
    return a;
}

inline int degree(const std::vector<int>& a) {
    int d = 0;
    for (int x : a) d += x;
    return d;
}

// Every closed-form expression stored in a catalog entry.
inline std::vector<std::string> catalog_expressions(const CatalogEntry& e) {
    std::vector<std::string> out = e.metric;
    out.insert(out.end(), e.S.begin(), e.S.end());
    out.push_back(e.t);
    out.insert(out.end(), e.reference.begin(), e.reference.end());
    if (e.potential) out.push_back(*e.potential);
    return out;
}

inline Bindings catalog_bindings(const CatalogEntry& e) {
    Bindings b = e.chart.params;
    for (const auto& [k, v] : e.potential_params) b[k] = v;
    return b;
}

inline std::vector<std::string> catalog_declared(const CatalogEntry& e) {
    std::vector<std::string> v = e.chart.declared();
    for (const auto& [k, _] : e.potential_params) v.push_back(k);
    return v;
}

inline const std::vector<std::string>& all_catalog_names() {
    static const std::vector<std::string> names = catalog_list();
    return names;
}

}  // namespace ahyp::test
