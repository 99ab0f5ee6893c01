#include <gtest/gtest.h>

#include <cmath>

#include "ahyp/jets.hpp"
#include "support.hpp"

using namespace ahyp;
using namespace ahyp::test;

namespace {

// Jet of f built from seeds at p.
template <class F>
Jet jet_of(F f, const Point& p, int k) {
    const int n = static_cast<int>(p.size());
    std::vector<Jet> x;
    for (int i = 0; i < n; ++i) x.push_back(Jet::seed(i, p[i], n, k));
    return f(x);
}

template <class F>
double value_of_fn(F f, const Point& p) {
    std::vector<Jet> x;
    const int n = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i) x.push_back(Jet::constant(n, 0, p[i]));
    return f(x).value();
}

void expect_matches_fd(const Jet& j, const ScalarFn& f, const Point& p, double h, double tol, int max_degree) {
    for (int pos = 0; pos < j.size(); ++pos) {
        auto a = alpha_of(j, pos);
        if (degree(a) > max_degree) continue;
        const double fd = fd_partial(f, p, a, h);
        EXPECT_NEAR(j[pos], fd, tol * std::max(1.0, std::abs(fd))) << "position " << pos;
    }
}

}  // namespace

TEST(Jets, SeedTable) {
    Jet j = Jet::seed(0, 3.0, 2, 2);
    ASSERT_EQ(j.size(), 6);
    const double expect[] = {3, 1, 0, 0, 0, 0};
    for (int i = 0; i < 6; ++i) EXPECT_EQ(j[i], expect[i]);
}

TEST(Jets, SeedIndexOutOfRange) {
    EXPECT_THROW(Jet::seed(1, -1.0, 1, 2), JetError);
    EXPECT_THROW(Jet::seed(-1, 0.0, 2, 2), JetError);
}

TEST(Jets, TableLengthIsBinomial) {
    for (int n = 1; n <= kMaxJetDim; ++n)
        for (int k = 0; k <= kMaxJetOrder; ++k) {
            long num = 1, den = 1;
            for (int i = 1; i <= k; ++i) {
                num *= n + i;
                den *= i;
            }
            EXPECT_EQ(Jet(n, k).size(), num / den);
        }
}

TEST(Jets, GradedLexicographicOrder) {
    Jet j(2, 2);
    const std::vector<std::vector<int>> expect = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (int pos = 0; pos < j.size(); ++pos) EXPECT_EQ(alpha_of(j, pos), expect[pos]);
    Jet k(3, 4);
    for (int pos = 1; pos < k.size(); ++pos) EXPECT_GE(degree(alpha_of(k, pos)), degree(alpha_of(k, pos - 1)));
}

TEST(Jets, LeibnizProductOfSeeds) {
    Jet x = Jet::seed(0, 3.0, 2, 2), y = Jet::seed(1, 4.0, 2, 2);
    Jet xy = combine(JetOp::mul, x, y);
    EXPECT_EQ(xy.value(), 12.0);
    EXPECT_EQ(xy.partial({1, 0}), 4.0);
    EXPECT_EQ(xy.partial({0, 1}), 3.0);
    EXPECT_EQ(xy.partial({1, 1}), 1.0);
    EXPECT_EQ(xy.partial({2, 0}), 0.0);
}

TEST(Jets, CubeViaProduct) {
    Jet x = Jet::seed(0, 2.0, 1, 3);
    Jet c = combine(JetOp::mul, combine(JetOp::mul, x, x), x);
    EXPECT_EQ(c.value(), 8.0);
    EXPECT_EQ(c.partial({1}), 12.0);
    EXPECT_EQ(c.partial({2}), 12.0);
    EXPECT_EQ(c.partial({3}), 6.0);
}

TEST(Jets, QuotientWithItselfIsOne) {
    Jet a = jet_of([](const std::vector<Jet>& x) { return 1.0 + x[0] + x[1] * x[1] * x[0]; }, {0.3, 0.8}, 4);
    Jet q = combine(JetOp::div, a, a);
    EXPECT_NEAR(q.value(), 1.0, 1e-15);
    for (int i = 1; i < q.size(); ++i) EXPECT_NEAR(q[i], 0.0, 1e-14);
}

TEST(Jets, CombineErrors) {
    Jet a(2, 2, 1.0), b(2, 3, 1.0), c(3, 2, 1.0), z(2, 2, 0.0);
    EXPECT_THROW(combine(JetOp::add, a, b), JetError);
    EXPECT_THROW(combine(JetOp::mul, a, c), JetError);
    EXPECT_THROW(combine(JetOp::div, a, z), JetError);
}

TEST(Jets, ProductMatchesFiniteDifferences) {
    auto f = [](const std::vector<Jet>& x) { return exp(x[0] * x[1]) + cos(x[0]); };
    auto g = [](const std::vector<Jet>& x) { return sqrt(x[0] * x[0] + 2.0 * x[1] + 3.0); };
    Rng rng(3);
    for (int r = 0; r < 10; ++r) {
        const Point p{uniform(rng), uniform(rng)};
        Jet prod = combine(JetOp::mul, jet_of(f, p, 2), jet_of(g, p, 2));
        Jet quot = combine(JetOp::div, jet_of(f, p, 2), jet_of(g, p, 2));
        expect_matches_fd(prod, [&](const Point& q) { return value_of_fn(f, q) * value_of_fn(g, q); }, p, 1e-3, 1e-8, 2);
        expect_matches_fd(quot, [&](const Point& q) { return value_of_fn(f, q) / value_of_fn(g, q); }, p, 1e-3, 1e-8, 2);
    }
}

TEST(Jets, ExpOfZeroIsOne) {
    Jet e = apply_univariate(Univariate::exp, Jet(3, 4, 0.0));
    EXPECT_EQ(e.value(), 1.0);
    for (int i = 1; i < e.size(); ++i) EXPECT_EQ(e[i], 0.0);
}

TEST(Jets, LogarithmThirdOrder) {
    Jet l = apply_univariate(Univariate::ln, Jet::seed(0, 2.0, 1, 3));
    EXPECT_NEAR(l.value(), std::log(2.0), 1e-15);
    EXPECT_NEAR(l.partial({1}), 0.5, 1e-15);
    EXPECT_NEAR(l.partial({2}), -0.25, 1e-15);
    EXPECT_NEAR(l.partial({3}), 0.25, 1e-15);
}

TEST(Jets, RadiusMatchesFiniteDifferences) {
    auto r = [](const std::vector<Jet>& x) { return sqrt(x[0] * x[0] + x[1] * x[1]); };
    Jet j = jet_of(r, {3.0, 4.0}, 2);
    EXPECT_DOUBLE_EQ(j.value(), 5.0);
    expect_matches_fd(j, [&](const Point& q) { return value_of_fn(r, q); }, {3.0, 4.0}, 1e-3, 1e-7, 2);
    // closed form: ∂xx = y²/r³
    EXPECT_NEAR(j.partial({2, 0}), 16.0 / 125.0, 1e-15);
}

TEST(Jets, UnivariateDomainErrorsNameFunction) {
    Jet neg(1, 2, -1.0);
    for (auto f : {Univariate::ln, Univariate::sqrt}) {
        try {
            apply_univariate(f, neg);
            ADD_FAILURE();
        } catch (const JetError& e) {
            EXPECT_NE(std::string(e.what()).find(univariate_name(f)), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(apply_univariate(Univariate::powreal, neg, 0.5), JetError);
    EXPECT_THROW(abs(Jet(1, 2, 0.0)), JetError);
}

TEST(Jets, ExpOfLogIsIdentity) {
    Jet a = jet_of([](const std::vector<Jet>& x) { return x[0] * x[0] * x[1] + exp(x[2]) + 2.0; }, {0.4, 1.1, -0.3}, 4);
    Jet b = exp(ln(a));
    for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], a[i], 1e-12 * std::max(1.0, std::abs(a[i])));
}

TEST(Jets, AdditionIsLinear) {
    Rng rng(5);
    Jet a(2, 3), b(2, 3), c(2, 3);
    for (int i = 0; i < a.size(); ++i) {
        a[i] = uniform(rng);
        b[i] = uniform(rng);
        c[i] = uniform(rng);
    }
    Jet lhs = combine(JetOp::add, a * 2.0 + b, c);
    Jet rhs = combine(JetOp::add, a, c) + a + b;
    for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-15);
}

TEST(Jets, TrigAndPowerCompositions) {
    auto f = [](const std::vector<Jet>& x) { return tan(x[0]) * powreal(x[1], 1.7) + sin(x[0] * x[1]); };
    const Point p{0.3, 1.4};
    Jet j = jet_of(f, p, 4);
    for (int pos = 0; pos < j.size(); ++pos) {
        const double fd = fd_partial_extrapolated([&](const Point& q) { return value_of_fn(f, q); }, p, alpha_of(j, pos), 2e-2);
        EXPECT_NEAR(j[pos], fd, 1e-7 * std::max(1.0, std::abs(fd))) << "position " << pos;
    }
}

TEST(Jets, FromGradientRebuildsJet) {
    auto f = [](const std::vector<Jet>& x) { return exp(x[0]) * x[1] * x[1] + sin(x[1]); };
    const Point p{0.2, 0.7};
    Jet full = jet_of(f, p, 4);
    std::vector<Jet> grad = {full.d(0), full.d(1)};
    Jet back = Jet::from_gradient(full.value(), grad, 2, 4);
    for (int i = 0; i < full.size(); ++i) EXPECT_NEAR(back[i], full[i], 1e-15);
}

TEST(Jets, CatalogFourthOrderTablesMatchFiniteDifferences) {
    for (const auto& name : all_catalog_names()) {
        const CatalogEntry e = catalog_get(name);
        if (e.dim() > 3) continue;  // 4D tables only repeat the Euclidean entries of ho-3
        const auto declared = catalog_declared(e);
        const Bindings b = catalog_bindings(e);
        Rng rng(19);
        for (const auto& src : catalog_expressions(e)) {
            const Expr ex = parse(src, declared);
            ScalarFn f = [&](const Point& q) { return eval_value(ex, e.chart.coords, q, b); };
            for (int r = 0; r < 3; ++r) {
                const Point p = random_point(e.chart, rng, 0.1);
                const Jet j = eval_jet(ex, e.chart.coords, p, b, 4);
                for (int pos = 0; pos < j.size(); ++pos) {
                    // orders 3-4: differences of exact second partials; lower orders: of values
                    std::vector<int> a = alpha_of(j, pos), beta(a.size(), 0);
                    int take = degree(a) > 2 ? 2 : 0;
                    for (std::size_t v = 0; v < a.size() && take > 0; ++v)
                        while (a[v] > 0 && take > 0) {
                            --a[v];
                            ++beta[v];
                            --take;
                        }
                    ScalarFn inner = degree(beta) == 0 ? f : ScalarFn([&, beta](const Point& q) {
                        return eval_jet(ex, e.chart.coords, q, b, 2).partial(beta);
                    });
                    const double fd = fd_partial_extrapolated(inner, p, a, 2e-3);
                    EXPECT_NEAR(j[pos], fd, 1e-5 * std::max(1.0, std::abs(j[pos])))
                        << name << ": " << src << " position " << pos;
                }
            }
        }
    }
}
