#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "ahyp/exprlang.hpp"
#include "support.hpp"

using namespace ahyp;
using namespace ahyp::test;

namespace {

const std::vector<std::string> kXY = {"x", "y"};

Jet eval(const std::string& src, const Point& p, int order, const std::vector<std::string>& coords = kXY) {
    return eval_jet(parse(src, coords), coords, p, {}, order);
}

}  // namespace

TEST(ExprParse, PotentialWithParameters) {
    Expr e = parse("a0*(x^2+y^2)+a1/x^2+a2/y^2+a3", {"x", "y", "a0", "a1", "a2", "a3"});
    auto vars = variables_of(e);
    EXPECT_EQ(vars.size(), 6u);
    Bindings b{{"a0", 1}, {"a1", 2}, {"a2", 3}, {"a3", 4}};
    const Point p{1.0, 2.0};
    EXPECT_NEAR(eval_value(e, kXY, p, b), 5.0 + 2.0 + 0.75 + 4.0, 1e-15);
}

TEST(ExprParse, ConstantLiteral) {
    Expr e = parse("0", {});
    EXPECT_EQ(e.root().kind, NodeKind::constant);
    EXPECT_EQ(e.root().value, 0.0);
}

TEST(ExprParse, SphereFactor) {
    Expr e = parse("4/(1+x^2+y^2)^2", kXY);
    EXPECT_NEAR(eval_value(e, kXY, Point{0.3, 0.2}), 4.0 / (1.13 * 1.13), 1e-14);
    EXPECT_NEAR(eval_value(e, kXY, Point{0.3, 0.2}), 3.1325867, 1e-7);
}

TEST(ExprParse, SyntaxErrorCarriesOffset) {
    try {
        parse("x+*y", kXY);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 2u);
    }
    EXPECT_THROW(parse("(x+y", kXY), ParseError);
    EXPECT_THROW(parse("", kXY), ParseError);
    EXPECT_THROW(parse("x y", kXY), ParseError);
    EXPECT_THROW(parse("foo(x)", kXY), ParseError);
    EXPECT_THROW(parse("pow(x)", kXY), ParseError);
}

TEST(ExprParse, UndeclaredIdentifierNamedWithOffset) {
    try {
        parse("x + zeta", kXY);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
        EXPECT_NE(std::string(e.what()).find("zeta"), std::string::npos);
    }
}

TEST(ExprParse, PrecedenceAndAssociativity) {
    const Point p{2.0, 3.0};
    EXPECT_DOUBLE_EQ(eval("x^y^2", p, 0).value(), std::pow(2.0, 9.0));
    EXPECT_DOUBLE_EQ(eval("-x^2", p, 0).value(), -4.0);
    EXPECT_DOUBLE_EQ(eval("x-y-1", p, 0).value(), -2.0);
    EXPECT_DOUBLE_EQ(eval("x/y/2", p, 0).value(), 2.0 / 3.0 / 2.0);
    EXPECT_DOUBLE_EQ(eval("1+x*y", p, 0).value(), 7.0);
    EXPECT_DOUBLE_EQ(eval("2.5e-1*x", p, 0).value(), 0.5);
}

TEST(ExprParse, PrettyPrintRoundTrip) {
    for (const auto& name : all_catalog_names()) {
        const CatalogEntry e = catalog_get(name);
        const auto declared = catalog_declared(e);
        Rng rng(7);
        for (const auto& src : catalog_expressions(e)) {
            Expr a = parse(src, declared);
            Expr b = parse(pretty_print(a), declared);
            EXPECT_TRUE(structurally_equal(a, b)) << name << ": " << src << " -> " << pretty_print(a);
            const Point p = random_point(e.chart, rng);
            Jet ja = eval_jet(a, e.chart.coords, p, catalog_bindings(e), 3);
            Jet jb = eval_jet(b, e.chart.coords, p, catalog_bindings(e), 3);
            for (int i = 0; i < ja.size(); ++i) EXPECT_EQ(ja[i], jb[i]) << src;
        }
    }
}

TEST(ExprEval, PolynomialSecondOrder) {
    Jet j = eval("x^2+y^2", {1.0, 2.0}, 2);
    EXPECT_DOUBLE_EQ(j.value(), 5.0);
    EXPECT_DOUBLE_EQ(j.partial({1, 0}), 2.0);
    EXPECT_DOUBLE_EQ(j.partial({0, 1}), 4.0);
    EXPECT_DOUBLE_EQ(j.partial({2, 0}), 2.0);
    EXPECT_DOUBLE_EQ(j.partial({0, 2}), 2.0);
    EXPECT_DOUBLE_EQ(j.partial({1, 1}), 0.0);
}

TEST(ExprEval, LogarithmSecondOrder) {
    Jet j = eval("ln(x)", {2.0}, 2, {"x"});
    EXPECT_NEAR(j.value(), 0.6931471805599453, 1e-15);
    EXPECT_NEAR(j.partial({1}), 0.5, 1e-15);
    EXPECT_NEAR(j.partial({2}), -0.25, 1e-15);
}

TEST(ExprEval, PolynomialJetsAreExact) {
    // (x + 2y)^3 and its analytic partials
    const Point p{0.7, -1.3};
    Jet j = eval("(x+2*y)^3", p, 4);
    const double s = p[0] + 2 * p[1];
    for (int pos = 0; pos < j.size(); ++pos) {
        auto a = alpha_of(j, pos);
        const int d = degree(a);
        double expect = 0.0;
        if (d <= 3) {
            double fall = 1.0;
            for (int q = 0; q < d; ++q) fall *= (3 - q);
            expect = fall * std::pow(s, 3 - d) * std::pow(2.0, a[1]);
        }
        EXPECT_NEAR(j[pos], expect, 1e-13 * (1.0 + std::abs(expect)));
    }
}

TEST(ExprEval, AllFunctions) {
    const Point p{0.4, 1.7};
    const double x = p[0], y = p[1];
    struct Case {
        const char* src;
        double value, dx;
    } cases[] = {
        {"exp(x)", std::exp(x), std::exp(x)},
        {"sqrt(y)", std::sqrt(y), 0.0},
        {"sin(x)", std::sin(x), std::cos(x)},
        {"cos(x)", std::cos(x), -std::sin(x)},
        {"tan(x)", std::tan(x), 1.0 / (std::cos(x) * std::cos(x))},
        {"abs(x-1)", std::abs(x - 1), -1.0},
        {"pow(y,1.5)", std::pow(y, 1.5), 0.0},
        {"pow(x,3)", x * x * x, 3 * x * x},
        {"x^(-2)", 1.0 / (x * x), -2.0 / (x * x * x)},
        {"y^x", std::pow(y, x), std::pow(y, x) * std::log(y)},
    };
    for (const auto& c : cases) {
        Jet j = eval(c.src, p, 1);
        EXPECT_NEAR(j.value(), c.value, 1e-14) << c.src;
        EXPECT_NEAR(j.partial({1, 0}), c.dx, 1e-13) << c.src;
    }
}

TEST(ExprEval, DomainErrorsNameTheSubexpression) {
    const Point p{-1.0, 0.0};
    auto expect_domain = [&](const char* src, const char* fragment) {
        try {
            eval(src, p, 1);
            ADD_FAILURE() << src << " should fail";
        } catch (const DomainError& e) {
            EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
        }
    };
    expect_domain("ln(x)", "ln");
    expect_domain("sqrt(x)", "sqrt");
    expect_domain("1/y", "division");
    expect_domain("abs(y)", "abs");
    expect_domain("x^0.5", "power");
}

TEST(ExprEval, OrderAboveMaximumRejected) {
    EXPECT_THROW(eval("x", {1.0, 1.0}, kMaxJetOrder + 1), std::invalid_argument);
}

TEST(ExprEval, UnboundParameterIsError) {
    Expr e = parse("a*x", {"x", "a"});
    EXPECT_THROW(eval_jet(e, {"x"}, Point{1.0}, {}, 1), DomainError);
}

TEST(ExprEval, CatalogExpressionsMatchFiniteDifferences) {
    int checked = 0;
    for (const auto& name : all_catalog_names()) {
        const CatalogEntry e = catalog_get(name);
        const auto declared = catalog_declared(e);
        const Bindings b = catalog_bindings(e);
        Rng rng(11);
        for (const auto& src : catalog_expressions(e)) {
            const Expr ex = parse(src, declared);
            ScalarFn f = [&](const Point& q) { return eval_value(ex, e.chart.coords, q, b); };
            for (int k = 0; k < 50; ++k) {
                const Point p = random_point(e.chart, rng);
                const Jet j = eval_jet(ex, e.chart.coords, p, b, 1);
                for (int i = 0; i < e.dim(); ++i) {
                    const double fd = fd_first(f, p, i, 1e-5);
                    const double an = j.d(i).value();
                    EXPECT_NEAR(an, fd, 1e-6 * std::max(1.0, std::abs(an))) << name << ": " << src;
                    ++checked;
                }
            }
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(ExprEval, ConcurrentEvaluationIsConsistent) {
    const Expr e = parse(detail::kSphereFactor, kXY);
    const Jet ref = eval_jet(e, kXY, Point{0.3, 0.4}, {}, 4);
    std::vector<std::thread> pool;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&] {
            for (int r = 0; r < 200; ++r) {
                Jet j = eval_jet(e, kXY, Point{0.3, 0.4}, {}, 4);
                for (int i = 0; i < j.size(); ++i)
                    if (j[i] != ref[i]) ++mismatches;
            }
        });
    for (auto& th : pool) th.join();
    EXPECT_EQ(mismatches.load(), 0);
}
