#pragma once

// Closed-form scalar expressions: recursive-descent parser, printer and jet evaluator.
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = "-" unary | power ;
//   power   = primary [ "^" unary ] ;
//   primary = number | identifier | identifier "(" expr { "," expr } ")" | "(" expr ")" ;

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jets.hpp"

namespace ahyp {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NodeKind { constant, variable, neg, add, sub, mul, div, pow, call };
enum class Func { ln, exp, sqrt, sin, cos, tan, abs, pow };

struct Span {
    std::size_t begin = 0, end = 0;
};

struct Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;
    std::string name;  // variable name
    Func func = Func::ln;
    std::vector<std::shared_ptr<const Node>> args;
    Span span;
};

using NodePtr = std::shared_ptr<const Node>;

inline const char* func_name(Func f) {
    switch (f) {
        case Func::ln: return "ln";
        case Func::exp: return "exp";
        case Func::sqrt: return "sqrt";
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::tan: return "tan";
        case Func::abs: return "abs";
        case Func::pow: return "pow";
    }
    return "?";
}

using Bindings = std::map<std::string, double>;

class Expr {
public:
    Expr() : Expr(constant(0.0)) {}
    explicit Expr(NodePtr root, std::string source = {}) : root_(std::move(root)), source_(std::move(source)) {}

    static Expr constant(double v) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::constant;
        n->value = v;
        return Expr(n);
    }
    static Expr variable(const std::string& name) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::variable;
        n->name = name;
        return Expr(n);
    }
    static Expr binary(NodeKind kind, const Expr& a, const Expr& b) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->args = {a.root_, b.root_};
        return Expr(n);
    }
    static Expr call(Func f, std::vector<Expr> args) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::call;
        n->func = f;
        for (auto& a : args) n->args.push_back(a.root_);
        return Expr(n);
    }

    const Node& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }
    const std::string& source() const { return source_; }

    bool is_constant(double v) const { return root_->kind == NodeKind::constant && root_->value == v; }

    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.is_constant(0.0)) return b;
        if (b.is_constant(0.0)) return a;
        return binary(NodeKind::add, a, b);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (b.is_constant(0.0)) return a;
        return binary(NodeKind::sub, a, b);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        if (a.is_constant(1.0)) return b;
        if (b.is_constant(1.0)) return a;
        if (a.is_constant(0.0) || b.is_constant(0.0)) return constant(0.0);
        return binary(NodeKind::mul, a, b);
    }
    friend Expr operator/(const Expr& a, const Expr& b) { return binary(NodeKind::div, a, b); }
    friend Expr operator-(const Expr& a) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::neg;
        n->args = {a.root_};
        return Expr(n);
    }

private:
    NodePtr root_;
    std::string source_;
};

namespace detail {

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vars) : s_(src), vars_(vars) {}

    NodePtr parse() {
        skip();
        if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
        return e;
    }

private:
    std::shared_ptr<Node> make(NodeKind k, std::size_t begin) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->span.begin = begin;
        return n;
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= s_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }
    NodePtr binop(NodeKind k, NodePtr a, NodePtr b) {
        auto n = make(k, a->span.begin);
        n->span.end = b->span.end;
        n->args = {std::move(a), std::move(b)};
        return n;
    }
    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = binop(NodeKind::add, lhs, term());
            else if (accept('-')) lhs = binop(NodeKind::sub, lhs, term());
            else return lhs;
        }
    }
    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = binop(NodeKind::mul, lhs, unary());
            else if (accept('/')) lhs = binop(NodeKind::div, lhs, unary());
            else return lhs;
        }
    }
    NodePtr unary() {
        skip();
        const std::size_t begin = pos_;
        if (accept('-')) {
            auto n = make(NodeKind::neg, begin);
            n->args = {unary()};
            n->span.end = n->args[0]->span.end;
            return n;
        }
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return binop(NodeKind::pow, base, unary());
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        const std::size_t begin = pos_;
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string id(s_.substr(begin, pos_ - begin));
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                ++pos_;
                auto n = make(NodeKind::call, begin);
                n->func = lookup_func(id, begin);
                n->args.push_back(expr());
                while (accept(',')) n->args.push_back(expr());
                expect(')');
                n->span.end = pos_;
                const std::size_t want = (n->func == Func::pow) ? 2 : 1;
                if (n->args.size() != want)
                    throw ParseError("function '" + id + "' takes " + std::to_string(want) + " argument(s)", begin);
                return n;
            }
            bool declared = false;
            for (const auto& v : vars_) declared = declared || (v == id);
            if (!declared) throw ParseError("undeclared identifier '" + id + "'", begin);
            auto n = make(NodeKind::variable, begin);
            n->name = id;
            n->span.end = begin + id.size();
            return n;
        }
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }
    NodePtr number() {
        const std::size_t begin = pos_;
        auto digits = [&] {
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) digits();
            else pos_ = save;
        }
        std::string text(s_.substr(begin, pos_ - begin));
        if (text == ".") throw ParseError("malformed number", begin);
        auto n = make(NodeKind::constant, begin);
        n->value = std::strtod(text.c_str(), nullptr);
        n->span.end = pos_;
        return n;
    }
    static Func lookup_func(const std::string& id, std::size_t at) {
        static const std::map<std::string, Func> table = {
            {"ln", Func::ln},   {"exp", Func::exp}, {"sqrt", Func::sqrt}, {"sin", Func::sin},
            {"cos", Func::cos}, {"tan", Func::tan}, {"abs", Func::abs},   {"pow", Func::pow}};
        auto it = table.find(id);
        if (it == table.end()) throw ParseError("unknown function '" + id + "'", at);
        return it->second;
    }

    std::string_view s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline void print_node(const Node& n, std::string& out) {
    auto wrap = [&](const char* op) {
        out += '(';
        print_node(*n.args[0], out);
        out += op;
        print_node(*n.args[1], out);
        out += ')';
    };
    switch (n.kind) {
        case NodeKind::constant: out += format_number(n.value); break;
        case NodeKind::variable: out += n.name; break;
        case NodeKind::neg:
            out += "(-";
            print_node(*n.args[0], out);
            out += ')';
            break;
        case NodeKind::add: wrap("+"); break;
        case NodeKind::sub: wrap("-"); break;
        case NodeKind::mul: wrap("*"); break;
        case NodeKind::div: wrap("/"); break;
        case NodeKind::pow: wrap("^"); break;
        case NodeKind::call:
            out += func_name(n.func);
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ',';
                print_node(*n.args[i], out);
            }
            out += ')';
            break;
    }
}

inline void collect_vars(const Node& n, std::vector<std::string>& out) {
    if (n.kind == NodeKind::variable) {
        for (const auto& v : out)
            if (v == n.name) return;
        out.push_back(n.name);
    }
    for (const auto& a : n.args) collect_vars(*a, out);
}

}  // namespace detail

inline Expr parse(std::string_view source, const std::vector<std::string>& declared_vars) {
    detail::Parser p(source, declared_vars);
    return Expr(p.parse(), std::string(source));
}

inline std::string pretty_print(const Expr& e) {
    std::string out;
    detail::print_node(e.root(), out);
    return out;
}

inline std::vector<std::string> variables_of(const Expr& e) {
    std::vector<std::string> out;
    detail::collect_vars(e.root(), out);
    return out;
}

inline bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    if (a.kind == NodeKind::constant && a.value != b.value) return false;
    if (a.kind == NodeKind::variable && a.name != b.name) return false;
    if (a.kind == NodeKind::call && a.func != b.func) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!structurally_equal(*a.args[i], *b.args[i])) return false;
    return true;
}

inline bool structurally_equal(const Expr& a, const Expr& b) { return structurally_equal(a.root(), b.root()); }

namespace detail {

struct EvalEnv {
    const std::vector<std::string>& coords;
    std::span<const double> point;
    const Bindings& bindings;
    int order;
    const std::string& source;
};

inline std::string describe(const Node& n, const std::string& source) {
    if (!source.empty() && n.span.end > n.span.begin && n.span.end <= source.size())
        return "'" + source.substr(n.span.begin, n.span.end - n.span.begin) + "'";
    std::string s;
    print_node(n, s);
    return "'" + s + "'";
}

inline bool integer_valued(double v) { return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e9; }

inline Jet eval_node(const Node& n, const EvalEnv& env) {
    const int dim = static_cast<int>(env.coords.size());
    auto fail = [&](const std::string& what) -> Jet {
        throw DomainError(what + " in subexpression " + describe(n, env.source));
    };
    try {
        switch (n.kind) {
            case NodeKind::constant: return Jet(dim, env.order, n.value);
            case NodeKind::variable: {
                for (int i = 0; i < dim; ++i)
                    if (env.coords[i] == n.name) return Jet::seed(i, env.point[i], dim, env.order);
                auto it = env.bindings.find(n.name);
                if (it == env.bindings.end()) return fail("unbound identifier '" + n.name + "'");
                return Jet(dim, env.order, it->second);
            }
            case NodeKind::neg: return -eval_node(*n.args[0], env);
            case NodeKind::add: return eval_node(*n.args[0], env) + eval_node(*n.args[1], env);
            case NodeKind::sub: return eval_node(*n.args[0], env) - eval_node(*n.args[1], env);
            case NodeKind::mul: return eval_node(*n.args[0], env) * eval_node(*n.args[1], env);
            case NodeKind::div: {
                Jet den = eval_node(*n.args[1], env);
                if (den.value() == 0.0) return fail("division by zero");
                return eval_node(*n.args[0], env) / den;
            }
            case NodeKind::pow:
            case NodeKind::call:
                break;
        }
        if (n.kind == NodeKind::pow || (n.kind == NodeKind::call && n.func == Func::pow)) {
            Jet base = eval_node(*n.args[0], env);
            const Node& ex = *n.args[1];
            double cexp = 0.0;
            bool is_const = false;
            if (ex.kind == NodeKind::constant) {
                cexp = ex.value;
                is_const = true;
            } else if (ex.kind == NodeKind::neg && ex.args[0]->kind == NodeKind::constant) {
                cexp = -ex.args[0]->value;
                is_const = true;
            }
            if (is_const && integer_valued(cexp)) {
                if (cexp < 0 && base.value() == 0.0) return fail("division by zero");
                return ipow(base, static_cast<long>(cexp));
            }
            if (!(base.value() > 0.0)) return fail("non-integer power of a non-positive base");
            if (is_const) return powreal(base, cexp);
            return exp(eval_node(ex, env) * ln(base));
        }
        Jet a = eval_node(*n.args[0], env);
        switch (n.func) {
            case Func::ln:
                if (!(a.value() > 0.0)) return fail("ln of non-positive argument");
                return ln(a);
            case Func::exp: return exp(a);
            case Func::sqrt:
                if (!(a.value() > 0.0)) return fail("sqrt of non-positive argument");
                return sqrt(a);
            case Func::sin: return sin(a);
            case Func::cos: return cos(a);
            case Func::tan: return tan(a);
            case Func::abs:
                if (a.value() == 0.0) return fail("abs at zero");
                return abs(a);
            case Func::pow: break;
        }
    } catch (const JetError& e) {
        return fail(e.what());
    }
    return fail("unsupported node");
}

}  // namespace detail

inline Jet eval_jet(const Expr& e, const std::vector<std::string>& coords, std::span<const double> point,
                    const Bindings& bindings, int order) {
    if (point.size() != coords.size()) throw std::invalid_argument("eval_jet: point dimension mismatch");
    if (order < 0 || order > kMaxJetOrder) throw std::invalid_argument("eval_jet: order outside 0..4");
    detail::EvalEnv env{coords, point, bindings, order, e.source()};
    return detail::eval_node(e.root(), env);
}

inline double eval_value(const Expr& e, const std::vector<std::string>& coords, std::span<const double> point,
                         const Bindings& bindings = {}) {
    return eval_jet(e, coords, point, bindings, 0).value();
}

}  // namespace ahyp
