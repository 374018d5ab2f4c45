#include "nonholo/symexpr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <unordered_map>

namespace nonholo {

namespace detail {

enum class Kind : std::uint8_t { Constant, Variable, Sum, Product, Quotient, Power, Negate, Sqrt };

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

struct Node {
    Kind kind;
    // Constant
    bool exact = false;
    Rational rat;
    double value = 0.0;
    // Variable
    std::string name;
    // Composite
    std::shared_ptr<const Node> lhs, rhs; // Power/Negate/Sqrt use lhs only
    int exponent = 0;
};

} // namespace detail

using detail::Kind;
using detail::Node;
using detail::Rational;

Expr make_expr(std::shared_ptr<const Node> node);

namespace {

Expr wrap(std::shared_ptr<Node> n);
Expr E(const std::shared_ptr<const Node>& p);

bool rat_normalize(Rational& r) {
    if (r.den == 0) return false;
    if (r.den < 0) {
        if (r.num == std::numeric_limits<std::int64_t>::min() ||
            r.den == std::numeric_limits<std::int64_t>::min())
            return false;
        r.num = -r.num;
        r.den = -r.den;
    }
    std::int64_t g = std::gcd(r.num < 0 ? -r.num : r.num, r.den);
    if (g > 1) {
        r.num /= g;
        r.den /= g;
    }
    return true;
}

bool mul_overflows(std::int64_t a, std::int64_t b, std::int64_t& out) {
    __int128 p = static_cast<__int128>(a) * b;
    if (p > std::numeric_limits<std::int64_t>::max() || p < std::numeric_limits<std::int64_t>::min())
        return true;
    out = static_cast<std::int64_t>(p);
    return false;
}

bool add_overflows(std::int64_t a, std::int64_t b, std::int64_t& out) {
    __int128 s = static_cast<__int128>(a) + b;
    if (s > std::numeric_limits<std::int64_t>::max() || s < std::numeric_limits<std::int64_t>::min())
        return true;
    out = static_cast<std::int64_t>(s);
    return false;
}

double rat_value(const Rational& r) {
    return static_cast<double>(r.num) / static_cast<double>(r.den);
}

Expr make_rational(Rational r) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->exact = true;
    rat_normalize(r);
    n->rat = r;
    n->value = rat_value(r);
    return wrap(std::move(n));
}

Expr make_double(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->exact = false;
    n->value = v;
    return wrap(std::move(n));
}

bool is_const(const Node* n) { return n->kind == Kind::Constant; }

bool const_is(const Node* n, std::int64_t v) {
    return n->kind == Kind::Constant &&
           ((n->exact && n->rat.num == v && n->rat.den == 1) || (!n->exact && n->value == static_cast<double>(v)));
}

// Exact fold helpers; fall back to floating when either side is floating or
// the rational arithmetic would overflow.
Expr fold_add(const Node* a, const Node* b) {
    if (a->exact && b->exact) {
        Rational r;
        std::int64_t x, y;
        if (!mul_overflows(a->rat.num, b->rat.den, x) && !mul_overflows(b->rat.num, a->rat.den, y)) {
            std::int64_t num;
            if (!add_overflows(x, y, num) && !mul_overflows(a->rat.den, b->rat.den, r.den)) {
                r.num = num;
                if (rat_normalize(r)) return make_rational(r);
            }
        }
    }
    return make_double(a->value + b->value);
}

Expr fold_mul(const Node* a, const Node* b) {
    if (a->exact && b->exact) {
        Rational r;
        if (!mul_overflows(a->rat.num, b->rat.num, r.num) && !mul_overflows(a->rat.den, b->rat.den, r.den))
            if (rat_normalize(r)) return make_rational(r);
    }
    return make_double(a->value * b->value);
}

Expr fold_div(const Node* a, const Node* b) {
    if (a->exact && b->exact && b->rat.num != 0) {
        Rational r;
        if (!mul_overflows(a->rat.num, b->rat.den, r.num) && !mul_overflows(a->rat.den, b->rat.num, r.den))
            if (rat_normalize(r)) return make_rational(r);
    }
    return make_double(a->value / b->value);
}

Expr make_binary(Kind k, const Expr& a, const Expr& b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = a.share();
    n->rhs = b.share();
    return wrap(std::move(n));
}

Expr make_unary(Kind k, const Expr& a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = a.share();
    return wrap(std::move(n));
}

Expr E(const std::shared_ptr<const Node>& p) { return make_expr(p); }

} // namespace

Expr make_expr(std::shared_ptr<const Node> node) { return Expr(std::move(node)); }

namespace {
Expr wrap(std::shared_ptr<Node> n) { return make_expr(std::move(n)); }
} // namespace

Expr::Expr() : node_() { *this = integer(0); }

Expr Expr::integer(std::int64_t n) { return rational(n, 1); }

Expr Expr::rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error("rational constant with zero denominator");
    return make_rational(Rational{num, den});
}

Expr Expr::constant(double v) { return make_double(v); }

Expr Expr::variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->name = std::move(name);
    return wrap(std::move(n));
}

bool Expr::is_zero() const { return const_is(node_.get(), 0); }
bool Expr::is_one() const { return const_is(node_.get(), 1); }

std::optional<double> Expr::constant_value() const {
    if (node_->kind == Kind::Constant) return node_->value;
    return std::nullopt;
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (is_const(a.node()) && is_const(b.node())) return fold_add(a.node(), b.node());
    return make_binary(Kind::Sum, a, b);
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr Expr::operator-() const {
    const Node* n = node_.get();
    if (n->kind == Kind::Constant) {
        if (n->exact && n->rat.num != std::numeric_limits<std::int64_t>::min())
            return make_rational(Rational{-n->rat.num, n->rat.den});
        return make_double(-n->value);
    }
    if (n->kind == Kind::Negate) return E(n->lhs);
    return make_unary(Kind::Negate, *this);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr::integer(0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (is_const(a.node()) && is_const(b.node())) return fold_mul(a.node(), b.node());
    return make_binary(Kind::Product, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_one()) return a;
    if (a.is_zero() && !b.is_zero()) return Expr::integer(0);
    if (is_const(a.node()) && is_const(b.node()) && !b.is_zero()) return fold_div(a.node(), b.node());
    return make_binary(Kind::Quotient, a, b);
}

Expr pow(const Expr& base, int exponent) {
    if (exponent == 0) return Expr::integer(1);
    if (exponent == 1) return base;
    const Node* n = base.node();
    if (n->kind == Kind::Power) {
        long combined = static_cast<long>(n->exponent) * exponent;
        if (combined >= -64 && combined <= 64) return pow(E(n->lhs), static_cast<int>(combined));
    }
    if (n->kind == Kind::Constant && n->exact && std::abs(exponent) <= 62) {
        Rational r{1, 1};
        bool ok = true;
        std::int64_t bn = exponent > 0 ? n->rat.num : n->rat.den;
        std::int64_t bd = exponent > 0 ? n->rat.den : n->rat.num;
        if (bd == 0) ok = false; // 0 to a negative power: keep symbolic, eval reports it
        for (int i = 0; ok && i < std::abs(exponent); ++i)
            if (mul_overflows(r.num, bn, r.num) || mul_overflows(r.den, bd, r.den)) ok = false;
        if (ok && rat_normalize(r)) return make_rational(r);
    }
    if (n->kind == Kind::Constant && !n->exact) return make_double(std::pow(n->value, exponent));
    auto out = std::make_shared<Node>();
    out->kind = Kind::Power;
    out->lhs = base.share();
    out->exponent = exponent;
    return wrap(std::move(out));
}

Expr sqrt(const Expr& arg) {
    const Node* n = arg.node();
    if (n->kind == Kind::Constant && n->exact && n->rat.num >= 0 && n->rat.num <= (1LL << 50) &&
        n->rat.den <= (1LL << 50)) {
        auto isqrt = [](std::int64_t v) -> std::int64_t {
            auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
            while (r > 0 && r * r > v) --r;
            while ((r + 1) * (r + 1) <= v) ++r;
            return r;
        };
        std::int64_t sn = isqrt(n->rat.num), sd = isqrt(n->rat.den);
        if (sn * sn == n->rat.num && sd * sd == n->rat.den) return make_rational(Rational{sn, sd});
    }
    if (n->kind == Kind::Constant && !n->exact && n->value >= 0.0) return make_double(std::sqrt(n->value));
    return make_unary(Kind::Sqrt, arg);
}

// --------------------------------------------------------------------------
// structural identity and ordering

namespace {

int compare_nodes(const Node* a, const Node* b) {
    if (a == b) return 0;
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    switch (a->kind) {
    case Kind::Constant: {
        if (a->exact != b->exact) return a->exact ? -1 : 1;
        if (a->exact) {
            if (a->rat.num != b->rat.num) return a->rat.num < b->rat.num ? -1 : 1;
            if (a->rat.den != b->rat.den) return a->rat.den < b->rat.den ? -1 : 1;
            return 0;
        }
        if (a->value != b->value) return a->value < b->value ? -1 : 1;
        return 0;
    }
    case Kind::Variable:
        return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
    case Kind::Power: {
        if (int c = compare_nodes(a->lhs.get(), b->lhs.get())) return c;
        if (a->exponent != b->exponent) return a->exponent < b->exponent ? -1 : 1;
        return 0;
    }
    case Kind::Negate:
    case Kind::Sqrt:
        return compare_nodes(a->lhs.get(), b->lhs.get());
    default: {
        if (int c = compare_nodes(a->lhs.get(), b->lhs.get())) return c;
        return compare_nodes(a->rhs.get(), b->rhs.get());
    }
    }
}

} // namespace

bool identical(const Expr& a, const Expr& b) { return compare_nodes(a.node(), b.node()) == 0; }

// --------------------------------------------------------------------------
// parser

namespace {

struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError("syntax error: " + msg, pos); }

    Expr parse_expression() {
        Expr acc = parse_term();
        for (;;) {
            char c = peek();
            if (c == '+') {
                ++pos;
                acc = acc + parse_term();
            } else if (c == '-') {
                ++pos;
                acc = acc - parse_term();
            } else {
                return acc;
            }
        }
    }

    Expr parse_term() {
        Expr acc = parse_unary();
        for (;;) {
            char c = peek();
            if (c == '*') {
                ++pos;
                acc = acc * parse_unary();
            } else if (c == '/') {
                ++pos;
                acc = acc / parse_unary();
            } else {
                return acc;
            }
        }
    }

    Expr parse_unary() {
        if (peek() == '-') {
            ++pos;
            return -parse_unary();
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (peek() == '^') {
            ++pos;
            std::size_t at = pos;
            skip_ws();
            at = pos;
            Expr exp = parse_power(); // right-associative
            const Node* en = exp.node();
            if (en->kind != Kind::Constant)
                throw ParseError("non-integer exponent (use sqrt)", at);
            if (!en->exact || en->rat.den != 1)
                throw ParseError("non-integer exponent (use sqrt)", at);
            if (en->rat.num > 64 || en->rat.num < -64)
                throw ParseError("exponent out of range", at);
            return pow(base, static_cast<int>(en->rat.num));
        }
        return base;
    }

    Expr parse_atom() {
        char c = peek();
        if (c == '(') {
            ++pos;
            Expr e = parse_expression();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail(pos >= text.size() ? "unexpected end of input" : std::string("unexpected character '") + c + "'");
    }

    Expr parse_number() {
        skip_ws();
        std::size_t start = pos;
        bool floating = false;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos < text.size() && text[pos] == '.') {
            floating = true;
            ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        }
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t mark = pos;
            ++pos;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
            if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                floating = true;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            } else {
                pos = mark; // the 'e' belongs to an identifier, not this literal
            }
        }
        std::string lit(text.substr(start, pos - start));
        if (lit.empty() || lit == ".") fail("malformed number");
        if (!floating) {
            errno = 0;
            char* end = nullptr;
            long long v = std::strtoll(lit.c_str(), &end, 10);
            if (errno == 0 && end && *end == '\0') return Expr::integer(v);
        }
        return Expr::constant(std::strtod(lit.c_str(), nullptr));
    }

    Expr parse_identifier() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        std::string name(text.substr(start, pos - start));
        if (name == "sqrt") {
            if (!consume('(')) throw ParseError("syntax error: sqrt requires parentheses", pos);
            Expr arg = parse_expression();
            if (!consume(')')) fail("expected ')' after sqrt argument");
            return sqrt(arg);
        }
        if (peek() == '(') fail("unknown function '" + name + "'");
        return Expr::variable(std::move(name));
    }
};

} // namespace

Expr parse(std::string_view text) {
    Parser p{text};
    if (p.peek() == '\0') throw ParseError("syntax error: empty expression", 0);
    Expr e = p.parse_expression();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return e;
}

// --------------------------------------------------------------------------
// printer

namespace {

// Precedence: sum < product/quotient < unary minus < power < atom.
enum Prec { PrecSum = 1, PrecProduct = 2, PrecUnary = 3, PrecPower = 4, PrecAtom = 5 };

int precedence_of(const Node* n) {
    switch (n->kind) {
    case Kind::Constant:
        return (n->exact && n->rat.den != 1) ? PrecProduct // prints as num/den
               : (n->value < 0)              ? PrecUnary
                                             : PrecAtom;
    case Kind::Variable:
    case Kind::Sqrt:
        return PrecAtom;
    case Kind::Negate:
        return PrecUnary;
    case Kind::Power:
        return PrecPower;
    case Kind::Product:
    case Kind::Quotient:
        return PrecProduct;
    case Kind::Sum:
        return PrecSum;
    }
    return PrecAtom;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("in") == std::string::npos)
        s += ".0"; // keep floating literals distinguishable from integers
    return s;
}

void print_node(const Node* n, std::string& out, int parent_prec);

void print_child(const Node* n, std::string& out, int parent_prec) {
    bool parens = precedence_of(n) < parent_prec;
    if (parens) out += '(';
    print_node(n, out, parens ? PrecSum : parent_prec);
    if (parens) out += ')';
}

void print_node(const Node* n, std::string& out, int) {
    switch (n->kind) {
    case Kind::Constant:
        if (n->exact) {
            out += std::to_string(n->rat.num);
            if (n->rat.den != 1) {
                out += '/';
                out += std::to_string(n->rat.den);
            }
        } else {
            out += format_double(n->value);
        }
        break;
    case Kind::Variable:
        out += n->name;
        break;
    case Kind::Sum: {
        print_child(n->lhs.get(), out, PrecSum);
        const Node* r = n->rhs.get();
        if (r->kind == Kind::Negate) {
            out += " - ";
            print_child(r->lhs.get(), out, PrecProduct);
        } else if (r->kind == Kind::Constant && r->value < 0) {
            out += " - ";
            Expr positive = -E(n->rhs);
            print_child(positive.node(), out, PrecProduct);
        } else {
            out += " + ";
            print_child(n->rhs.get(), out, PrecProduct);
        }
        break;
    }
    case Kind::Product:
        print_child(n->lhs.get(), out, PrecProduct);
        out += '*';
        print_child(n->rhs.get(), out, PrecUnary);
        break;
    case Kind::Quotient:
        print_child(n->lhs.get(), out, PrecProduct);
        out += '/';
        print_child(n->rhs.get(), out, PrecUnary);
        break;
    case Kind::Negate:
        out += '-';
        print_child(n->lhs.get(), out, PrecUnary);
        break;
    case Kind::Power:
        print_child(n->lhs.get(), out, PrecAtom);
        out += '^';
        if (n->exponent < 0) {
            out += '(';
            out += std::to_string(n->exponent);
            out += ')';
        } else {
            out += std::to_string(n->exponent);
        }
        break;
    case Kind::Sqrt:
        out += "sqrt(";
        print_node(n->lhs.get(), out, PrecSum);
        out += ')';
        break;
    }
}

} // namespace

std::string to_string(const Expr& e) {
    std::string out;
    print_node(e.node(), out, PrecSum);
    return out;
}

// --------------------------------------------------------------------------
// calculus and evaluation

Expr diff(const Expr& e, const std::string& var) {
    const Node* n = e.node();
    switch (n->kind) {
    case Kind::Constant:
        return Expr::integer(0);
    case Kind::Variable:
        return n->name == var ? Expr::integer(1) : Expr::integer(0);
    case Kind::Sum:
        return diff(E(n->lhs), var) + diff(E(n->rhs), var);
    case Kind::Product:
        return diff(E(n->lhs), var) * E(n->rhs) + E(n->lhs) * diff(E(n->rhs), var);
    case Kind::Quotient:
        return (diff(E(n->lhs), var) * E(n->rhs) - E(n->lhs) * diff(E(n->rhs), var)) / pow(E(n->rhs), 2);
    case Kind::Negate:
        return -diff(E(n->lhs), var);
    case Kind::Power:
        return Expr::integer(n->exponent) * pow(E(n->lhs), n->exponent - 1) * diff(E(n->lhs), var);
    case Kind::Sqrt:
        return diff(E(n->lhs), var) / (Expr::integer(2) * sqrt(E(n->lhs)));
    }
    throw Error("unreachable node kind in diff");
}

namespace {

double eval_node(const Node* n, const Point& p, std::unordered_map<const Node*, double>& memo) {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    double result = 0.0;
    switch (n->kind) {
    case Kind::Constant:
        result = n->value;
        break;
    case Kind::Variable: {
        auto vit = p.find(n->name);
        if (vit == p.end())
            throw EvalError(EvalError::Kind::UnboundVariable, "unbound variable '" + n->name + "'");
        result = vit->second;
        break;
    }
    case Kind::Sum:
        result = eval_node(n->lhs.get(), p, memo) + eval_node(n->rhs.get(), p, memo);
        break;
    case Kind::Product:
        result = eval_node(n->lhs.get(), p, memo) * eval_node(n->rhs.get(), p, memo);
        break;
    case Kind::Quotient: {
        double denom = eval_node(n->rhs.get(), p, memo);
        if (denom == 0.0)
            throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
        result = eval_node(n->lhs.get(), p, memo) / denom;
        break;
    }
    case Kind::Negate:
        result = -eval_node(n->lhs.get(), p, memo);
        break;
    case Kind::Power: {
        double base = eval_node(n->lhs.get(), p, memo);
        if (base == 0.0 && n->exponent < 0)
            throw EvalError(EvalError::Kind::DivisionByZero, "zero raised to a negative power");
        result = std::pow(base, n->exponent);
        break;
    }
    case Kind::Sqrt: {
        double arg = eval_node(n->lhs.get(), p, memo);
        if (arg < 0.0)
            throw EvalError(EvalError::Kind::NegativeSqrt,
                            "square root of negative value " + std::to_string(arg));
        result = std::sqrt(arg);
        break;
    }
    }
    memo.emplace(n, result);
    return result;
}

} // namespace

double eval(const Expr& e, const Point& p) {
    std::unordered_map<const Node*, double> memo;
    return eval_node(e.node(), p, memo);
}

namespace {

Expr substitute_node(const Expr& e, const std::string& var, const Expr& r,
                     std::unordered_map<const Node*, Expr>& memo) {
    const Node* n = e.node();
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    Expr result;
    switch (n->kind) {
    case Kind::Constant:
        result = e;
        break;
    case Kind::Variable:
        result = (n->name == var) ? r : e;
        break;
    case Kind::Sum:
        result = substitute_node(E(n->lhs), var, r, memo) + substitute_node(E(n->rhs), var, r, memo);
        break;
    case Kind::Product:
        result = substitute_node(E(n->lhs), var, r, memo) * substitute_node(E(n->rhs), var, r, memo);
        break;
    case Kind::Quotient:
        result = substitute_node(E(n->lhs), var, r, memo) / substitute_node(E(n->rhs), var, r, memo);
        break;
    case Kind::Negate:
        result = -substitute_node(E(n->lhs), var, r, memo);
        break;
    case Kind::Power:
        result = pow(substitute_node(E(n->lhs), var, r, memo), n->exponent);
        break;
    case Kind::Sqrt:
        result = sqrt(substitute_node(E(n->lhs), var, r, memo));
        break;
    }
    memo.emplace(n, result);
    return result;
}

} // namespace

Expr substitute(const Expr& e, const std::string& var, const Expr& replacement) {
    std::unordered_map<const Node*, Expr> memo;
    return substitute_node(e, var, replacement, memo);
}

namespace {

void collect_vars(const Node* n, std::set<std::string>& out) {
    switch (n->kind) {
    case Kind::Constant:
        return;
    case Kind::Variable:
        out.insert(n->name);
        return;
    case Kind::Negate:
    case Kind::Power:
    case Kind::Sqrt:
        collect_vars(n->lhs.get(), out);
        return;
    default:
        collect_vars(n->lhs.get(), out);
        collect_vars(n->rhs.get(), out);
        return;
    }
}

} // namespace

std::set<std::string> variables(const Expr& e) {
    std::set<std::string> out;
    collect_vars(e.node(), out);
    return out;
}

// --------------------------------------------------------------------------
// randomized identity testing

namespace {

double draw_box(std::mt19937& rng, const SampleOptions& o) {
    std::uniform_real_distribution<double> mag(o.box_min, o.box_max);
    double v = mag(rng);
    return (rng() & 1u) ? v : -v;
}

} // namespace

bool equal(const Expr& a, const Expr& b, const SampleOptions& o) {
    std::set<std::string> vars = variables(a);
    for (const auto& v : variables(b)) vars.insert(v);

    std::mt19937 rng(o.seed);
    for (int s = 0; s < o.samples; ++s) {
        double va = 0.0, vb = 0.0;
        bool have = false;
        for (int attempt = 0; attempt <= o.retries; ++attempt) {
            Point p;
            for (const auto& v : vars) p[v] = draw_box(rng, o);
            try {
                va = eval(a, p);
                vb = eval(b, p);
                have = true;
                break;
            } catch (const EvalError&) {
                if (attempt == o.retries) throw;
            }
        }
        if (!have) return false;
        if (std::abs(va - vb) > o.tol * (1.0 + std::abs(va))) return false;
    }
    return true;
}

bool equal(const Expr& a, const Expr& b, int samples, double tol) {
    SampleOptions o;
    o.samples = samples;
    o.tol = tol;
    return equal(a, b, o);
}

// --------------------------------------------------------------------------
// simplification
//
// Working form: a product is (rational-or-double coefficient) * prod of
// (base, exponent2) with exponent2 counted in halves so that sqrt(u)*sqrt(u)
// collapses to u; a sum is a coefficient-keyed combination of such products.

namespace {

struct Factor {
    Expr base;
    int exp2; // exponent in units of 1/2
};

struct Coeff {
    bool exact = true;
    Rational rat{1, 1};
    double val = 1.0;

    static Coeff zero() {
        Coeff c;
        c.rat = {0, 1};
        c.val = 0.0;
        return c;
    }
    bool is_zero() const { return exact ? rat.num == 0 : val == 0.0; }
    bool is_one() const { return exact ? (rat.num == 1 && rat.den == 1) : val == 1.0; }
    double approx() const { return exact ? rat_value(rat) : val; }

    void mul(const Coeff& o) {
        if (exact && o.exact) {
            Rational r;
            if (!mul_overflows(rat.num, o.rat.num, r.num) && !mul_overflows(rat.den, o.rat.den, r.den) &&
                rat_normalize(r)) {
                rat = r;
                val = rat_value(r);
                return;
            }
        }
        val = approx() * o.approx();
        exact = false;
    }

    void add(const Coeff& o) {
        if (exact && o.exact) {
            std::int64_t x, y, num, den;
            if (!mul_overflows(rat.num, o.rat.den, x) && !mul_overflows(o.rat.num, rat.den, y) &&
                !add_overflows(x, y, num) && !mul_overflows(rat.den, o.rat.den, den)) {
                Rational r{num, den};
                if (rat_normalize(r)) {
                    rat = r;
                    val = rat_value(r);
                    return;
                }
            }
        }
        val = approx() + o.approx();
        exact = false;
    }

    Expr expr() const { return exact ? Expr::rational(rat.num, rat.den) : Expr::constant(val); }
};

struct NormalProduct {
    Coeff coeff;
    std::vector<Factor> factors; // sorted by base, unique

    void push(const Expr& base, int exp2) {
        if (exp2 == 0) return;
        auto it = std::lower_bound(factors.begin(), factors.end(), base,
                                   [](const Factor& f, const Expr& b) { return compare_nodes(f.base.node(), b.node()) < 0; });
        if (it != factors.end() && compare_nodes(it->base.node(), base.node()) == 0) {
            it->exp2 += exp2;
            if (it->exp2 == 0) factors.erase(it);
        } else {
            factors.insert(it, Factor{base, exp2});
        }
    }
};

Expr rebuild_product(const NormalProduct& np);

// Multiplies the normal form of `e`, raised to exp2 half-exponents, into np.
void accumulate(NormalProduct& np, const Expr& e, int exp2) {
    const Node* n = e.node();
    switch (n->kind) {
    case Kind::Constant: {
        if (exp2 % 2 == 0) {
            Expr folded = pow(e, exp2 / 2);
            if (folded.node()->kind == Kind::Constant) {
                Coeff c;
                c.exact = folded.node()->exact;
                c.rat = folded.node()->rat;
                c.val = folded.node()->value;
                np.coeff.mul(c);
                return;
            }
        } else {
            // c^(exp2/2) == sqrt(c)^exp2; folds when c is a perfect square
            Expr root = sqrt(e);
            if (root.node()->kind == Kind::Constant) {
                Expr folded = pow(root, exp2);
                if (folded.node()->kind == Kind::Constant) {
                    Coeff c;
                    c.exact = folded.node()->exact;
                    c.rat = folded.node()->rat;
                    c.val = folded.node()->value;
                    np.coeff.mul(c);
                    return;
                }
            }
        }
        np.push(e, exp2);
        return;
    }
    case Kind::Negate: {
        Coeff minus;
        minus.rat = {-1, 1};
        minus.val = -1.0;
        if (exp2 % 2 == 0) {
            for (int i = 0; i < std::abs(exp2) / 2; ++i) np.coeff.mul(minus);
            accumulate(np, E(n->lhs), exp2);
            return;
        }
        np.push(e, exp2); // sqrt of a negation: keep opaque
        return;
    }
    case Kind::Product:
        accumulate(np, E(n->lhs), exp2);
        accumulate(np, E(n->rhs), exp2);
        return;
    case Kind::Quotient:
        accumulate(np, E(n->lhs), exp2);
        accumulate(np, E(n->rhs), -exp2);
        return;
    case Kind::Power:
        accumulate(np, E(n->lhs), exp2 * n->exponent);
        return;
    case Kind::Sqrt:
        if (exp2 % 2 == 0) {
            accumulate(np, E(n->lhs), exp2 / 2);
            return;
        }
        np.push(e, exp2);
        return;
    default:
        np.push(e, exp2);
        return;
    }
}

Expr pow_half(const Expr& base, int exp2) {
    // exp2 half-units -> expression
    bool negative = exp2 < 0;
    int mag = std::abs(exp2);
    Expr whole = pow(base, mag / 2);
    Expr piece = (mag % 2) ? whole * sqrt(base) : whole;
    return negative ? Expr::integer(1) / piece : piece;
}

Expr rebuild_product(const NormalProduct& np) {
    if (np.coeff.is_zero()) return Expr::integer(0);
    Expr num = Expr::integer(1);
    Expr den = Expr::integer(1);
    for (const auto& f : np.factors) {
        if (f.exp2 > 0)
            num = num * pow_half(f.base, f.exp2);
        else
            den = den * pow_half(f.base, -f.exp2);
    }
    bool neg = np.coeff.approx() < 0.0;
    Coeff mag = np.coeff;
    if (neg) {
        Coeff minus;
        minus.rat = {-1, 1};
        minus.val = -1.0;
        mag.mul(minus);
    }
    Expr out = mag.is_one() ? num : mag.expr() * num;
    if (!den.is_one()) out = out / den;
    return neg ? -out : out;
}


Expr simplify_node(const Expr& e, std::unordered_map<const Node*, Expr>& memo);

// Normalizes a (simplified-children) expression into a flat sum of normal
// products, combining structurally identical term shapes.
void flatten_sum(const Expr& e, const Coeff& scale, std::vector<NormalProduct>& terms) {
    const Node* n = e.node();
    if (n->kind == Kind::Sum) {
        flatten_sum(E(n->lhs), scale, terms);
        flatten_sum(E(n->rhs), scale, terms);
        return;
    }
    if (n->kind == Kind::Negate) {
        Coeff flipped = scale;
        Coeff minus;
        minus.rat = {-1, 1};
        minus.val = -1.0;
        flipped.mul(minus);
        flatten_sum(E(n->lhs), flipped, terms);
        return;
    }
    NormalProduct np;
    np.coeff = scale;
    accumulate(np, e, 2);
    if (np.coeff.is_zero()) return;
    // merge with an existing term that has the same factor multiset
    for (auto& t : terms) {
        if (t.factors.size() != np.factors.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < t.factors.size(); ++i) {
            if (t.factors[i].exp2 != np.factors[i].exp2 ||
                compare_nodes(t.factors[i].base.node(), np.factors[i].base.node()) != 0) {
                same = false;
                break;
            }
        }
        if (same) {
            t.coeff.add(np.coeff);
            return;
        }
    }
    terms.push_back(std::move(np));
}

bool term_less(const NormalProduct& a, const NormalProduct& b) {
    std::size_t n = std::min(a.factors.size(), b.factors.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c = compare_nodes(a.factors[i].base.node(), b.factors[i].base.node());
        if (c) return c < 0;
        if (a.factors[i].exp2 != b.factors[i].exp2) return a.factors[i].exp2 > b.factors[i].exp2;
    }
    if (a.factors.size() != b.factors.size()) return a.factors.size() > b.factors.size();
    return a.coeff.approx() > b.coeff.approx();
}

Expr simplify_node(const Expr& e, std::unordered_map<const Node*, Expr>& memo) {
    const Node* n = e.node();
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;

    Expr result;
    switch (n->kind) {
    case Kind::Constant:
    case Kind::Variable:
        result = e;
        break;
    case Kind::Sqrt: {
        Expr inner = simplify_node(E(n->lhs), memo);
        result = sqrt(inner);
        break;
    }
    default: {
        // simplify children first, then renormalize this whole subtree
        Expr rebuilt;
        switch (n->kind) {
        case Kind::Sum:
            rebuilt = simplify_node(E(n->lhs), memo) + simplify_node(E(n->rhs), memo);
            break;
        case Kind::Product:
            rebuilt = simplify_node(E(n->lhs), memo) * simplify_node(E(n->rhs), memo);
            break;
        case Kind::Quotient:
            rebuilt = simplify_node(E(n->lhs), memo) / simplify_node(E(n->rhs), memo);
            break;
        case Kind::Negate:
            rebuilt = -simplify_node(E(n->lhs), memo);
            break;
        case Kind::Power:
            rebuilt = pow(simplify_node(E(n->lhs), memo), n->exponent);
            break;
        default:
            rebuilt = e;
            break;
        }
        std::vector<NormalProduct> terms;
        Coeff one;
        flatten_sum(rebuilt, one, terms);
        std::sort(terms.begin(), terms.end(), term_less);
        Expr acc = Expr::integer(0);
        for (const auto& t : terms) {
            Expr piece = rebuild_product(t);
            acc = acc + piece;
        }
        result = acc;
        break;
    }
    }
    memo.emplace(n, result);
    return result;
}

} // namespace

namespace {

// --------------------------------------------------------------------------
// fraction normal form
//
// Expressions are flattened to N / prod(B_i^{k_i}) where N and the B_i are
// expanded polynomials over "atoms" (variables and sqrt subtrees), the B_i
// are monic in graded-lex order, and the numerator is reduced against each
// denominator base by exact multivariate division. sqrt atoms collapse in
// pairs to their (polynomial) radicand. When an expression resists this
// shape (oversize expansion, exotic structure) the lightweight normalizer
// above is used instead.

struct TooBig {};

constexpr std::size_t kMaxTerms = 4000;

using Mono = std::vector<std::pair<Expr, int>>; // sorted by atom, exponents > 0

// Graded lexicographic order (earlier atoms rank higher); must stay
// compatible with monomial multiplication or exact division misfires.
struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const {
        int da = 0, db = 0;
        for (const auto& [atom, e] : a) da += e;
        for (const auto& [atom, e] : b) db += e;
        if (da != db) return da < db;
        std::size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
            int c = (j == b.size())   ? -1
                    : (i == a.size()) ? 1
                                      : compare_nodes(a[i].first.node(), b[j].first.node());
            if (c < 0) return false; // a carries the earlier atom -> a is larger
            if (c > 0) return true;
            if (a[i].second != b[j].second) return a[i].second < b[j].second;
            ++i;
            ++j;
        }
        return false;
    }
};

using Poly = std::map<Mono, Coeff, MonoLess>;

bool coeff_equal(const Coeff& a, const Coeff& b) {
    if (a.exact && b.exact) return a.rat.num == b.rat.num && a.rat.den == b.rat.den;
    return a.approx() == b.approx();
}

bool poly_equal(const Poly& a, const Poly& b) {
    if (a.size() != b.size()) return false;
    auto ia = a.begin();
    auto ib = b.begin();
    for (; ia != a.end(); ++ia, ++ib) {
        if (ia->first.size() != ib->first.size()) return false;
        for (std::size_t i = 0; i < ia->first.size(); ++i) {
            if (compare_nodes(ia->first[i].first.node(), ib->first[i].first.node()) != 0) return false;
            if (ia->first[i].second != ib->first[i].second) return false;
        }
        if (!coeff_equal(ia->second, ib->second)) return false;
    }
    return true;
}

void poly_add_term(Poly& p, const Mono& m, const Coeff& c) {
    if (c.is_zero()) return;
    auto it = p.find(m);
    if (it == p.end()) {
        if (p.size() >= kMaxTerms) throw TooBig{};
        p.emplace(m, c);
    } else {
        it->second.add(c);
        if (it->second.is_zero()) p.erase(it);
    }
}

Poly poly_zero() { return Poly{}; }

Poly poly_const(const Coeff& c) {
    Poly p;
    poly_add_term(p, Mono{}, c);
    return p;
}

Poly poly_one() {
    Coeff one;
    return poly_const(one);
}

bool poly_is_one(const Poly& p) { return p.size() == 1 && p.begin()->first.empty() && p.begin()->second.is_one(); }

Poly poly_add(const Poly& a, const Poly& b) {
    Poly out = a;
    for (const auto& [m, c] : b) poly_add_term(out, m, c);
    return out;
}

Poly poly_neg(const Poly& a) {
    Poly out;
    Coeff minus;
    minus.rat = {-1, 1};
    minus.val = -1.0;
    for (const auto& [m, c] : a) {
        Coeff flipped = c;
        flipped.mul(minus);
        out.emplace(m, flipped);
    }
    return out;
}

// Forward declaration: sqrt collapse needs the radicand's polynomial form.
const Poly* sqrt_radicand(const Expr& atom);

// Multiplies two monomials; sqrt-atom pairs collapse to their radicand,
// which can spread the product over several terms.
Poly term_mul(const Mono& ma, const Coeff& ca, const Mono& mb, const Coeff& cb) {
    Coeff c = ca;
    c.mul(cb);
    Mono merged;
    merged.reserve(ma.size() + mb.size());
    std::size_t i = 0, j = 0;
    while (i < ma.size() || j < mb.size()) {
        if (j == mb.size() ||
            (i < ma.size() && compare_nodes(ma[i].first.node(), mb[j].first.node()) < 0)) {
            merged.push_back(ma[i++]);
        } else if (i == ma.size() || compare_nodes(ma[i].first.node(), mb[j].first.node()) > 0) {
            merged.push_back(mb[j++]);
        } else {
            merged.emplace_back(ma[i].first, ma[i].second + mb[j].second);
            ++i;
            ++j;
        }
    }

    Poly acc = poly_const(c);
    Mono plain;
    for (auto& [atom, exp] : merged) {
        if (exp == 0) continue;
        const Poly* rad = atom.node()->kind == Kind::Sqrt ? sqrt_radicand(atom) : nullptr;
        if (rad && exp >= 2) {
            Poly mult = poly_one();
            for (int r = 0; r < exp / 2; ++r) {
                Poly next;
                for (const auto& [m1, c1] : mult)
                    for (const auto& [m2, c2] : *rad) {
                        Poly piece = term_mul(m1, c1, m2, c2);
                        next = poly_add(next, piece);
                    }
                mult = std::move(next);
            }
            Poly next;
            for (const auto& [m1, c1] : acc)
                for (const auto& [m2, c2] : mult) {
                    Poly piece = term_mul(m1, c1, m2, c2);
                    next = poly_add(next, piece);
                }
            acc = std::move(next);
            if (exp % 2 == 1) plain.emplace_back(atom, 1);
        } else {
            if (exp < 0 || exp > 64) throw TooBig{};
            plain.emplace_back(atom, exp);
        }
    }
    Poly out;
    for (const auto& [m, cc] : acc) {
        Mono combined = m;
        // m and plain are disjoint atom sets only when no radicand atom
        // reappears; merge properly to stay sorted
        Mono merged2;
        std::size_t x = 0, y = 0;
        while (x < combined.size() || y < plain.size()) {
            if (y == plain.size() ||
                (x < combined.size() &&
                 compare_nodes(combined[x].first.node(), plain[y].first.node()) < 0)) {
                merged2.push_back(combined[x++]);
            } else if (x == combined.size() ||
                       compare_nodes(combined[x].first.node(), plain[y].first.node()) > 0) {
                merged2.push_back(plain[y++]);
            } else {
                merged2.emplace_back(combined[x].first, combined[x].second + plain[y].second);
                ++x;
                ++y;
            }
        }
        poly_add_term(out, merged2, cc);
    }
    return out;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    if (a.size() * b.size() > kMaxTerms) throw TooBig{};
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            Poly piece = term_mul(ma, ca, mb, cb);
            out = poly_add(out, piece);
        }
    return out;
}

// Graded-lex exact division; empty result when not divisible. Exact
// coefficient arithmetic only (double contamination disables cancellation).
bool poly_all_exact(const Poly& p) {
    for (const auto& [m, c] : p)
        if (!c.exact) return false;
    return true;
}

bool mono_divides(const Mono& d, const Mono& n, Mono& quotient) {
    quotient.clear();
    std::size_t i = 0;
    for (const auto& [atom, exp] : n) {
        if (i < d.size() && compare_nodes(d[i].first.node(), atom.node()) == 0) {
            if (d[i].second > exp) return false;
            if (exp - d[i].second > 0) quotient.emplace_back(atom, exp - d[i].second);
            ++i;
        } else {
            quotient.emplace_back(atom, exp);
        }
    }
    return i == d.size();
}

bool poly_exact_divide(const Poly& num, const Poly& den, Poly& quotient) {
    if (den.empty()) return false;
    if (!poly_all_exact(num) || !poly_all_exact(den)) return false;
    quotient.clear();
    Poly rem = num;
    const auto& dlead = *den.rbegin(); // graded-lex largest
    int steps = 0;
    while (!rem.empty()) {
        if (++steps > 2000) return false;
        const auto& rlead = *rem.rbegin();
        Mono qm;
        if (!mono_divides(dlead.first, rlead.first, qm)) return false;
        Coeff qc = rlead.second;
        Coeff inv;
        inv.rat = {dlead.second.rat.den, dlead.second.rat.num};
        if (dlead.second.rat.num == 0) return false;
        if (dlead.second.rat.num < 0) inv.rat = {-dlead.second.rat.den, -dlead.second.rat.num};
        inv.val = 1.0 / dlead.second.approx();
        qc.mul(inv);
        Poly qterm;
        poly_add_term(qterm, qm, qc);
        quotient = poly_add(quotient, qterm);
        Poly sub = poly_mul(qterm, den);
        rem = poly_add(rem, poly_neg(sub));
    }
    return true;
}

struct Frac {
    Poly num;
    std::vector<std::pair<Poly, int>> den; // monic bases, exponents > 0
};

// Divides through by denominator bases where possible and drops the
// denominator entirely when the numerator vanishes.
void frac_reduce(Frac& f) {
    if (f.num.empty()) {
        f.den.clear();
        return;
    }
    for (auto it = f.den.begin(); it != f.den.end();) {
        bool erased = false;
        while (it->second > 0) {
            Poly q;
            if (!poly_exact_divide(f.num, it->first, q)) break;
            f.num = std::move(q);
            --it->second;
        }
        if (it->second == 0) {
            it = f.den.erase(it);
            erased = true;
        }
        if (!erased) ++it;
    }
}

// Makes a polynomial monic (graded-lex leading coefficient 1) and returns
// the leading coefficient pulled out.
Coeff make_monic(Poly& p) {
    Coeff lead = p.rbegin()->second;
    if (lead.is_one()) {
        Coeff one;
        return one;
    }
    Coeff inv;
    if (lead.exact && lead.rat.num != 0) {
        inv.rat = lead.rat.num > 0 ? Rational{lead.rat.den, lead.rat.num}
                                   : Rational{-lead.rat.den, -lead.rat.num};
        inv.val = rat_value(inv.rat);
        if (lead.rat.num < 0) {
            // keep bases with positive leading coefficient
        }
    } else {
        inv.exact = false;
        inv.val = 1.0 / lead.approx();
    }
    // recompute exact inverse including sign
    if (lead.exact) {
        inv.exact = true;
        inv.rat = Rational{lead.rat.den, lead.rat.num};
        rat_normalize(inv.rat);
        inv.val = rat_value(inv.rat);
    }
    Poly scaled;
    for (const auto& [m, c] : p) {
        Coeff cc = c;
        cc.mul(inv);
        scaled.emplace(m, cc);
    }
    p = std::move(scaled);
    return lead;
}

void frac_push_den(Frac& f, Poly base, int exp) {
    if (exp == 0 || poly_is_one(base)) return;
    if (base.empty()) throw TooBig{}; // division by symbolic zero: fall back
    Coeff lead = make_monic(base);
    if (!lead.is_one()) {
        // numerator gets divided by lead^exp
        Coeff inv;
        if (lead.exact) {
            inv.rat = Rational{lead.rat.den, lead.rat.num};
            rat_normalize(inv.rat);
            inv.val = rat_value(inv.rat);
        } else {
            inv.exact = false;
            inv.val = 1.0 / lead.approx();
        }
        Poly scale = poly_one();
        for (int i = 0; i < exp; ++i) {
            Poly c = poly_const(inv);
            scale = poly_mul(scale, c);
        }
        f.num = poly_mul(f.num, scale);
    }
    for (auto& [b, e] : f.den)
        if (poly_equal(b, base)) {
            e += exp;
            return;
        }
    if (f.den.size() >= 16) throw TooBig{};
    f.den.emplace_back(std::move(base), exp);
}

Frac frac_from_poly(Poly p) { return Frac{std::move(p), {}}; }

Frac frac_mul(const Frac& a, const Frac& b) {
    Frac out;
    out.num = poly_mul(a.num, b.num);
    out.den = a.den;
    Frac tmp{std::move(out.num), std::move(out.den)};
    for (const auto& [base, exp] : b.den) frac_push_den(tmp, base, exp);
    frac_reduce(tmp);
    return tmp;
}

Frac frac_add(const Frac& a, const Frac& b) {
    // common denominator: per-base max exponent
    Frac out;
    out.den = a.den;
    for (const auto& [base, exp] : b.den) {
        bool found = false;
        for (auto& [obase, oexp] : out.den)
            if (poly_equal(obase, base)) {
                oexp = std::max(oexp, exp);
                found = true;
                break;
            }
        if (!found) {
            if (out.den.size() >= 16) throw TooBig{};
            out.den.emplace_back(base, exp);
        }
    }
    auto scale_to_common = [&](const Frac& f) {
        Poly scaled = f.num;
        for (const auto& [base, exp] : out.den) {
            int have = 0;
            for (const auto& [fbase, fexp] : f.den)
                if (poly_equal(fbase, base)) {
                    have = fexp;
                    break;
                }
            for (int i = 0; i < exp - have; ++i) scaled = poly_mul(scaled, base);
        }
        return scaled;
    };
    out.num = poly_add(scale_to_common(a), scale_to_common(b));
    frac_reduce(out);
    return out;
}

Frac frac_neg(const Frac& a) { return Frac{poly_neg(a.num), a.den}; }

Frac frac_invert(const Frac& a) {
    Frac out;
    out.num = poly_one();
    for (const auto& [base, exp] : a.den) {
        Poly scaled = base;
        for (int i = 1; i < exp; ++i) scaled = poly_mul(scaled, base);
        out.num = poly_mul(out.num, scaled);
    }
    Frac tmp{std::move(out.num), {}};
    frac_push_den(tmp, a.num, 1);
    frac_reduce(tmp);
    return tmp;
}

Frac frac_pow(const Frac& a, int k) {
    if (k == 0) return frac_from_poly(poly_one());
    Frac base = k > 0 ? a : frac_invert(a);
    Frac out = base;
    for (int i = 1; i < std::abs(k); ++i) out = frac_mul(out, base);
    return out;
}

Expr rebuild_poly(const Poly& p);
Expr rebuild_frac(const Frac& f);

// Registry of sqrt atoms whose radicand is a plain polynomial; needed when
// multiplying sqrt pairs back together.
thread_local std::vector<std::pair<const Node*, Poly>>* g_sqrt_registry = nullptr;

const Poly* sqrt_radicand(const Expr& atom) {
    if (!g_sqrt_registry) return nullptr;
    for (auto& [node, poly] : *g_sqrt_registry)
        if (node == atom.node()) return &poly;
    return nullptr;
}

Frac normalize_frac(const Expr& e, std::unordered_map<const Node*, Frac>& memo);

Frac normalize_sqrt(const Expr& e, std::unordered_map<const Node*, Frac>& memo) {
    const Node* n = e.node();
    Frac inner = normalize_frac(E(n->lhs), memo);
    if (inner.den.empty()) {
        Poly p = inner.num;
        if (p.empty()) return frac_from_poly(poly_zero());
        // single monomial with even exponents and a square coefficient has
        // an exact square root
        if (p.size() == 1 && p.begin()->second.exact && p.begin()->second.rat.num >= 0) {
            const auto& [mono, coeff] = *p.begin();
            bool even = true;
            for (const auto& [atom, exp] : mono)
                if (exp % 2 != 0) {
                    even = false;
                    break;
                }
            Expr root = sqrt(Expr::rational(coeff.rat.num, coeff.rat.den));
            if (even && root.node()->kind == Kind::Constant) {
                Mono half;
                for (const auto& [atom, exp] : mono) half.emplace_back(atom, exp / 2);
                Coeff rc;
                rc.exact = root.node()->exact;
                rc.rat = root.node()->rat;
                rc.val = root.node()->value;
                Poly out;
                poly_add_term(out, half, rc);
                return frac_from_poly(out);
            }
        }
        // pull out a rational square content so sqrt(4+4x^2) = 2 sqrt(1+x^2)
        Coeff content = p.rbegin()->second; // leading coefficient
        Frac result;
        Expr arg = rebuild_poly(p);
        Expr scale = Expr::integer(1);
        if (content.exact && content.rat.num > 0) {
            auto square_part = [](std::int64_t v) {
                std::int64_t s = 1;
                for (std::int64_t f = 2; f * f <= v; ++f)
                    while (v % (f * f) == 0) {
                        v /= f * f;
                        s *= f;
                    }
                return s;
            };
            std::int64_t sn = square_part(content.rat.num);
            std::int64_t sd = square_part(content.rat.den);
            if (sn > 1 || sd > 1) {
                Coeff inv;
                inv.rat = Rational{sd * sd, sn * sn};
                rat_normalize(inv.rat);
                inv.val = rat_value(inv.rat);
                Poly scaled;
                for (const auto& [m, c] : p) {
                    Coeff cc = c;
                    cc.mul(inv);
                    scaled.emplace(m, cc);
                }
                arg = rebuild_poly(scaled);
                scale = Expr::rational(sn, sd);
                p = std::move(scaled);
            }
        }
        Expr atom = sqrt(arg);
        if (atom.node()->kind == Kind::Constant) {
            Frac c = frac_from_poly(poly_const([&] {
                Coeff cc;
                cc.exact = atom.node()->exact;
                cc.rat = atom.node()->rat;
                cc.val = atom.node()->value;
                return cc;
            }()));
            Frac s = frac_from_poly(poly_const([&] {
                Coeff cc;
                cc.exact = scale.node()->exact;
                cc.rat = scale.node()->rat;
                cc.val = scale.node()->value;
                return cc;
            }()));
            return frac_mul(c, s);
        }
        if (g_sqrt_registry) g_sqrt_registry->emplace_back(atom.node(), p);
        Mono m{{atom, 1}};
        Poly out;
        Coeff one;
        poly_add_term(out, m, one);
        Frac f = frac_from_poly(out);
        Frac s = frac_from_poly(poly_const([&] {
            Coeff cc;
            cc.exact = scale.node()->exact;
            cc.rat = scale.node()->rat;
            cc.val = scale.node()->value;
            return cc;
        }()));
        return frac_mul(f, s);
    }
    // radicand with a denominator stays opaque
    Expr atom = sqrt(rebuild_frac(inner));
    Mono m{{atom, 1}};
    Poly out;
    Coeff one;
    poly_add_term(out, m, one);
    return frac_from_poly(out);
}

Frac normalize_frac(const Expr& e, std::unordered_map<const Node*, Frac>& memo) {
    const Node* n = e.node();
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    Frac result;
    switch (n->kind) {
    case Kind::Constant: {
        Coeff c;
        c.exact = n->exact;
        c.rat = n->rat;
        c.val = n->value;
        result = frac_from_poly(poly_const(c));
        break;
    }
    case Kind::Variable: {
        Mono m{{e, 1}};
        Poly p;
        Coeff one;
        poly_add_term(p, m, one);
        result = frac_from_poly(p);
        break;
    }
    case Kind::Sum:
        result = frac_add(normalize_frac(E(n->lhs), memo), normalize_frac(E(n->rhs), memo));
        break;
    case Kind::Product:
        result = frac_mul(normalize_frac(E(n->lhs), memo), normalize_frac(E(n->rhs), memo));
        break;
    case Kind::Quotient: {
        Frac lhs = normalize_frac(E(n->lhs), memo);
        const Node* r = n->rhs.get();
        // keep (base)^k denominators factored rather than expanded
        Frac rinv = (r->kind == Kind::Power && r->exponent > 1)
                        ? frac_pow(frac_invert(normalize_frac(E(r->lhs), memo)), r->exponent)
                        : frac_invert(normalize_frac(E(n->rhs), memo));
        result = frac_mul(lhs, rinv);
        break;
    }
    case Kind::Negate:
        result = frac_neg(normalize_frac(E(n->lhs), memo));
        break;
    case Kind::Power:
        result = frac_pow(normalize_frac(E(n->lhs), memo), n->exponent);
        break;
    case Kind::Sqrt:
        result = normalize_sqrt(e, memo);
        break;
    }
    memo.emplace(n, result);
    return result;
}

Expr rebuild_mono_coeff(const Mono& m, const Coeff& cmag) {
    Expr term = cmag.is_one() && !m.empty() ? Expr::integer(1) : cmag.expr();
    bool first = cmag.is_one() && !m.empty();
    Expr acc;
    bool have = false;
    if (!first) {
        acc = term;
        have = true;
    }
    for (const auto& [atom, exp] : m) {
        Expr piece = exp == 1 ? atom : pow(atom, exp);
        if (have)
            acc = acc * piece;
        else {
            acc = piece;
            have = true;
        }
    }
    if (!have) acc = cmag.expr();
    return acc;
}

Expr rebuild_poly(const Poly& p) {
    if (p.empty()) return Expr::integer(0);
    // iterate leading (largest) terms first so "x^2 + 1" reads naturally
    Expr acc;
    bool have = false;
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        const auto& [m, c] = *it;
        bool negative = c.approx() < 0;
        Coeff mag = c;
        if (negative) {
            Coeff minus;
            minus.rat = {-1, 1};
            minus.val = -1.0;
            mag.mul(minus);
        }
        Expr term = rebuild_mono_coeff(m, mag);
        if (!have) {
            acc = negative ? -term : term;
            have = true;
        } else {
            acc = negative ? acc - term : acc + term;
        }
    }
    return acc;
}

Expr rebuild_frac(const Frac& f) {
    Expr num = rebuild_poly(f.num);
    if (f.den.empty()) return num;
    Expr den;
    bool have = false;
    for (const auto& [base, exp] : f.den) {
        Expr b = rebuild_poly(base);
        Expr piece = exp == 1 ? b : pow(b, exp);
        if (have)
            den = den * piece;
        else {
            den = piece;
            have = true;
        }
    }
    return num / den;
}

} // namespace

Expr simplify(const Expr& e) {
    std::vector<std::pair<const Node*, Poly>> registry;
    g_sqrt_registry = &registry;
    Expr out;
    try {
        std::unordered_map<const Node*, Frac> memo;
        Frac f = normalize_frac(e, memo);
        out = rebuild_frac(f);
    } catch (const TooBig&) {
        std::unordered_map<const Node*, Expr> memo;
        out = simplify_node(e, memo);
    }
    g_sqrt_registry = nullptr;
    return out;
}

// --------------------------------------------------------------------------
// compiled evaluation tape

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<std::string>& order) {
    std::unordered_map<const Node*, int> slot;
    std::function<int(const Node*)> emit = [&](const Node* n) -> int {
        auto it = slot.find(n);
        if (it != slot.end()) return it->second;
        Step s;
        switch (n->kind) {
        case Kind::Constant:
            s.op = Op::Const;
            s.value = n->value;
            break;
        case Kind::Variable: {
            auto vit = std::find(order.begin(), order.end(), n->name);
            if (vit == order.end())
                throw EvalError(EvalError::Kind::UnboundVariable, "unbound variable '" + n->name + "'");
            s.op = Op::Var;
            s.a = static_cast<int>(vit - order.begin());
            break;
        }
        case Kind::Sum:
            s.op = Op::Add;
            s.a = emit(n->lhs.get());
            s.b = emit(n->rhs.get());
            break;
        case Kind::Product:
            s.op = Op::Mul;
            s.a = emit(n->lhs.get());
            s.b = emit(n->rhs.get());
            break;
        case Kind::Quotient:
            s.op = Op::Div;
            s.a = emit(n->lhs.get());
            s.b = emit(n->rhs.get());
            break;
        case Kind::Negate:
            s.op = Op::Neg;
            s.a = emit(n->lhs.get());
            break;
        case Kind::Power:
            s.op = Op::Pow;
            s.a = emit(n->lhs.get());
            s.b = n->exponent;
            break;
        case Kind::Sqrt:
            s.op = Op::Sqrt;
            s.a = emit(n->lhs.get());
            break;
        }
        steps_.push_back(s);
        int idx = static_cast<int>(steps_.size()) - 1;
        slot.emplace(n, idx);
        return idx;
    };
    emit(e.node());
    slots_.resize(steps_.size());
}

double CompiledExpr::operator()(const double* values) const {
    double* s = slots_.data();
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const Step& st = steps_[i];
        switch (st.op) {
        case Op::Const:
            s[i] = st.value;
            break;
        case Op::Var:
            s[i] = values[st.a];
            break;
        case Op::Add:
            s[i] = s[st.a] + s[st.b];
            break;
        case Op::Sub:
            s[i] = s[st.a] - s[st.b];
            break;
        case Op::Mul:
            s[i] = s[st.a] * s[st.b];
            break;
        case Op::Div:
            if (s[st.b] == 0.0) throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
            s[i] = s[st.a] / s[st.b];
            break;
        case Op::Neg:
            s[i] = -s[st.a];
            break;
        case Op::Sqrt:
            if (s[st.a] < 0.0)
                throw EvalError(EvalError::Kind::NegativeSqrt, "square root of negative value");
            s[i] = std::sqrt(s[st.a]);
            break;
        case Op::Pow:
            if (s[st.a] == 0.0 && st.b < 0)
                throw EvalError(EvalError::Kind::DivisionByZero, "zero raised to a negative power");
            s[i] = std::pow(s[st.a], st.b);
            break;
        }
    }
    return steps_.empty() ? 0.0 : slots_.back();
}

} // namespace nonholo
