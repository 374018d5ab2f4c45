#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nonholo/errors.hpp"

namespace nonholo {

/// Assignment of real values to variable names. Looking up a name that is
/// not bound is an EvalError, never a silent default.
using Point = std::map<std::string, double>;

namespace detail {
struct Node;
}

/// Immutable symbolic expression over named variables.
///
/// Node kinds: exact-rational or floating constants, variables, sums,
/// products, quotients, integer powers, negation and square roots. All
/// construction goes through lightly-normalizing factory functions (constant
/// folding, 0/1 absorption), so `x + 0` and `x` build the same tree.
/// Expressions are values; copying is cheap and sharing is safe across
/// threads.
class Expr {
public:
    /// Default-constructs the zero constant.
    Expr();

    static Expr integer(std::int64_t n);
    static Expr rational(std::int64_t num, std::int64_t den);
    static Expr constant(double v);
    static Expr variable(std::string name);

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    Expr operator-() const;

    friend Expr pow(const Expr& base, int exponent);
    friend Expr sqrt(const Expr& arg);

    /// True when the tree is literally the constant 0 / 1.
    bool is_zero() const;
    bool is_one() const;

    /// Numeric value when the node is a constant, otherwise empty.
    std::optional<double> constant_value() const;

    const detail::Node* node() const { return node_.get(); }
    std::shared_ptr<const detail::Node> share() const { return node_; }

    /// Structural equality (same tree, exact constants compared exactly).
    friend bool identical(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::Node> node_;
    friend struct detail::Node;
    friend Expr make_expr(std::shared_ptr<const detail::Node>);
};

/// Parses the project-wide expression grammar: infix `+ - * /`, `^` with
/// integer exponents (right-associative, binding tighter than unary minus),
/// `sqrt(...)`, parentheses, identifiers `[a-zA-Z][a-zA-Z0-9_]*`, decimal
/// and rational literals (`3`, `0.5`, `3/4`, `1e-3`). Throws ParseError
/// with a byte offset; a non-integer exponent is rejected at parse time.
Expr parse(std::string_view text);

/// Canonical text form; parse(to_string(e)) rebuilds a structurally
/// identical tree.
std::string to_string(const Expr& e);

/// Exact symbolic partial derivative with respect to `var`.
Expr diff(const Expr& e, const std::string& var);

/// Evaluates at a point. Throws EvalError (unbound variable, division by
/// zero, sqrt of a negative value — each its own kind).
double eval(const Expr& e, const Point& p);

/// Replaces every occurrence of `var` by `replacement`.
Expr substitute(const Expr& e, const std::string& var, const Expr& replacement);

/// All variable names referenced by the expression.
std::set<std::string> variables(const Expr& e);

/// Controls randomized identity testing. Each variable is drawn uniformly
/// from [-box_max,-box_min] U [box_min,box_max]; points where evaluation
/// faults (a pole, say) are redrawn up to `retries` times.
struct SampleOptions {
    int samples = 20;
    double tol = 1e-10;
    double box_min = 0.1;
    double box_max = 2.0;
    int retries = 100;
    unsigned seed = 12345;
};

/// Probabilistic equality: true iff |a-b| <= tol*(1+|a|) at every sampled
/// point. Sound for the rational/sqrt expressions this project deals in;
/// it is sampling, not a proof.
bool equal(const Expr& a, const Expr& b, const SampleOptions& opts = {});
bool equal(const Expr& a, const Expr& b, int samples, double tol);

/// Best-effort canonicalization: constant folding, flattening, collecting
/// identical factors and terms, exponent arithmetic (so (1+x^2)/(1+x^2)
/// becomes 1). Semantics-preserving under `equal`; no completeness claim.
Expr simplify(const Expr& e);

/// Expression compiled to a flat evaluation tape over a fixed variable
/// order; one construction, many fast evaluations. Used by the integrators.
/// Each instance owns a scratch buffer: share Exprs across threads freely,
/// but give every thread its own tape.
class CompiledExpr {
public:
    CompiledExpr(const Expr& e, const std::vector<std::string>& variable_order);

    /// `values[i]` binds variable_order[i]. Throws the same EvalError kinds
    /// as eval().
    double operator()(const double* values) const;

private:
    enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Sqrt, Pow };
    struct Step {
        Op op;
        int a = 0, b = 0;
        double value = 0.0;
    };
    std::vector<Step> steps_;
    mutable std::vector<double> slots_;
};

} // namespace nonholo
