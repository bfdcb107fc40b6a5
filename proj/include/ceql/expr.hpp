#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ceql/network.hpp"

namespace ceql {

/// Immutable n-ary expression tree. Variables are 1-based (Var(1) is x1).
class Expr {
public:
    enum class Kind { Sum, Product, Power, Log, Sqrt, Divide, Var, Const };

    static Expr constant(double value);
    static Expr var(int index);
    static Expr sum(std::vector<Expr> terms);
    static Expr product(std::vector<Expr> factors);
    static Expr power(Expr base, Expr exponent);
    static Expr power(Expr base, double exponent) { return power(std::move(base), constant(exponent)); }
    static Expr log(Expr arg);
    static Expr sqrt(Expr arg);
    static Expr divide(Expr numerator, Expr denominator);

    Kind kind() const { return kind_; }
    double value() const { return value_; }
    int index() const { return index_; }
    const std::vector<Expr>& children() const { return children_; }
    const Expr& child(std::size_t i) const { return children_[i]; }

    bool is_const() const { return kind_ == Kind::Const; }
    bool operator==(const Expr& other) const;

private:
    Expr(Kind kind, double value, int index, std::vector<Expr> children)
        : kind_(kind), value_(value), index_(index), children_(std::move(children)) {}

    Kind kind_ = Kind::Const;
    double value_ = 0.0;
    int index_ = 0;
    std::vector<Expr> children_;
};

const char* to_string(Expr::Kind kind);

/// Total structural order used for canonical child ordering.
int compare(const Expr& a, const Expr& b);

/// Expression size: every Sum/Product/Power/Log/Sqrt/Divide counts one plus its
/// children regardless of arity; Var and Const count one. A power's exponent
/// literal is a Const child and signed constants are single nodes. With this
/// convention 1.87*x1 + 2.01 has 5 nodes and a full bivariate quadratic 22.
Index node_count(const Expr& e);

enum class EvalStatus { Ok, LogDomain, SqrtDomain, DivisionByZero, NonFinite };

const char* to_string(EvalStatus status);

struct EvalResult {
    double value = 0.0;
    EvalStatus status = EvalStatus::Ok;

    bool ok() const { return status == EvalStatus::Ok; }
};

/// Real evaluation. Log/Sqrt of non-positive arguments and denominators with
/// |den| < 1e-12 flag the point instead of producing a value.
EvalResult eval_expr(const Expr& e, std::span<const double> inputs);

struct SimplifyOptions {
    /// Sum terms with |coefficient| below this are dropped.
    double coeff_drop = 1e-9;
};

/// Canonical form: polynomial parts expanded with like terms collected,
/// constant subtrees folded, sums and products flattened, quotients grouped by
/// denominator as Divide(numerator, denominator).
Expr simplify(const Expr& e, const SimplifyOptions& options = {});

/// Infix text with `precision` decimals (trailing zeros trimmed).
std::string render(const Expr& e, int precision = 5);

nlohmann::json to_json(const Expr& e);
Expr expr_from_json(const nlohmann::json& j);

/// Degree of `e` as a polynomial in x_var, or -1 if it is not a polynomial.
int polynomial_degree(const Expr& e, int var);

/// Real roots of a univariate polynomial expression in x_var of degree <= 2
/// (empty if none or the expression is not such a polynomial).
std::vector<double> real_roots(const Expr& e, int var);

/// All Divide nodes of the tree, outermost first.
std::vector<Expr> find_divides(const Expr& e);

struct ExtractOptions {
    double im_tolerance = 1e-4;
    double coeff_drop = 1e-9;
    /// Optional sample of input points. A log or sqrt argument that is
    /// negative on every point is rewritten by the network's real-part
    /// semantics: Re log z = log(-z) and Re sqrt z = 0 there.
    MatrixXr domain;
};

/// Rounds every constant to `decimals` places and re-simplifies; terms whose
/// coefficient rounds to zero disappear. This is the reported form of an
/// expression.
Expr round_coefficients(const Expr& e, int decimals);

/// Symbolic traversal of the active edges of a trained network. Each weight
/// becomes Const(Re w); the result is simplified. Throws ImaginaryResidue if
/// some active weight has |Im w| > im_tolerance and DegenerateModel if the
/// output is unreachable.
Expr extract(const Network& net, const ExtractOptions& options = {});

}  // namespace ceql
