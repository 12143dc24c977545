#pragma once

// Small arithmetic expression language over domain coordinates s1..sd.
//
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := ('-' | '+') unary | power
//   power    := primary ('^' exponent)?          right associative
//   exponent := ('-' | '+') exponent | power
//   primary  := number | 'pi' | 's1'..'sd' | name '(' args ')' | '(' expr ')'
//
// Functions: abs exp log sqrt sin cos (one argument), min max pow (two),
// indicator(lo, hi, x) = 1 if lo <= x < hi else 0.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isrm/linalg.hpp"

namespace isrm {

class Expr {
public:
    enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Abs, Exp, Log, Sqrt, Sin, Cos, Min, Max, PowFn, Indicator };

    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        int var = 0;
        std::size_t offset = 0;
        std::vector<std::shared_ptr<const Node>> args;
    };

    /// The constant 0.
    Expr();

    /// Parses `text`; variables s1..s`dim` are accepted ("s" means s1 when dim = 1).
    static Expr parse(std::string_view text, int dim = 2);
    static Expr constant(double v);
    static Expr variable(int index);

    /// Evaluates at the point s (s(i) is s_{i+1}). Throws EvalError.
    double eval(const Point& s) const;
    double eval(double s1) const;

    /// Fully parenthesized text; parse(print()) reproduces the tree.
    std::string print() const;

    bool operator==(const Expr& other) const;
    bool operator!=(const Expr& other) const { return !(*this == other); }

    /// True when no variable occurs.
    bool is_constant() const;
    /// Highest variable index used plus one (0 for constants).
    int arity() const;
    /// Sorted jump locations along `axis` from indicators with constant bounds.
    std::vector<double> breakpoints(int axis) const;

    const Node& root() const { return *root_; }

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

}  // namespace isrm
