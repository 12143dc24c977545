#pragma once

// Functions of the base point s, remembering when they are constant so that
// the integration and sampling paths can take closed forms.

#include <functional>
#include <optional>
#include <utility>

#include "isrm/expr.hpp"
#include "isrm/linalg.hpp"

namespace isrm {

template <class T>
class BaseFunction {
public:
    BaseFunction() = default;
    BaseFunction(T value) : constant_(std::move(value)) {}  // NOLINT: implicit by design
    explicit BaseFunction(std::function<T(const Point&)> fn) : fn_(std::move(fn)) {}

    T operator()(const Point& s) const { return constant_ ? *constant_ : fn_(s); }
    bool is_constant() const { return constant_.has_value(); }
    const T& constant_value() const { return *constant_; }
    bool defined() const { return constant_.has_value() || static_cast<bool>(fn_); }

private:
    std::optional<T> constant_;
    std::function<T(const Point&)> fn_;
};

using ScalarFn = BaseFunction<double>;
using VecFn = BaseFunction<Vec>;
using MatFn = BaseFunction<Mat>;

/// Scalar function from an expression; constant expressions fold.
inline ScalarFn scalar_fn(const Expr& e) {
    if (e.is_constant()) return ScalarFn(e.eval(Point()));
    return ScalarFn(std::function<double(const Point&)>([e](const Point& s) { return e.eval(s); }));
}

}  // namespace isrm
