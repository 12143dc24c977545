#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isrm/base_function.hpp"
#include "isrm/expr.hpp"
#include "isrm/geometry.hpp"

namespace isrm {

/// A map s -> m x m real matrix over the base domain (the integrand f).
///
/// Besides the values, a field carries what the integration code needs to
/// know: where it vanishes (support), where it may blow up (singular points),
/// where it jumps (breakpoints), and two structural shortcuts: a list of
/// constant pieces for simple fields, and a scalar profile f = g(s) R.
class MatrixField {
public:
    struct Piece {
        Mat R;
        MeasurableSet set;
    };
    struct Profile {
        ScalarFn g;
        Mat R;
    };

    /// Entry (i, j) given by entries[i][j]; singular points found by probing
    /// are not known here (see stochastic_integral).
    static MatrixField expression(const std::vector<std::vector<Expr>>& entries, int base_dim);
    static MatrixField constant(const Mat& R, int base_dim);
    /// R on A, 0 elsewhere.
    static MatrixField indicator(const MeasurableSet& A, const Mat& R);
    /// |s - center|^(-beta) R, singular at the center.
    static MatrixField power_law(double beta, const Mat& R, const Point& center);
    /// Sum of R_j 1_{A_j} over pairwise disjoint A_j.
    static MatrixField simple(std::vector<Piece> pieces);
    static MatrixField custom(int m, int base_dim, std::function<Mat(const Point&)> fn);

    /// Value at s; zero outside the support.
    Mat operator()(const Point& s) const;

    int m() const { return m_; }
    int base_dim() const { return base_dim_; }
    const std::optional<MeasurableSet>& support() const { return support_; }
    const std::vector<Point>& singular() const { return singular_; }
    const Breakpoints& breaks() const { return breaks_; }
    bool is_simple() const { return pieces_.has_value(); }
    const std::vector<Piece>& pieces() const { return *pieces_; }
    const std::optional<Profile>& profile() const { return profile_; }
    bool is_zero() const { return zero_; }
    const std::string& kind() const { return kind_; }

    /// f 1_A.
    MatrixField restricted(const MeasurableSet& A) const;
    /// s -> Q f(s); Q may be rectangular only if the result stays square.
    MatrixField left_multiplied(const Mat& Q) const;
    MatrixField scaled(double c) const;
    MatrixField with_singular(std::vector<Point> points) const;
    MatrixField with_breaks(const Breakpoints& breaks) const;

    friend MatrixField operator+(const MatrixField& a, const MatrixField& b);
    friend MatrixField operator-(const MatrixField& a, const MatrixField& b);

private:
    MatrixField() = default;
    static MatrixField from_fn(int m, int base_dim, std::function<Mat(const Point&)> fn, std::string kind);

    int m_ = 1;
    int base_dim_ = 1;
    std::function<Mat(const Point&)> fn_;
    std::optional<MeasurableSet> support_;
    std::vector<Point> singular_;
    Breakpoints breaks_;
    std::optional<std::vector<Piece>> pieces_;
    std::optional<Profile> profile_;
    bool zero_ = false;
    std::string kind_;
};

/// Axis breakpoints of the boxes of a set.
Breakpoints set_breakpoints(const MeasurableSet& A);

}  // namespace isrm
