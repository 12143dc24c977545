#include "isrm/matrix_field.hpp"

#include <cmath>

#include "isrm/errors.hpp"

namespace isrm {

namespace {

void check_square(const Mat& R) {
    if (R.rows() != R.cols() || R.rows() == 0) throw DimensionMismatch("matrix field values must be square");
    if (!R.allFinite()) throw Error("matrix field: non-finite matrix");
}

std::vector<MatrixField::Piece> piecewise_sum(const std::vector<MatrixField::Piece>& a,
                                              const std::vector<MatrixField::Piece>& b) {
    std::vector<MatrixField::Piece> out;
    std::vector<Box> a_boxes, b_boxes;
    for (const auto& p : a) a_boxes.insert(a_boxes.end(), p.set.boxes().begin(), p.set.boxes().end());
    for (const auto& p : b) b_boxes.insert(b_boxes.end(), p.set.boxes().begin(), p.set.boxes().end());
    for (const auto& pa : a)
        for (const auto& box : pa.set.boxes()) {
            for (const auto& pb : b) {
                auto both = pb.set.intersect(box);
                if (!both.empty()) out.push_back({pa.R + pb.R, both});
            }
            auto only = subtract(box, b_boxes);
            if (!only.empty()) out.push_back({pa.R, MeasurableSet(std::move(only))});
        }
    for (const auto& pb : b)
        for (const auto& box : pb.set.boxes()) {
            auto only = subtract(box, a_boxes);
            if (!only.empty()) out.push_back({pb.R, MeasurableSet(std::move(only))});
        }
    return out;
}

}  // namespace

Breakpoints set_breakpoints(const MeasurableSet& A) {
    Breakpoints b(A.dim());
    for (const auto& box : A.boxes())
        for (int i = 0; i < box.dim(); ++i) {
            b[i].push_back(box.sides[i].lo);
            b[i].push_back(box.sides[i].hi);
        }
    Breakpoints out;
    merge_breakpoints(out, b);
    return out;
}

MatrixField MatrixField::from_fn(int m, int base_dim, std::function<Mat(const Point&)> fn, std::string kind) {
    if (m < 1) throw DimensionMismatch("matrix field dimension must be positive");
    if (base_dim < 1 || base_dim > 2) throw DimensionMismatch("base domain dimension must be 1 or 2");
    MatrixField f;
    f.m_ = m;
    f.base_dim_ = base_dim;
    f.fn_ = std::move(fn);
    f.kind_ = std::move(kind);
    return f;
}

MatrixField MatrixField::expression(const std::vector<std::vector<Expr>>& entries, int base_dim) {
    const int m = static_cast<int>(entries.size());
    bool all_constant = true;
    for (const auto& row : entries) {
        if (static_cast<int>(row.size()) != m) throw DimensionMismatch("field expression grid must be square");
        for (const auto& e : row) {
            if (e.arity() > base_dim) throw DimensionMismatch("field expression uses a coordinate beyond the base dimension");
            all_constant = all_constant && e.is_constant();
        }
    }
    if (all_constant) {
        Mat R(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) R(i, j) = entries[i][j].eval(Point());
        auto f = constant(R, base_dim);
        f.kind_ = "expression";
        return f;
    }
    auto f = from_fn(
        m, base_dim,
        [entries, m](const Point& s) {
            Mat R(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) R(i, j) = entries[i][j].eval(s);
            return R;
        },
        "expression");
    Breakpoints b(base_dim);
    for (const auto& row : entries)
        for (const auto& e : row)
            for (int a = 0; a < base_dim; ++a) {
                const auto bp = e.breakpoints(a);
                b[a].insert(b[a].end(), bp.begin(), bp.end());
            }
    merge_breakpoints(f.breaks_, b);
    return f;
}

MatrixField MatrixField::constant(const Mat& R, int base_dim) {
    check_square(R);
    auto f = from_fn(static_cast<int>(R.rows()), base_dim, [R](const Point&) { return R; }, "constant");
    f.profile_ = Profile{ScalarFn(1.0), R};
    f.zero_ = R.isZero(0.0);
    return f;
}

MatrixField MatrixField::indicator(const MeasurableSet& A, const Mat& R) {
    auto f = simple({Piece{R, A}});
    f.kind_ = "indicator";
    return f;
}

MatrixField MatrixField::power_law(double beta, const Mat& R, const Point& center) {
    check_square(R);
    if (!std::isfinite(beta)) throw Error("power law exponent must be finite");
    const int d = static_cast<int>(center.size());
    auto g = [beta, center](const Point& s) {
        const double r = (s - center).stableNorm();
        if (r == 0.0 && beta > 0.0) throw EvalError("power law evaluated at its singular point", 0);
        return std::pow(r, -beta);
    };
    auto f = from_fn(static_cast<int>(R.rows()), d, [g, R](const Point& s) -> Mat { return g(s) * R; }, "power_law");
    f.profile_ = Profile{ScalarFn(std::function<double(const Point&)>(g)), R};
    if (beta > 0.0) f.singular_.push_back(center);
    f.zero_ = R.isZero(0.0);
    return f;
}

MatrixField MatrixField::simple(std::vector<Piece> pieces) {
    if (pieces.empty()) throw DimensionMismatch("simple field needs at least one piece");
    const int m = static_cast<int>(pieces.front().R.rows());
    const int d = pieces.front().set.dim();
    std::vector<Box> all;
    for (const auto& p : pieces) {
        check_square(p.R);
        if (p.R.rows() != m) throw DimensionMismatch("simple field pieces differ in dimension");
        if (!p.set.boxes().empty() && p.set.dim() != d) throw DimensionMismatch("simple field pieces differ in base dimension");
        all.insert(all.end(), p.set.boxes().begin(), p.set.boxes().end());
    }
    MeasurableSet support;
    try {
        support = MeasurableSet(all);
    } catch (const OverlappingPieces&) {
        throw OverlappingPieces("simple field pieces are not disjoint");
    }
    auto f = from_fn(
        m, std::max(d, 1),
        [pieces, m](const Point& s) -> Mat {
            for (const auto& p : pieces)
                if (p.set.contains(s)) return p.R;
            return Mat::Zero(m, m);
        },
        "simple");
    f.support_ = support;
    f.breaks_ = set_breakpoints(support);
    f.zero_ = true;
    for (const auto& p : pieces) f.zero_ = f.zero_ && (p.R.isZero(0.0) || p.set.empty());
    f.pieces_ = std::move(pieces);
    return f;
}

MatrixField MatrixField::custom(int m, int base_dim, std::function<Mat(const Point&)> fn) {
    return from_fn(m, base_dim, std::move(fn), "custom");
}

Mat MatrixField::operator()(const Point& s) const {
    if (zero_ || (support_ && !support_->contains(s))) return Mat::Zero(m_, m_);
    Mat R = fn_(s);
    if (R.rows() != m_ || R.cols() != m_) throw DimensionMismatch("matrix field returned a value of wrong size");
    if (!R.allFinite()) throw EvalError("matrix field value is not finite", 0);
    return R;
}

MatrixField MatrixField::restricted(const MeasurableSet& A) const {
    MatrixField f = *this;
    f.support_ = support_ ? support_->intersect(A) : A;
    merge_breakpoints(f.breaks_, set_breakpoints(A));
    if (pieces_) {
        std::vector<Piece> cut;
        for (const auto& p : *pieces_) {
            auto both = p.set.intersect(A);
            if (!both.empty()) cut.push_back({p.R, both});
        }
        f.pieces_ = std::move(cut);
    }
    if (f.support_->empty()) f.zero_ = true;
    return f;
}

MatrixField MatrixField::left_multiplied(const Mat& Q) const {
    if (Q.rows() != m_ || Q.cols() != m_) throw DimensionMismatch("left factor must be m x m");
    MatrixField f = *this;
    auto fn = fn_;
    f.fn_ = [fn, Q](const Point& s) -> Mat { return Q * fn(s); };
    if (pieces_)
        for (auto& p : *f.pieces_) p.R = Q * p.R;
    if (profile_) f.profile_->R = Q * profile_->R;
    f.zero_ = zero_ || Q.isZero(0.0);
    return f;
}

MatrixField MatrixField::scaled(double c) const { return left_multiplied(c * Mat::Identity(m_, m_)); }

MatrixField MatrixField::with_singular(std::vector<Point> points) const {
    MatrixField f = *this;
    f.singular_.insert(f.singular_.end(), points.begin(), points.end());
    return f;
}

MatrixField MatrixField::with_breaks(const Breakpoints& breaks) const {
    MatrixField f = *this;
    merge_breakpoints(f.breaks_, breaks);
    return f;
}

MatrixField operator+(const MatrixField& a, const MatrixField& b) {
    if (a.m_ != b.m_) throw DimensionMismatch("field sum: dimensions differ");
    if (a.zero_) return b;
    if (b.zero_) return a;
    if (a.pieces_ && b.pieces_) {
        auto f = MatrixField::simple(piecewise_sum(*a.pieces_, *b.pieces_));
        f.singular_ = a.singular_;
        f.singular_.insert(f.singular_.end(), b.singular_.begin(), b.singular_.end());
        return f;
    }
    MatrixField f;
    f.m_ = a.m_;
    f.base_dim_ = std::max(a.base_dim_, b.base_dim_);
    f.kind_ = "sum";
    f.fn_ = [a, b](const Point& s) -> Mat { return a(s) + b(s); };
    if (a.support_ && b.support_) {
        std::vector<Box> boxes = a.support_->boxes();
        for (const auto& box : b.support_->boxes()) {
            auto rest = subtract(box, a.support_->boxes());
            boxes.insert(boxes.end(), rest.begin(), rest.end());
        }
        f.support_ = MeasurableSet(std::move(boxes));
    }
    f.singular_ = a.singular_;
    f.singular_.insert(f.singular_.end(), b.singular_.begin(), b.singular_.end());
    f.breaks_ = a.breaks_;
    merge_breakpoints(f.breaks_, b.breaks_);
    if (a.support_) merge_breakpoints(f.breaks_, set_breakpoints(*a.support_));
    if (b.support_) merge_breakpoints(f.breaks_, set_breakpoints(*b.support_));
    if (a.profile_ && b.profile_ && a.profile_->g.is_constant() && b.profile_->g.is_constant() && !a.support_ &&
        !b.support_)
        f.profile_ = MatrixField::Profile{ScalarFn(1.0), a.profile_->g.constant_value() * a.profile_->R +
                                                             b.profile_->g.constant_value() * b.profile_->R};
    return f;
}

MatrixField operator-(const MatrixField& a, const MatrixField& b) { return a + b.scaled(-1.0); }

}  // namespace isrm
