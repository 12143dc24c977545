#include "isrm/complex_bridge.hpp"

#include <cmath>

#include "isrm/errors.hpp"

namespace isrm {

Vec xi(const CVec& z) {
    Vec v(2 * z.size());
    v.head(z.size()) = z.real();
    v.tail(z.size()) = z.imag();
    return v;
}

CVec xi_inverse(const Vec& v) {
    if (v.size() % 2 != 0) throw DimensionMismatch("xi_inverse: odd length");
    const Eigen::Index m = v.size() / 2;
    CVec z(m);
    for (Eigen::Index k = 0; k < m; ++k) z[k] = cplx(v[k], v[m + k]);
    return z;
}

Mat associated_matrix(const CMat& F) {
    const Eigen::Index m = F.rows();
    Mat out(2 * m, 2 * m);
    out << F.real(), -F.imag(), F.imag(), F.real();
    return out;
}

Mat partially_associated_matrix(const CMat& F) {
    const Eigen::Index m = F.rows();
    Mat out = Mat::Zero(2 * m, 2 * m);
    out.topLeftCorner(m, m) = F.real();
    out.topRightCorner(m, m) = -F.imag();
    return out;
}

ComplexMatrixField::ComplexMatrixField(MatrixField re_part, MatrixField im_part)
    : re(std::move(re_part)), im(std::move(im_part)) {
    if (re.m() != im.m()) throw DimensionMismatch("complex field: real and imaginary parts differ in size");
    if (re.base_dim() != im.base_dim()) throw DimensionMismatch("complex field: parts differ in base dimension");
}

ComplexMatrixField ComplexMatrixField::real(const MatrixField& f) {
    return {f, MatrixField::constant(Mat::Zero(f.m(), f.m()), f.base_dim())};
}

ComplexMatrixField ComplexMatrixField::expression(const std::vector<std::vector<Expr>>& re,
                                                  const std::vector<std::vector<Expr>>& im, int base_dim) {
    return {MatrixField::expression(re, base_dim), MatrixField::expression(im, base_dim)};
}

CMat ComplexMatrixField::operator()(const Point& s) const {
    CMat F(m(), m());
    F.real() = re(s);
    F.imag() = im(s);
    return F;
}

namespace {

MatrixField lift(const ComplexMatrixField& f, Mat (*block)(const CMat&)) {
    auto g = MatrixField::custom(2 * f.m(), f.base_dim(), [f, block](const Point& s) { return block(f(s)); });
    Breakpoints b = f.re.breaks();
    merge_breakpoints(b, f.im.breaks());
    for (const auto* part : {&f.re, &f.im})
        if (part->support()) merge_breakpoints(b, set_breakpoints(*part->support()));
    std::vector<Point> sing = f.re.singular();
    sing.insert(sing.end(), f.im.singular().begin(), f.im.singular().end());
    return g.with_breaks(b).with_singular(std::move(sing));
}

}  // namespace

MatrixField associated(const ComplexMatrixField& f) { return lift(f, &associated_matrix); }

MatrixField partially_associated(const ComplexMatrixField& f) { return lift(f, &partially_associated_matrix); }

IsrmSpec real_associated_spec(const IsrmSpec& spec) {
    const int m = spec.m;
    Mat embed = Mat::Zero(2 * m, m);
    embed.topRows(m) = Mat::Identity(m, m);
    IsrmSpec out = spec;
    out.m = 2 * m;
    const auto a = spec.alpha;
    out.alpha = a.is_constant() ? VecFn(Vec(embed * a.constant_value()))
                                : VecFn(std::function<Vec(const Point&)>([a, embed](const Point& s) -> Vec {
                                      return embed * a(s);
                                  }));
    const auto b = spec.beta;
    out.beta = b.is_constant() ? MatFn(Mat(embed * b.constant_value() * embed.transpose()))
                               : MatFn(std::function<Mat(const Point&)>([b, embed](const Point& s) -> Mat {
                                     return embed * b(s) * embed.transpose();
                                 }));
    out.rho = spec.rho.pushforward(embed);
    out.beta_warned = std::make_shared<std::atomic<bool>>(false);
    return out;
}

ComplexLogCf complex_integral_log_cf(const IsrmSpec& spec2m, const ComplexMatrixField& f, const Vec& t,
                                     const std::optional<MeasurableSet>& A, const QuadratureConfig& cfg) {
    if (spec2m.m != 2 * f.m()) throw DimensionMismatch("complex log-CF: spec must have dimension 2m");
    if (t.size() != spec2m.m) throw DimensionMismatch("complex log-CF: t must have dimension 2m");
    ComplexLogCf out;
    out.value = integral_log_cf(spec2m, associated(f), t, A, cfg);

    // The z-form integrates K(xi(f(s)^* z)) directly, without the block field.
    const CVec z = xi_inverse(t);
    const auto lifted = associated(f);
    MeasurableSet region = A ? A->intersect(spec2m.domain.box) : spec2m.domain.as_set();
    Breakpoints breaks = spec2m.domain.breaks;
    merge_breakpoints(breaks, lifted.breaks());
    const auto& w = spec2m.domain.density;
    const QuadratureConfig inner = cfg.tightened(10.0);
    auto r = integrate_set(
        [&](const Point& s) -> cplx {
            const double ws = w(s);
            if (ws == 0.0) return 0.0;
            const Vec tau = xi(f(s).adjoint() * z);
            if (tau.isZero(0.0)) return 0.0;
            return k_m(spec2m, tau, s, inner) * ws;
        },
        region, cplx(0.0), cfg, breaks);
    if (!r.converged) throw QuadratureFailure("complex log-CF (z-form)", r.error_estimate);
    out.z_form = r.value;
    out.discrepancy = std::abs(out.value - out.z_form);
    return out;
}

std::vector<CMat> v_matrices(const std::vector<Vec>& ts) {
    std::vector<CMat> out;
    for (const auto& t : ts) {
        if (t.size() % 2 != 0) throw DimensionMismatch("v_matrices: t must have even length");
        const Eigen::Index m = t.size() / 2;
        const Mat R1 = t.head(m).asDiagonal();
        const Mat R2 = t.tail(m).asDiagonal();
        const Mat R = 0.5 * (R1 + R2);
        const Mat Q = 0.5 * (R1 - R2);
        CMat V(m, m);
        V.real() = R;
        V.imag() = -Q;
        out.push_back(std::move(V));
    }
    return out;
}

VIdentityCheck verify_v_identity(const std::vector<ComplexMatrixField>& fields, const std::vector<Vec>& ts,
                                 const Point& s, double tol) {
    return verify_v_identity(fields, ts, v_matrices(ts), s, tol);
}

VIdentityCheck verify_v_identity(const std::vector<ComplexMatrixField>& fields, const std::vector<Vec>& ts,
                                 const std::vector<CMat>& vs, const Point& s, double tol) {
    if (fields.size() != ts.size() || fields.size() != vs.size())
        throw DimensionMismatch("verify_v_identity: one t and one V per field");
    if (fields.empty()) return {true, 0.0};
    const int m = fields.front().m();
    CMat sum = CMat::Zero(m, m);
    Vec rhs = Vec::Zero(2 * m);
    for (std::size_t j = 0; j < fields.size(); ++j) {
        if (fields[j].m() != m || ts[j].size() != 2 * m || vs[j].rows() != m || vs[j].cols() != m)
            throw DimensionMismatch("verify_v_identity: dimension mismatch");
        const CMat F = fields[j](s);
        sum += vs[j].adjoint() * F;
        rhs += associated_matrix(F).transpose() * ts[j];
    }
    const CVec e_ie = CVec::Constant(m, cplx(1.0, 1.0));
    const Vec lhs = xi(sum.adjoint() * e_ie);
    VIdentityCheck out;
    out.residual = (lhs - rhs).lpNorm<Eigen::Infinity>();
    out.holds = out.residual <= tol;
    return out;
}

}  // namespace isrm
