#pragma once

#include <optional>
#include <vector>

#include "isrm/stochastic_integral.hpp"

namespace isrm {

/// (Re z, Im z).
Vec xi(const CVec& z);
/// Inverse of xi; v must have even length.
CVec xi_inverse(const Vec& v);

/// [[Re F, -Im F], [Im F, Re F]]: xi(F z) = assoc(F) xi(z).
Mat associated_matrix(const CMat& F);
/// [[Re F, -Im F], [0, 0]].
Mat partially_associated_matrix(const CMat& F);

/// s -> f(s) in L(C^m), held as its real and imaginary parts.
struct ComplexMatrixField {
    MatrixField re;
    MatrixField im;

    ComplexMatrixField(MatrixField re_part, MatrixField im_part);
    /// Imaginary part zero.
    static ComplexMatrixField real(const MatrixField& f);
    static ComplexMatrixField expression(const std::vector<std::vector<Expr>>& re,
                                         const std::vector<std::vector<Expr>>& im, int base_dim);

    int m() const { return re.m(); }
    int base_dim() const { return re.base_dim(); }
    CMat operator()(const Point& s) const;
};

/// The 2m x 2m field s -> associated_matrix(f(s)).
MatrixField associated(const ComplexMatrixField& f);
/// The 2m x 2m field s -> partially_associated_matrix(f(s)).
MatrixField partially_associated(const ComplexMatrixField& f);

/// R^{2m} spec of a real R^m spec read as C^m-valued: drift (alpha, 0),
/// Gaussian part blockdiag(beta, 0), kernel pushed through x -> (x, 0); same control.
IsrmSpec real_associated_spec(const IsrmSpec& spec);

struct ComplexLogCf {
    /// int_A K(assoc(f)^T t) d lambda.
    cplx value;
    /// int_A K(xi(f^* z)) d lambda with z = xi^{-1}(t).
    cplx z_form;
    double discrepancy = 0.0;
};

/// Log-CF of xi(I(f 1_A)) for a C^m-valued measure given by its R^{2m} spec.
ComplexLogCf complex_integral_log_cf(const IsrmSpec& spec2m, const ComplexMatrixField& f, const Vec& t,
                                     const std::optional<MeasurableSet>& A = std::nullopt,
                                     const QuadratureConfig& cfg = {});

struct VIdentityCheck {
    bool holds = false;
    double residual = 0.0;
};

/// V_j = R_j - i Q_j with R_{j,i} = diag(t_{j,i}), R_j, Q_j the half sum and difference.
std::vector<CMat> v_matrices(const std::vector<Vec>& ts);

/// max |xi((sum_j V_j^* f_j(s))^* (e + ie)) - sum_j assoc(f_j(s))^T t_j|, with the V_j from v_matrices.
VIdentityCheck verify_v_identity(const std::vector<ComplexMatrixField>& fields, const std::vector<Vec>& ts,
                                 const Point& s, double tol = 1e-10);
/// Same with explicitly given V_j.
VIdentityCheck verify_v_identity(const std::vector<ComplexMatrixField>& fields, const std::vector<Vec>& ts,
                                 const std::vector<CMat>& vs, const Point& s, double tol = 1e-10);

}  // namespace isrm
