#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isrm/isrm_spec.hpp"
#include "isrm/matrix_field.hpp"

namespace isrm {

/// U_M(R, s) = R alpha(s) + int (Rx/(1+|Rx|^2) - Rx/(1+|x|^2)) rho(s, dx).
Vec u_m(const IsrmSpec& spec, const Mat& R, const Point& s, const QuadratureConfig& cfg = {});

/// V_M(R, s) = int min{1, |Rx|^2} rho(s, dx).
double v_m(const IsrmSpec& spec, const Mat& R, const Point& s, const QuadratureConfig& cfg = {});

/// One of the three integrability conditions.
struct ConditionReport {
    /// "drift", "gaussian" or "levy_mass".
    std::string name;
    Verdict verdict = Verdict::Inconclusive;
    /// Integral value (extrapolated when truncations were needed).
    double value = 0.0;
    double residual = 0.0;
    /// Values over the nested truncations (empty when none were needed).
    std::vector<double> sequence;
};

struct IntegrabilityReport {
    Verdict verdict = Verdict::Inconclusive;
    double gamma_residual = 0.0;
    double Q_residual = 0.0;
    std::vector<double> levy_mass_sequence;
    /// Names of the conditions that failed (set whenever the verdict is Divergent).
    std::vector<std::string> witness;
    std::vector<ConditionReport> conditions;
    /// Singular points used for the truncations.
    std::vector<Point> singular;
};

/// Declared singular points of f and of the domain density, plus points of a
/// probe grid (boundary included) where f cannot be evaluated.
std::vector<Point> singular_points(const IsrmSpec& spec, const MatrixField& f);

/// Decides whether int |U_M(f(s), s)|, int |f beta f*| and int V_M(f(s), s)
/// (all against the control measure) are finite.
IntegrabilityReport check_integrability(const IsrmSpec& spec, const MatrixField& f, const QuadratureConfig& cfg = {});

/// [gamma_f, Q_f, phi_f] of the stochastic integral of f.
struct IntegralTriplet {
    IdTriplet triplet = IdTriplet::zero(1);
    bool gamma_converged = true;
    bool Q_converged = true;
    double gamma_residual = 0.0;
    double Q_residual = 0.0;
    IntegrabilityReport report;
};

/// Throws NotIntegrable unless the verdict is Integrable (or `force` is set).
IntegralTriplet integral_triplet(const IsrmSpec& spec, const MatrixField& f, const QuadratureConfig& cfg = {},
                                 bool force = false);

/// int_A K_M(f(s)^T t, s) lambda_M(ds) with its quadrature diagnostics; A defaults to the domain.
QuadratureResult<cplx> integral_log_cf_result(const IsrmSpec& spec, const MatrixField& f, const Vec& t,
                                              const std::optional<MeasurableSet>& A = std::nullopt,
                                              const QuadratureConfig& cfg = {});

/// As above; throws QuadratureFailure when the tolerance is not met.
cplx integral_log_cf(const IsrmSpec& spec, const MatrixField& f, const Vec& t,
                     const std::optional<MeasurableSet>& A = std::nullopt, const QuadratureConfig& cfg = {});

/// int_S K_M(sum_j f_j(s)^T t_j, s) lambda_M(ds): log-CF of sum_j <I(f_j), t_j>.
cplx joint_log_cf(const IsrmSpec& spec, const std::vector<MatrixField>& fields, const std::vector<Vec>& ts,
                  const QuadratureConfig& cfg = {});

/// Per n, int K_M((f_n(s) - f(s))^T t, s) lambda_M(ds).
std::vector<cplx> cf_convergence_gap(const IsrmSpec& spec, const std::vector<MatrixField>& f_seq, const MatrixField& f,
                                     const Vec& t, const QuadratureConfig& cfg = {});

/// sum_j R_j X_j for a simple field, where X_j (n x m) holds samples of M(A_j)
/// for the j-th piece.
Mat simple_integral(const MatrixField& f, const std::vector<Mat>& piece_samples);

}  // namespace isrm
