#pragma once

#include <complex>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace isrm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

/// Point of the base domain (dimension 1 or 2).
using Point = Eigen::VectorXd;

/// Spectral norm.
double operator_norm(const Mat& a);

/// Symmetrizes and floors negative eigenvalues at zero. Returns the size of the
/// adjustment (max-abs entry change).
double project_psd(Mat& a);

/// Smallest eigenvalue of the symmetric part.
double min_symmetric_eigenvalue(const Mat& a);

/// A with A A^T = q for a symmetric PSD q.
Mat psd_factor(const Mat& q);

/// Sink for non-fatal diagnostics; defaults to standard error.
void warn(const std::string& message);
void set_warning_handler(std::function<void(const std::string&)> handler);

}  // namespace isrm
