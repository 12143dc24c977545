#include "isrm/linalg.hpp"

#include <iostream>
#include <mutex>

namespace isrm {

namespace {
std::mutex g_warn_mutex;
std::function<void(const std::string&)> g_warn_handler;
}  // namespace

double operator_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

double project_psd(Mat& a) {
    if (a.size() == 0) return 0.0;
    const Mat before = a;
    Mat sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    Vec ev = es.eigenvalues().cwiseMax(0.0);
    a = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    a = 0.5 * (a + a.transpose());
    return (a - before).cwiseAbs().maxCoeff();
}

double min_symmetric_eigenvalue(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Mat sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Mat psd_factor(const Mat& q) {
    if (q.size() == 0) return q;
    Mat sym = 0.5 * (q + q.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    if (g_warn_handler)
        g_warn_handler(message);
    else
        std::cerr << "warning: " << message << '\n';
}

void set_warning_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    g_warn_handler = std::move(handler);
}

}  // namespace isrm
