#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "isrm/levy_measure.hpp"

namespace isrm {

/// Levy-Khintchine triplet [gamma, Q, phi] of an infinitely divisible law on R^m.
struct IdTriplet {
    Vec gamma;
    Mat Q;
    LevyMeasure levy;

    /// Validates dimensions; Q must be symmetric with eigenvalues >= -1e-10.
    IdTriplet(Vec gamma, Mat Q, LevyMeasure levy);
    static IdTriplet zero(int m);

    int dim() const { return static_cast<int>(gamma.size()); }
};

/// psi(t) = i<gamma,t> - <Qt,t>/2 + int (e^{i<t,x>} - 1 - i<t,x>/(1+|x|^2)) phi(dx).
cplx log_cf(const IdTriplet& trip, const Vec& t, const QuadratureConfig& cfg = {});

IdTriplet convolve(const IdTriplet& a, const IdTriplet& b);

/// [c gamma, c Q, c phi] for c > 0.
IdTriplet scale(const IdTriplet& trip, double c);

/// Image law of R X: the triplet of a linear map applied to X ~ [gamma, Q, phi].
IdTriplet linear_image(const IdTriplet& trip, const Mat& R, const QuadratureConfig& cfg = {});

struct NullConvergenceReport {
    std::vector<double> gamma_norm;
    std::vector<double> Q_norm;
    std::vector<double> levy_mass;
    /// All three sequences are below the tolerance over the last `tail` elements.
    bool tends_to_point_mass = false;
};

NullConvergenceReport null_convergence_check(std::span<const IdTriplet> seq, double tol = 1e-6, int tail = 3,
                                             const QuadratureConfig& cfg = {});

/// Draws from [gamma, Q, phi] with jumps of size <= eps removed and their
/// compensator moved into the drift.
class TripletSampler {
public:
    TripletSampler(const IdTriplet& trip, double eps, const QuadratureConfig& cfg = {});

    int dim() const { return static_cast<int>(drift_.size()); }
    /// Adds one draw to `out`.
    void add_draw(std::mt19937_64& rng, Eigen::Ref<Vec> out) const;
    /// int_{|x|<=eps} |x|^2 phi(dx): the CF error is at most |t|^2/2 times this.
    double small_jump_moment() const { return small_moment_; }
    const Vec& drift() const { return drift_; }
    /// Expected number of jumps per draw.
    double jump_rate() const;

private:
    struct RayJumps {
        FlatRay ray;
        double rate;
    };
    struct MixtureJumps {
        FlatMixture term;
        double rate;
        double bound;
        std::vector<double> box_cdf;
    };

    void sample_slice_jump(std::mt19937_64& rng, const FlatMeasure& slice, Eigen::Ref<Vec> out) const;
    void add_ray_jump(std::mt19937_64& rng, const FlatRay& ray, Eigen::Ref<Vec> out) const;

    double eps_;
    Vec drift_;
    Mat gauss_;
    bool has_gauss_ = false;
    std::vector<FlatAtom> atoms_;
    std::vector<RayJumps> rays_;
    std::vector<MixtureJumps> mixtures_;
    double small_moment_ = 0.0;
};

/// n draws as the rows of an n x m matrix; identical for identical (seed, eps, n).
Mat sample(const IdTriplet& trip, std::size_t n, std::uint64_t seed, double eps, const QuadratureConfig& cfg = {});

/// C(delta, delta) = inf{1 - prod_j sin(delta x_j)/(delta x_j) : |x| >= delta}.
double concentration_constant(double delta, int m);

/// Upper bound on P(|X| >= delta) from the characteristic function of X.
double concentration_bound(const std::function<cplx(const Vec&)>& cf, double delta, int m,
                           const QuadratureConfig& cfg = {});

}  // namespace isrm
