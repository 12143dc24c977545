#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "isrm/geometry.hpp"
#include "isrm/linalg.hpp"
#include "isrm/quadrature.hpp"

namespace isrm {

struct LevyNode;
struct MixtureKernel;

/// Immutable Levy measure on R^m, built as a lazy expression tree.
class LevyMeasure {
public:
    /// The zero measure on R^dim.
    explicit LevyMeasure(int dim = 1);

    static LevyMeasure zero(int dim) { return LevyMeasure(dim); }
    /// Point masses; points at the origin are rejected.
    static LevyMeasure atoms(std::vector<Vec> points, std::vector<double> masses);
    /// m = 1 density coeff * |x|^(-alpha-1) on both half-lines (or only x > 0).
    static LevyMeasure radial(double alpha, double coeff, bool symmetric = true);
    /// sum_k weight_k * int 1_B(r u_k) coeff r^(-alpha-1) dr; directions are normalized.
    static LevyMeasure polar(std::vector<Vec> directions, std::vector<double> weights, double alpha, double coeff);
    static LevyMeasure sum(std::vector<LevyMeasure> terms);
    /// Kernel mixture int w(s) rho(s, .) ds over a set of boxes.
    static LevyMeasure mixture(std::shared_ptr<const MixtureKernel> kernel);

    /// Image measure under x -> R x (R may be rectangular); mass landing on 0 is discarded.
    LevyMeasure pushforward(const Mat& R) const;
    LevyMeasure scaled(double factor) const;

    int dim() const;
    const LevyNode& node() const { return *node_; }
    bool is_zero() const;

private:
    static LevyMeasure wrap(LevyNode n);
    std::shared_ptr<const LevyNode> node_;
};

struct ZeroMeasure {
    int dim = 1;
};
struct AtomsMeasure {
    std::vector<Vec> points;
    std::vector<double> masses;
};
struct RadialMeasure {
    double alpha = 1.0;
    double coeff = 1.0;
    bool symmetric = true;
};
struct PolarMeasure {
    std::vector<Vec> directions;
    std::vector<double> weights;
    double alpha = 1.0;
    double coeff = 1.0;
};
struct PushforwardMeasure {
    LevyMeasure base;
    Mat map;
};
struct ScaledMeasure {
    LevyMeasure base;
    double factor = 1.0;
};
struct SumMeasure {
    std::vector<LevyMeasure> terms;
    int dim = 1;
};
struct MixtureMeasure {
    std::shared_ptr<const MixtureKernel> kernel;
};

struct LevyNode {
    std::variant<ZeroMeasure, AtomsMeasure, RadialMeasure, PolarMeasure, PushforwardMeasure, ScaledMeasure, SumMeasure,
                 MixtureMeasure>
        v;
};

/// The measure B -> int_A w(s) rho(s, B) ds for a finite box union A.
/// `at` must return measures without nested mixtures.
struct MixtureKernel {
    int dim = 1;
    std::vector<Box> boxes;
    Breakpoints breaks;
    std::function<double(const Point&)> weight;
    std::function<LevyMeasure(const Point&)> at;
    /// Known singular points of the s-dependence; the sampler refuses them.
    std::vector<Point> singular;
    QuadratureConfig cfg;
};

/// Atom x with mass.
struct FlatAtom {
    Vec x;
    double mass;
};
/// Ray measure: weight * r^(-alpha-1) dr along u (and -u when two_sided).
struct FlatRay {
    Vec u;
    double weight;
    double alpha;
    bool two_sided;
};
/// Mixture term with an accumulated scale and (optional) linear map.
struct FlatMixture {
    std::shared_ptr<const MixtureKernel> kernel;
    double scale;
    std::optional<Mat> map;
};

/// A Levy measure rewritten as a sum of atoms, rays and mixture terms.
struct FlatMeasure {
    int dim = 1;
    std::vector<FlatAtom> atoms;
    std::vector<FlatRay> rays;
    std::vector<FlatMixture> mixtures;
};

FlatMeasure flatten(const LevyMeasure& phi);

/// The measure a mixture term places at s (scale, map and weight w(s) included).
FlatMeasure mixture_slice(const FlatMixture& term, const Point& s);

/// int min{1, |x|^2} phi(dx).
double min_quadratic_mass(const LevyMeasure& phi, const QuadratureConfig& cfg = {});

/// int (e^{i<t,x>} - 1 - i<t,x>/(1+|x|^2)) phi(dx).
cplx compensated_exp_integral(const LevyMeasure& phi, const Vec& t, const QuadratureConfig& cfg = {});

LevyMeasure pushforward(const LevyMeasure& phi, const Mat& R);

/// phi({|x| >= r}).
double restricted_mass(const LevyMeasure& phi, double r, const QuadratureConfig& cfg = {});

/// int (Rx/(1+|Rx|^2) - Rx/(1+|x|^2)) phi(dx), the recentering term of U.
Vec recentering_integral(const LevyMeasure& phi, const Mat& R, const QuadratureConfig& cfg = {});

/// int_{|x| <= eps} |x|^2 phi(dx).
double small_jump_second_moment(const LevyMeasure& phi, double eps, const QuadratureConfig& cfg = {});

/// Shift that replaces the compensator once jumps below eps are dropped:
/// -int_{|x|>eps} x/(1+|x|^2) phi(dx) + int_{|x|<=eps} x|x|^2/(1+|x|^2) phi(dx).
Vec truncation_drift(const LevyMeasure& phi, double eps, const QuadratureConfig& cfg = {});

// Closed forms and quadratures for a single ray (weight per half-line).
double ray_min_quadratic_mass(const FlatRay& ray);
double ray_restricted_mass(const FlatRay& ray, double r);
/// int_0^inf (1 - cos r) r^(-alpha-1) dr; two-sided rays use it in closed form.
double stable_cos_constant(double alpha);
cplx ray_compensated_exp(const FlatRay& ray, const Vec& t, const QuadratureConfig& cfg);
FlatRay push_ray(const FlatRay& ray, const Mat& R, bool& vanished);

/// The ray integrand e^{i tau r} - 1 - i tau r/(1+r^2), accurate for small tau r.
cplx compensated_exp_kernel(double tau, double r);

}  // namespace isrm
