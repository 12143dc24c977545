#include "isrm/levy_measure.hpp"

#include <cmath>
#include <sstream>

#include "isrm/errors.hpp"

namespace isrm {

namespace {

void check_index(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) {
        std::ostringstream os;
        os << "radial tail index " << alpha << " outside (0, 2)";
        throw Divergent(os.str());
    }
}

double zero_threshold(const Mat& R, const Vec& x) { return 1e-13 * std::max(1.0, R.cwiseAbs().maxCoeff()) * x.norm(); }

void flatten_into(const LevyMeasure& phi, double scale, const std::optional<Mat>& map, FlatMeasure& out) {
    if (scale == 0.0) return;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ZeroMeasure>) {
            } else if constexpr (std::is_same_v<T, AtomsMeasure>) {
                for (std::size_t i = 0; i < m.points.size(); ++i) {
                    if (m.masses[i] == 0.0) continue;
                    Vec y = map ? Vec(*map * m.points[i]) : m.points[i];
                    if (map && y.norm() <= zero_threshold(*map, m.points[i])) continue;
                    out.atoms.push_back({std::move(y), m.masses[i] * scale});
                }
            } else if constexpr (std::is_same_v<T, RadialMeasure>) {
                FlatRay ray{Vec::Ones(1), m.coeff * scale, m.alpha, m.symmetric};
                bool gone = false;
                if (map) ray = push_ray(ray, *map, gone);
                if (!gone) out.rays.push_back(std::move(ray));
            } else if constexpr (std::is_same_v<T, PolarMeasure>) {
                for (std::size_t k = 0; k < m.directions.size(); ++k) {
                    if (m.weights[k] == 0.0) continue;
                    FlatRay ray{m.directions[k], m.weights[k] * m.coeff * scale, m.alpha, false};
                    bool gone = false;
                    if (map) ray = push_ray(ray, *map, gone);
                    if (!gone) out.rays.push_back(std::move(ray));
                }
            } else if constexpr (std::is_same_v<T, PushforwardMeasure>) {
                std::optional<Mat> composed = map ? std::optional<Mat>(Mat(*map * m.map)) : std::optional<Mat>(m.map);
                flatten_into(m.base, scale, composed, out);
            } else if constexpr (std::is_same_v<T, ScaledMeasure>) {
                flatten_into(m.base, scale * m.factor, map, out);
            } else if constexpr (std::is_same_v<T, SumMeasure>) {
                for (const auto& t : m.terms) flatten_into(t, scale, map, out);
            } else if constexpr (std::is_same_v<T, MixtureMeasure>) {
                out.mixtures.push_back({m.kernel, scale, map});
            }
        },
        phi.node().v);
}

/// Integrates a scalar/vector functional of the slices over every mixture term.
template <class T, class G>
T integrate_mixtures(const FlatMeasure& flat, const QuadratureConfig& cfg, T init, G&& functional,
                     const char* what) {
    T total = init;
    for (const auto& term : flat.mixtures) {
        auto g = [&](const Point& s) -> T { return functional(mixture_slice(term, s)); };
        for (const auto& box : term.kernel->boxes) {
            if (box.degenerate()) continue;
            auto r = integrate_box(g, box, cfg, term.kernel->breaks);
            if (!r.converged) throw QuadratureFailure(std::string(what) + " over a kernel mixture", r.error_estimate);
            total = total + r.value;
        }
    }
    return total;
}

double flat_mqm(const FlatMeasure& f, const QuadratureConfig& cfg) {
    double acc = 0.0;
    for (const auto& a : f.atoms) acc += std::min(1.0, a.x.squaredNorm()) * a.mass;
    for (const auto& r : f.rays) acc += ray_min_quadratic_mass(r);
    if (!f.mixtures.empty())
        acc = integrate_mixtures(f, cfg, acc, [&](const FlatMeasure& sl) { return flat_mqm(sl, cfg); },
                                 "quadratic mass");
    return acc;
}

cplx flat_cei(const FlatMeasure& f, const Vec& t, const QuadratureConfig& cfg) {
    cplx acc = 0.0;
    const QuadratureConfig inner = cfg.tightened(100.0);
    for (const auto& a : f.atoms) {
        const double tx = t.dot(a.x);
        acc += a.mass * cplx(std::cos(tx) - 1.0, std::sin(tx) - tx / (1.0 + a.x.squaredNorm()));
    }
    for (const auto& r : f.rays) acc += ray_compensated_exp(r, t, inner);
    if (!f.mixtures.empty())
        acc = integrate_mixtures(f, cfg, acc, [&](const FlatMeasure& sl) { return flat_cei(sl, t, cfg); },
                                 "compensated exponential integral");
    return acc;
}

double flat_restricted(const FlatMeasure& f, double r, const QuadratureConfig& cfg) {
    double acc = 0.0;
    for (const auto& a : f.atoms)
        if (a.x.norm() >= r) acc += a.mass;
    for (const auto& ray : f.rays) acc += ray_restricted_mass(ray, r);
    if (!f.mixtures.empty())
        acc = integrate_mixtures(f, cfg, acc, [&](const FlatMeasure& sl) { return flat_restricted(sl, r, cfg); },
                                 "restricted mass");
    return acc;
}

/// int r^(-alpha) [1/(1+a^2 r^2) - 1/(1+r^2)] dr over (0, infinity).
double recentering_radial(double a, double alpha) {
    const double eps = alpha - 1.0;
    const double L = std::log(a);
    if (std::abs(eps) < 1e-6) return -L * (1.0 + 0.5 * eps * L);
    return (std::pow(a, eps) - 1.0) * M_PI / (2.0 * std::cos(M_PI * alpha / 2.0));
}

Vec flat_recentering(const FlatMeasure& f, const Mat& R, const QuadratureConfig& cfg) {
    Vec acc = Vec::Zero(R.rows());
    for (const auto& a : f.atoms) {
        const Vec y = R * a.x;
        acc += a.mass * (y / (1.0 + y.squaredNorm()) - y / (1.0 + a.x.squaredNorm()));
    }
    for (const auto& ray : f.rays) {
        if (ray.two_sided) continue;
        const Vec v = R * ray.u;
        const double a = v.norm();
        if (a <= zero_threshold(R, ray.u)) continue;
        acc += ray.weight * recentering_radial(a, ray.alpha) * v;
    }
    if (!f.mixtures.empty())
        acc = integrate_mixtures(f, cfg, acc, [&](const FlatMeasure& sl) -> Vec { return flat_recentering(sl, R, cfg); },
                                 "recentering integral");
    return acc;
}

double flat_small_moment(const FlatMeasure& f, double eps, const QuadratureConfig& cfg) {
    double acc = 0.0;
    for (const auto& a : f.atoms)
        if (a.x.norm() <= eps) acc += a.x.squaredNorm() * a.mass;
    for (const auto& r : f.rays)
        acc += (r.two_sided ? 2.0 : 1.0) * r.weight * std::pow(eps, 2.0 - r.alpha) / (2.0 - r.alpha);
    if (!f.mixtures.empty())
        acc = integrate_mixtures(f, cfg, acc, [&](const FlatMeasure& sl) { return flat_small_moment(sl, eps, cfg); },
                                 "small-jump moment");
    return acc;
}

Vec flat_truncation_drift(const FlatMeasure& f, double eps, const QuadratureConfig& cfg) {
    Vec acc = Vec::Zero(f.dim);
    for (const auto& a : f.atoms) {
        const double n2 = a.x.squaredNorm();
        if (std::sqrt(n2) > eps)
            acc -= a.mass * a.x / (1.0 + n2);
        else
            acc += a.mass * a.x * (n2 / (1.0 + n2));
    }
    const QuadratureConfig inner = cfg.tightened(100.0);
    for (const auto& r : f.rays) {
        if (r.two_sided) continue;
        auto big = integrate_radial_segment([](double x) { return x / (1.0 + x * x); }, r.alpha, r.weight, eps,
                                            INFINITY, inner);
        auto small = integrate_radial_segment([](double x) { return x * x * x / (1.0 + x * x); }, r.alpha, r.weight,
                                              0.0, eps, inner);
        if (!big.converged || !small.converged)
            throw QuadratureFailure("truncation drift", big.error_estimate + small.error_estimate);
        acc += (small.value - big.value) * r.u;
    }
    if (!f.mixtures.empty())
        acc = integrate_mixtures(f, cfg, acc,
                                 [&](const FlatMeasure& sl) -> Vec { return flat_truncation_drift(sl, eps, cfg); },
                                 "truncation drift");
    return acc;
}

}  // namespace

LevyMeasure::LevyMeasure(int dim) : node_(std::make_shared<LevyNode>(LevyNode{ZeroMeasure{dim}})) {
    if (dim < 1) throw DimensionMismatch("Levy measure dimension must be positive");
}

LevyMeasure LevyMeasure::wrap(LevyNode n) {
    LevyMeasure out;
    out.node_ = std::make_shared<LevyNode>(std::move(n));
    return out;
}

LevyMeasure LevyMeasure::atoms(std::vector<Vec> points, std::vector<double> masses) {
    if (points.size() != masses.size()) throw DimensionMismatch("atoms: points and masses differ in length");
    if (points.empty()) throw DimensionMismatch("atoms: need at least one point");
    const auto dim = points.front().size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim || dim == 0) throw DimensionMismatch("atoms: points of different dimension");
        if (!points[i].allFinite()) throw Error("atoms: non-finite point");
        if (points[i].norm() == 0.0) throw Error("atoms: a Levy measure has no mass at the origin");
        if (!(masses[i] >= 0.0) || !std::isfinite(masses[i])) throw Error("atoms: masses must be finite and >= 0");
    }
    return wrap(LevyNode{AtomsMeasure{std::move(points), std::move(masses)}});
}

LevyMeasure LevyMeasure::radial(double alpha, double coeff, bool symmetric) {
    check_index(alpha);
    if (!(coeff >= 0.0) || !std::isfinite(coeff)) throw Error("radial: coefficient must be finite and >= 0");
    if (coeff == 0.0) return LevyMeasure(1);
    return wrap(LevyNode{RadialMeasure{alpha, coeff, symmetric}});
}

LevyMeasure LevyMeasure::polar(std::vector<Vec> directions, std::vector<double> weights, double alpha, double coeff) {
    check_index(alpha);
    if (directions.size() != weights.size() || directions.empty())
        throw DimensionMismatch("polar: directions and weights differ in length");
    if (!(coeff >= 0.0) || !std::isfinite(coeff)) throw Error("polar: coefficient must be finite and >= 0");
    const auto dim = directions.front().size();
    for (std::size_t k = 0; k < directions.size(); ++k) {
        if (directions[k].size() != dim || dim == 0) throw DimensionMismatch("polar: directions of different dimension");
        const double n = directions[k].norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw Error("polar: direction must be a nonzero vector");
        directions[k] /= n;
        if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) throw Error("polar: weights must be finite and >= 0");
    }
    return wrap(LevyNode{PolarMeasure{std::move(directions), std::move(weights), alpha, coeff}});
}

LevyMeasure LevyMeasure::sum(std::vector<LevyMeasure> terms) {
    if (terms.empty()) throw DimensionMismatch("sum of no measures has no dimension");
    const int dim = terms.front().dim();
    std::vector<LevyMeasure> kept;
    for (auto& t : terms) {
        if (t.dim() != dim) throw DimensionMismatch("sum: measures of different dimension");
        if (!t.is_zero()) kept.push_back(std::move(t));
    }
    if (kept.empty()) return LevyMeasure(dim);
    if (kept.size() == 1) return kept.front();
    return wrap(LevyNode{SumMeasure{std::move(kept), dim}});
}

LevyMeasure LevyMeasure::mixture(std::shared_ptr<const MixtureKernel> kernel) {
    if (!kernel || !kernel->weight || !kernel->at) throw Error("mixture: incomplete kernel");
    if (kernel->boxes.empty()) return LevyMeasure(kernel->dim);
    return wrap(LevyNode{MixtureMeasure{std::move(kernel)}});
}

LevyMeasure LevyMeasure::pushforward(const Mat& R) const {
    if (R.cols() != dim()) throw DimensionMismatch("pushforward: map does not act on the measure's dimension");
    if (!R.allFinite()) throw Error("pushforward: non-finite map");
    if (R.isZero(0.0) || is_zero()) return LevyMeasure(static_cast<int>(R.rows()));
    if (R.rows() == R.cols() && R.isIdentity(0.0)) return *this;
    return wrap(LevyNode{PushforwardMeasure{*this, R}});
}

LevyMeasure LevyMeasure::scaled(double factor) const {
    if (!(factor >= 0.0) || !std::isfinite(factor)) throw Error("scaled: factor must be finite and >= 0");
    if (factor == 0.0 || is_zero()) return LevyMeasure(dim());
    if (factor == 1.0) return *this;
    return wrap(LevyNode{ScaledMeasure{*this, factor}});
}

int LevyMeasure::dim() const {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ZeroMeasure>) return m.dim;
            else if constexpr (std::is_same_v<T, AtomsMeasure>) return static_cast<int>(m.points.front().size());
            else if constexpr (std::is_same_v<T, RadialMeasure>) return 1;
            else if constexpr (std::is_same_v<T, PolarMeasure>) return static_cast<int>(m.directions.front().size());
            else if constexpr (std::is_same_v<T, PushforwardMeasure>) return static_cast<int>(m.map.rows());
            else if constexpr (std::is_same_v<T, ScaledMeasure>) return m.base.dim();
            else if constexpr (std::is_same_v<T, SumMeasure>) return m.dim;
            else return m.kernel->dim;
        },
        node_->v);
}

bool LevyMeasure::is_zero() const { return std::holds_alternative<ZeroMeasure>(node_->v); }

FlatMeasure flatten(const LevyMeasure& phi) {
    FlatMeasure out;
    out.dim = phi.dim();
    flatten_into(phi, 1.0, std::nullopt, out);
    return out;
}

FlatMeasure mixture_slice(const FlatMixture& term, const Point& s) {
    const double w = term.kernel->weight(s);
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("mixture weight must be finite and >= 0");
    FlatMeasure out;
    out.dim = term.map ? static_cast<int>(term.map->rows()) : term.kernel->dim;
    if (w == 0.0) return out;
    const LevyMeasure at = term.kernel->at(s);
    if (at.dim() != term.kernel->dim) throw DimensionMismatch("mixture kernel returned a measure of wrong dimension");
    flatten_into(at, term.scale * w, term.map, out);
    if (!out.mixtures.empty()) throw UnsupportedLevyVariant("nested kernel mixtures are not supported");
    return out;
}

double min_quadratic_mass(const LevyMeasure& phi, const QuadratureConfig& cfg) { return flat_mqm(flatten(phi), cfg); }

cplx compensated_exp_integral(const LevyMeasure& phi, const Vec& t, const QuadratureConfig& cfg) {
    if (t.size() != phi.dim()) throw DimensionMismatch("compensated_exp_integral: t has wrong dimension");
    if (t.isZero(0.0)) return 0.0;
    return flat_cei(flatten(phi), t, cfg);
}

LevyMeasure pushforward(const LevyMeasure& phi, const Mat& R) { return phi.pushforward(R); }

double restricted_mass(const LevyMeasure& phi, double r, const QuadratureConfig& cfg) {
    if (!(r > 0.0)) throw Error("restricted_mass: radius must be positive");
    return flat_restricted(flatten(phi), r, cfg);
}

Vec recentering_integral(const LevyMeasure& phi, const Mat& R, const QuadratureConfig& cfg) {
    if (R.cols() != phi.dim()) throw DimensionMismatch("recentering_integral: map has wrong dimension");
    return flat_recentering(flatten(phi), R, cfg);
}

double small_jump_second_moment(const LevyMeasure& phi, double eps, const QuadratureConfig& cfg) {
    if (!(eps > 0.0)) throw Error("truncation level must be positive");
    return flat_small_moment(flatten(phi), eps, cfg);
}

Vec truncation_drift(const LevyMeasure& phi, double eps, const QuadratureConfig& cfg) {
    if (!(eps > 0.0)) throw Error("truncation level must be positive");
    return flat_truncation_drift(flatten(phi), eps, cfg);
}

double ray_min_quadratic_mass(const FlatRay& ray) {
    check_index(ray.alpha);
    return (ray.two_sided ? 2.0 : 1.0) * ray.weight * (1.0 / (2.0 - ray.alpha) + 1.0 / ray.alpha);
}

double ray_restricted_mass(const FlatRay& ray, double r) {
    return (ray.two_sided ? 2.0 : 1.0) * ray.weight * std::pow(r, -ray.alpha) / ray.alpha;
}

cplx compensated_exp_kernel(double tau, double r) {
    const double z = tau * r;
    const double s = std::sin(0.5 * z);
    double sin_minus = 0.0;
    if (std::abs(z) < 0.5) {
        const double z2 = z * z;
        sin_minus = z * z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (-1.0 / 5040.0 + z2 / 362880.0)));
    } else {
        sin_minus = std::sin(z) - z;
    }
    const double r2 = r * r;
    return {-2.0 * s * s, sin_minus + z * r2 / (1.0 + r2)};
}

double stable_cos_constant(double alpha) {
    check_index(alpha);
    // Gamma(1-alpha) cos(pi alpha/2) / alpha, written to stay finite at alpha = 1.
    const double e = 1.0 - alpha;
    const double ratio = std::abs(e) < 1e-7 ? M_PI / 2.0 * (1.0 - M_PI * M_PI * e * e / 24.0) : std::sin(M_PI * e / 2.0) / e;
    return std::tgamma(2.0 - alpha) / alpha * ratio;
}

cplx ray_compensated_exp(const FlatRay& ray, const Vec& t, const QuadratureConfig& cfg) {
    const double tau = t.dot(ray.u);
    if (tau == 0.0 || ray.weight == 0.0) return 0.0;
    if (ray.two_sided) return {-2.0 * ray.weight * stable_cos_constant(ray.alpha) * std::pow(std::abs(tau), ray.alpha), 0.0};
    RadialIntegrand h;
    h.full = [tau](double r) { return compensated_exp_kernel(tau, r); };
    h.tail_smooth = [tau](double r) { return cplx(-1.0, -tau * r / (1.0 + r * r)); };
    h.waves = {RadialWave{1.0, tau}};
    h.bound = 1.0 + tau * tau + 2.0 * std::abs(tau) + 4.0;
    auto res = integrate_radial(h, ray.alpha, ray.weight, cfg);
    if (!res.converged) throw QuadratureFailure("radial compensated exponential", res.error_estimate);
    return res.value;
}

FlatRay push_ray(const FlatRay& ray, const Mat& R, bool& vanished) {
    const Vec v = R * ray.u;
    const double a = v.norm();
    vanished = a <= zero_threshold(R, ray.u);
    if (vanished) return ray;
    return FlatRay{v / a, ray.weight * std::pow(a, ray.alpha), ray.alpha, ray.two_sided};
}

}  // namespace isrm
