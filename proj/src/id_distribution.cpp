#include "isrm/id_distribution.hpp"

#include <algorithm>
#include <cmath>

#include "isrm/errors.hpp"
#include "isrm/random.hpp"

namespace isrm {

IdTriplet::IdTriplet(Vec g, Mat q, LevyMeasure phi) : gamma(std::move(g)), Q(std::move(q)), levy(std::move(phi)) {
    const auto m = gamma.size();
    if (m == 0) throw DimensionMismatch("triplet dimension must be positive");
    if (Q.rows() != m || Q.cols() != m) throw DimensionMismatch("triplet: Q must be m x m");
    if (levy.dim() != m) throw DimensionMismatch("triplet: Levy measure has the wrong dimension");
    if (!gamma.allFinite() || !Q.allFinite()) throw Error("triplet: non-finite entries");
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw Error("triplet: Q must be symmetric");
    if (min_symmetric_eigenvalue(Q) < -1e-10 * scale) throw Error("triplet: Q must be positive semi-definite");
}

IdTriplet IdTriplet::zero(int m) { return IdTriplet(Vec::Zero(m), Mat::Zero(m, m), LevyMeasure(m)); }

cplx log_cf(const IdTriplet& trip, const Vec& t, const QuadratureConfig& cfg) {
    if (t.size() != trip.dim()) throw DimensionMismatch("log_cf: t has the wrong dimension");
    const double drift = trip.gamma.dot(t);
    const double quad = t.dot(trip.Q * t);
    return cplx(-0.5 * quad, drift) + compensated_exp_integral(trip.levy, t, cfg);
}

IdTriplet convolve(const IdTriplet& a, const IdTriplet& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("convolve: dimensions differ");
    return IdTriplet(a.gamma + b.gamma, a.Q + b.Q, LevyMeasure::sum({a.levy, b.levy}));
}

IdTriplet scale(const IdTriplet& trip, double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw Error("scale: factor must be positive");
    return IdTriplet(c * trip.gamma, c * trip.Q, trip.levy.scaled(c));
}

IdTriplet linear_image(const IdTriplet& trip, const Mat& R, const QuadratureConfig& cfg) {
    if (R.cols() != trip.dim()) throw DimensionMismatch("linear_image: map has the wrong dimension");
    Vec g = R * trip.gamma + recentering_integral(trip.levy, R, cfg);
    Mat q = R * trip.Q * R.transpose();
    q = 0.5 * (q + q.transpose());
    return IdTriplet(std::move(g), std::move(q), trip.levy.pushforward(R));
}

NullConvergenceReport null_convergence_check(std::span<const IdTriplet> seq, double tol, int tail,
                                             const QuadratureConfig& cfg) {
    NullConvergenceReport rep;
    for (const auto& t : seq) {
        rep.gamma_norm.push_back(t.gamma.norm());
        rep.Q_norm.push_back(operator_norm(t.Q));
        rep.levy_mass.push_back(min_quadratic_mass(t.levy, cfg));
    }
    if (seq.empty()) return rep;
    const std::size_t k = std::min<std::size_t>(std::max(tail, 1), seq.size());
    rep.tends_to_point_mass = true;
    for (std::size_t i = seq.size() - k; i < seq.size(); ++i)
        if (rep.gamma_norm[i] >= tol || rep.Q_norm[i] >= tol || rep.levy_mass[i] >= tol)
            rep.tends_to_point_mass = false;
    return rep;
}

namespace {

/// Rate of jumps larger than eps in a flat (mixture-free) measure.
double big_jump_rate(const FlatMeasure& f, double eps) {
    double rate = 0.0;
    for (const auto& a : f.atoms)
        if (a.x.norm() > eps) rate += a.mass;
    for (const auto& r : f.rays) rate += ray_restricted_mass(r, eps);
    return rate;
}

bool touches(const Box& box, const Point& p) {
    for (int i = 0; i < box.dim(); ++i)
        if (p(i) < box.sides[i].lo || p(i) > box.sides[i].hi) return false;
    return true;
}

}  // namespace

TripletSampler::TripletSampler(const IdTriplet& trip, double eps, const QuadratureConfig& cfg) : eps_(eps) {
    if (!(eps > 0.0)) throw Error("sampler: jump truncation must be positive");
    drift_ = trip.gamma + truncation_drift(trip.levy, eps, cfg);
    if (!trip.Q.isZero(0.0)) {
        gauss_ = psd_factor(trip.Q);
        has_gauss_ = true;
    }
    small_moment_ = small_jump_second_moment(trip.levy, eps, cfg);

    const FlatMeasure flat = flatten(trip.levy);
    for (const auto& a : flat.atoms)
        if (a.x.norm() > eps) atoms_.push_back(a);
    for (const auto& r : flat.rays) {
        const double rate = ray_restricted_mass(r, eps);
        if (rate > 0.0) rays_.push_back({r, rate});
    }
    for (const auto& term : flat.mixtures) {
        const MixtureKernel& k = *term.kernel;
        MixtureJumps mj{term, 0.0, 0.0, {}};
        auto g = [&](const Point& s) { return big_jump_rate(mixture_slice(term, s), eps); };
        double vol = 0.0;
        for (const auto& box : k.boxes) {
            if (box.degenerate()) {
                mj.box_cdf.push_back(vol);
                continue;
            }
            for (const auto& p : k.singular)
                if (touches(box, p))
                    throw UnsupportedLevyVariant("cannot bound the jump intensity of a mixture near a singular point");
            // Grid maximum of the intensity, slightly inside the box.
            const int d = box.dim();
            const int G = d == 1 ? 257 : 33;
            std::vector<int> idx(d, 0);
            Point s(d);
            while (true) {
                for (int i = 0; i < d; ++i) {
                    const double u = (idx[i] + 0.5) / G;
                    s(i) = box.sides[i].lo + u * box.sides[i].length();
                }
                mj.bound = std::max(mj.bound, g(s));
                int i = 0;
                while (i < d && ++idx[i] == G) idx[i++] = 0;
                if (i == d) break;
            }
            auto r = integrate_box(g, box, cfg, k.breaks);
            if (!r.converged) throw QuadratureFailure("mixture jump intensity", r.error_estimate);
            mj.rate += r.value;
            vol += box.volume();
            mj.box_cdf.push_back(vol);
        }
        mj.bound *= 1.5;
        for (auto& c : mj.box_cdf) c /= vol;
        if (mj.rate > 0.0) mixtures_.push_back(std::move(mj));
    }
}

double TripletSampler::jump_rate() const {
    double r = 0.0;
    for (const auto& a : atoms_) r += a.mass;
    for (const auto& ray : rays_) r += ray.rate;
    for (const auto& m : mixtures_) r += m.rate;
    return r;
}

void TripletSampler::add_ray_jump(std::mt19937_64& rng, const FlatRay& ray, Eigen::Ref<Vec> out) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = 1.0 - unif(rng);
    double r = eps_ * std::pow(u, -1.0 / ray.alpha);
    if (ray.two_sided && unif(rng) < 0.5) r = -r;
    out += r * ray.u;
}

void TripletSampler::sample_slice_jump(std::mt19937_64& rng, const FlatMeasure& slice, Eigen::Ref<Vec> out) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double total = big_jump_rate(slice, eps_);
    double pick = unif(rng) * total;
    for (const auto& a : slice.atoms) {
        if (a.x.norm() <= eps_) continue;
        if (pick < a.mass) {
            out += a.x;
            return;
        }
        pick -= a.mass;
    }
    for (const auto& r : slice.rays) {
        const double rate = ray_restricted_mass(r, eps_);
        if (pick < rate || &r == &slice.rays.back()) {
            add_ray_jump(rng, r, out);
            return;
        }
        pick -= rate;
    }
    if (!slice.atoms.empty()) {
        // Rounding left the pick past the end; fall back to the last big atom.
        for (auto it = slice.atoms.rbegin(); it != slice.atoms.rend(); ++it)
            if (it->x.norm() > eps_) {
                out += it->x;
                return;
            }
    }
}

void TripletSampler::add_draw(std::mt19937_64& rng, Eigen::Ref<Vec> out) const {
    out += drift_;
    if (has_gauss_) {
        std::normal_distribution<double> normal;
        Vec z(gauss_.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
        out += gauss_ * z;
    }
    for (const auto& a : atoms_) {
        std::poisson_distribution<long> pois(a.mass);
        const long k = pois(rng);
        if (k) out += static_cast<double>(k) * a.x;
    }
    for (const auto& r : rays_) {
        std::poisson_distribution<long> pois(r.rate);
        const long k = pois(rng);
        for (long j = 0; j < k; ++j) add_ray_jump(rng, r.ray, out);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& m : mixtures_) {
        std::poisson_distribution<long> pois(m.rate);
        const long k = pois(rng);
        const auto& boxes = m.term.kernel->boxes;
        for (long j = 0; j < k; ++j) {
            while (true) {
                const double ub = unif(rng);
                const std::size_t b = std::min<std::size_t>(
                    std::upper_bound(m.box_cdf.begin(), m.box_cdf.end(), ub) - m.box_cdf.begin(), boxes.size() - 1);
                Point s(boxes[b].dim());
                for (int i = 0; i < s.size(); ++i)
                    s(i) = boxes[b].sides[i].lo + unif(rng) * boxes[b].sides[i].length();
                const FlatMeasure slice = mixture_slice(m.term, s);
                const double g = big_jump_rate(slice, eps_);
                if (g > m.bound)
                    throw UnsupportedLevyVariant("mixture jump intensity exceeds its sampling bound");
                if (unif(rng) * m.bound < g) {
                    sample_slice_jump(rng, slice, out);
                    break;
                }
            }
        }
    }
}

Mat sample(const IdTriplet& trip, std::size_t n, std::uint64_t seed, double eps, const QuadratureConfig& cfg) {
    const TripletSampler sampler(trip, eps, cfg);
    const int m = trip.dim();
    Mat out = Mat::Zero(static_cast<Eigen::Index>(n), m);
    const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
    parallel_for_chunks(chunks, [&](std::size_t c) {
        auto rng = make_stream(seed, c);
        Vec x(m);
        const std::size_t end = std::min(n, (c + 1) * kChunkSize);
        for (std::size_t i = c * kChunkSize; i < end; ++i) {
            x.setZero();
            sampler.add_draw(rng, x);
            out.row(static_cast<Eigen::Index>(i)) = x.transpose();
        }
    });
    return out;
}

namespace {

double sinc(double y) { return y == 0.0 ? 1.0 : std::sin(y) / y; }

double concentration_objective(const Vec& x, double delta) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) p *= sinc(delta * x(j));
    return 1.0 - p;
}

}  // namespace

double concentration_constant(double delta, int m) {
    if (!(delta > 0.0) || m < 1) throw Error("concentration: need delta > 0 and m >= 1");
    auto feasible = [&](Vec x) {
        x = x.cwiseAbs();
        const double n = x.norm();
        if (n < delta) x = n > 0.0 ? Vec(x * (delta / n)) : Vec(Vec::Constant(m, delta / std::sqrt(double(m))));
        return x;
    };
    // A point with value < 1 bounds the search region: |prod sinc| <= sqrt(m)/(delta |x|).
    double best = 1.0 - sinc(delta * delta);
    Vec best_x = Vec::Zero(m);
    best_x(0) = delta;
    for (int k = 0; k < 64; ++k) {
        const double y = 2.0 * M_PI * k + 0.5 * M_PI;
        if (y < delta * delta) continue;
        Vec x = Vec::Zero(m);
        x(0) = y / delta;
        const double v = concentration_objective(x, delta);
        if (v < best) {
            best = v;
            best_x = x;
        }
        break;
    }
    const double R = std::sqrt(double(m)) / (delta * (1.0 - best)) * 1.01;

    const int G = m == 1 ? 20000 : m == 2 ? 400 : std::max(4, static_cast<int>(std::pow(2e5, 1.0 / m)));
    std::vector<int> idx(m, 0);
    Vec x(m);
    while (true) {
        for (int i = 0; i < m; ++i) x(i) = R * idx[i] / (G - 1);
        if (x.norm() >= delta) {
            const double v = concentration_objective(x, delta);
            if (v < best) {
                best = v;
                best_x = x;
            }
        }
        int i = 0;
        while (i < m && ++idx[i] == G) idx[i++] = 0;
        if (i == m) break;
    }
    // Boundary of the constraint, where the minimum often sits.
    const int B = m == 1 ? 1 : 2000;
    for (int b = 0; b < B; ++b) {
        Vec dir = Vec::Zero(m);
        if (m == 1) {
            dir(0) = 1.0;
        } else {
            const double a = 0.5 * M_PI * b / (B - 1);
            dir(0) = std::cos(a);
            dir(1) = std::sin(a);
            if (m > 2) dir.tail(m - 2).setConstant(0.0);
        }
        const Vec p = delta * dir;
        const double v = concentration_objective(p, delta);
        if (v < best) {
            best = v;
            best_x = p;
        }
    }
    // Compass refinement with projection onto |x| >= delta.
    double step = R / (G - 1);
    while (step > 1e-13 * std::max(1.0, R)) {
        bool moved = false;
        for (int i = 0; i < m && !moved; ++i)
            for (double sgn : {1.0, -1.0}) {
                Vec cand = best_x;
                cand(i) += sgn * step;
                cand = feasible(cand);
                const double v = concentration_objective(cand, delta);
                if (v < best) {
                    best = v;
                    best_x = cand;
                    moved = true;
                    break;
                }
            }
        if (!moved) step *= 0.5;
    }
    return best;
}

double concentration_bound(const std::function<cplx(const Vec&)>& cf, double delta, int m,
                           const QuadratureConfig& cfg) {
    const double C = concentration_constant(delta, m);
    Box box(std::vector<Interval>(m, Interval{-delta, delta}));
    auto g = [&](const Point& t) { return (1.0 - cf(t)).real(); };
    auto r = integrate_box(g, box, cfg);
    if (!r.converged) throw QuadratureFailure("concentration integral", r.error_estimate);
    const double integral = std::max(0.0, r.value);
    return integral / (std::pow(2.0 * delta, m) * C);
}

}  // namespace isrm
