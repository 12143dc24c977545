#include "isrm/stochastic_integral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isrm/errors.hpp"

namespace isrm {

namespace {

MeasurableSet region_of(const IsrmSpec& spec, const MatrixField& f, const std::optional<MeasurableSet>& A) {
    if (f.base_dim() != spec.domain.dim()) throw DimensionMismatch("field and domain base dimensions differ");
    if (f.m() != spec.m) throw DimensionMismatch("field and spec dimensions differ");
    MeasurableSet r = A ? A->intersect(spec.domain.box) : spec.domain.as_set();
    if (f.support()) r = r.intersect(*f.support());
    return r;
}

void add_point_breaks(Breakpoints& b, const std::vector<Point>& pts, int d) {
    Breakpoints extra(d);
    for (const auto& p : pts)
        for (int a = 0; a < d && a < p.size(); ++a) extra[a].push_back(p[a]);
    merge_breakpoints(b, extra);
}

Breakpoints breaks_of(const IsrmSpec& spec, const MatrixField& f, const std::vector<Point>& singular) {
    Breakpoints b = spec.domain.breaks;
    merge_breakpoints(b, f.breaks());
    if (f.support()) merge_breakpoints(b, set_breakpoints(*f.support()));
    add_point_breaks(b, singular, spec.domain.dim());
    return b;
}

std::vector<Point> declared_singular(const IsrmSpec& spec, const MatrixField& f) {
    std::vector<Point> out = f.singular();
    out.insert(out.end(), spec.domain.singular.begin(), spec.domain.singular.end());
    return out;
}

void push_unique(std::vector<Point>& pts, const Point& p) {
    for (const auto& q : pts)
        if (q.size() == p.size() && (q - p).lpNorm<Eigen::Infinity>() <= 1e-12) return;
    pts.push_back(p);
}

/// True when the drift term R alpha + recentering vanishes for every R.
bool drift_vanishes(const IsrmSpec& spec) {
    if (!spec.alpha_is_zero()) return false;
    if (spec.rho.is_zero()) return true;
    if (!spec.rho.is_constant()) return false;
    const FlatMeasure flat = flatten(spec.rho.constant_value());
    if (!flat.atoms.empty() || !flat.mixtures.empty()) return false;
    for (const auto& ray : flat.rays)
        if (!ray.two_sided) return false;
    return true;
}

std::string verdict_text(const IntegrabilityReport& rep) {
    std::ostringstream os;
    os << "integrand is not integrable (" << to_string(rep.verdict);
    if (!rep.witness.empty()) {
        os << ": ";
        for (std::size_t i = 0; i < rep.witness.size(); ++i) os << (i ? ", " : "") << rep.witness[i];
    }
    os << ")";
    return os.str();
}

/// The region minus max-norm squares of half-width h around the singular points.
MeasurableSet truncated(const MeasurableSet& region, const std::vector<Point>& singular, double h) {
    std::vector<Box> holes;
    for (const auto& p : singular) {
        std::vector<Interval> sides;
        for (Eigen::Index a = 0; a < p.size(); ++a) sides.push_back({p[a] - h, p[a] + h});
        holes.emplace_back(std::move(sides));
    }
    std::vector<Box> out;
    for (const auto& box : region.boxes()) {
        auto rest = subtract(box, holes);
        for (auto& b : rest)
            if (!b.degenerate()) out.push_back(std::move(b));
    }
    return MeasurableSet(std::move(out));
}

double region_scale(const MeasurableSet& region) {
    double s = 0.0;
    for (const auto& box : region.boxes())
        for (const auto& side : box.sides) s = std::max(s, side.length());
    return s;
}

template <class G>
ConditionReport run_condition(const std::string& name, G&& g, const MeasurableSet& region,
                              const std::vector<Point>& singular, const Breakpoints& breaks,
                              const QuadratureConfig& cfg) {
    ConditionReport rep;
    rep.name = name;
    if (singular.empty()) {
        auto r = integrate_set(g, region, 0.0, cfg, breaks);
        rep.value = r.value;
        rep.residual = r.error_estimate;
        if (r.converged)
            rep.verdict = Verdict::Integrable;
        else
            rep.verdict = r.diagnosis.value_or(Verdict::Inconclusive);
        if (!std::isfinite(r.value)) rep.verdict = Verdict::Divergent;
        return rep;
    }
    const double scale = region_scale(region);
    bool all_converged = true;
    for (int k = cfg.first_level; k <= cfg.last_level; ++k) {
        const double h = scale * std::ldexp(1.0, -k);
        auto r = integrate_set(g, truncated(region, singular, h), 0.0, cfg, breaks);
        all_converged = all_converged && r.converged;
        rep.sequence.push_back(r.value);
    }
    const ProbeOutcome probe = divergence_probe(rep.sequence);
    rep.verdict = probe.verdict;
    rep.value = probe.extrapolated;
    rep.residual = probe.residual;
    if (!all_converged && rep.verdict == Verdict::Integrable) rep.verdict = Verdict::Inconclusive;
    return rep;
}

}  // namespace

Vec u_m(const IsrmSpec& spec, const Mat& R, const Point& s, const QuadratureConfig& cfg) {
    if (R.rows() != spec.m || R.cols() != spec.m) throw DimensionMismatch("u_m: R must be m x m");
    Vec u = Vec::Zero(spec.m);
    if (!spec.alpha_is_zero()) u += R * spec.alpha(s);
    if (spec.rho.is_zero()) return u;
    const LevyMeasure rho = spec.rho.at(s);
    // Pointwise bound on the recentering integrand at atoms (rays are bounded inside the radial rule).
    const FlatMeasure flat = flatten(rho);
    if (!flat.atoms.empty()) {
        const double r = operator_norm(R);
        const double cap = std::max(2.0, r + r * r * r);
        for (const auto& a : flat.atoms) {
            const Vec Rx = R * a.x;
            const double x2 = a.x.squaredNorm();
            const double val = (Rx / (1.0 + Rx.squaredNorm()) - Rx / (1.0 + x2)).norm();
            if (val > cap * std::min(1.0, x2) * (1.0 + 1e-12))
                throw IntegrandBoundViolated("recentering integrand exceeds its bound at an atom");
        }
    }
    u += recentering_integral(rho, R, cfg);
    return u;
}

double v_m(const IsrmSpec& spec, const Mat& R, const Point& s, const QuadratureConfig& cfg) {
    if (R.rows() != spec.m || R.cols() != spec.m) throw DimensionMismatch("v_m: R must be m x m");
    if (spec.rho.is_zero() || R.isZero(0.0)) return 0.0;
    return min_quadratic_mass(pushforward(spec.rho.at(s), R), cfg);
}

std::vector<Point> singular_points(const IsrmSpec& spec, const MatrixField& f) {
    std::vector<Point> out;
    for (const auto& p : declared_singular(spec, f)) push_unique(out, p);
    const Box& box = spec.domain.box;
    const int d = box.dim();
    const int per_axis = d == 1 ? 33 : 17;
    const int total = d == 1 ? per_axis : per_axis * per_axis;
    for (int k = 0; k < total; ++k) {
        Point s(d);
        int rest = k;
        for (int a = 0; a < d; ++a) {
            const int i = rest % per_axis;
            rest /= per_axis;
            const auto& side = box.sides[a];
            s[a] = side.lo + side.length() * i / (per_axis - 1);
        }
        bool bad = false;
        try {
            const double w = spec.domain.density(s);
            bad = !std::isfinite(w);
            if (!bad) (void)f(s);
        } catch (const EvalError&) {
            bad = true;
        }
        if (bad) push_unique(out, s);
    }
    return out;
}

IntegrabilityReport check_integrability(const IsrmSpec& spec, const MatrixField& f, const QuadratureConfig& cfg) {
    IntegrabilityReport rep;
    const MeasurableSet region = region_of(spec, f, std::nullopt);
    rep.singular = singular_points(spec, f);
    const Breakpoints breaks = breaks_of(spec, f, rep.singular);
    const auto& w = spec.domain.density;
    const QuadratureConfig inner = cfg.tightened(10.0);

    auto weighted = [&](auto&& h) {
        return [&, h](const Point& s) -> double {
            const double ws = w(s);
            if (ws == 0.0) return 0.0;
            const Mat R = f(s);
            if (R.isZero(0.0)) return 0.0;
            return h(R, s) * ws;
        };
    };

    auto trivially = [](const char* name) {
        ConditionReport c;
        c.name = name;
        c.verdict = Verdict::Integrable;
        return c;
    };

    const bool skip = f.is_zero() || region.empty();
    if (skip || drift_vanishes(spec))
        rep.conditions.push_back(trivially("drift"));
    else
        rep.conditions.push_back(run_condition(
            "drift", weighted([&](const Mat& R, const Point& s) { return u_m(spec, R, s, inner).norm(); }), region,
            rep.singular, breaks, cfg));

    if (skip || spec.beta_is_zero())
        rep.conditions.push_back(trivially("gaussian"));
    else
        rep.conditions.push_back(run_condition(
            "gaussian",
            weighted([&](const Mat& R, const Point& s) { return operator_norm(R * spec.beta_at(s) * R.transpose()); }),
            region, rep.singular, breaks, cfg));

    if (skip || spec.rho.is_zero())
        rep.conditions.push_back(trivially("levy_mass"));
    else
        rep.conditions.push_back(run_condition(
            "levy_mass", weighted([&](const Mat& R, const Point& s) { return v_m(spec, R, s, inner); }), region,
            rep.singular, breaks, cfg));

    bool any_inconclusive = false;
    for (const auto& c : rep.conditions) {
        if (c.verdict == Verdict::Divergent) rep.witness.push_back(c.name);
        if (c.verdict == Verdict::Inconclusive) any_inconclusive = true;
    }
    if (!rep.witness.empty())
        rep.verdict = Verdict::Divergent;
    else if (any_inconclusive)
        rep.verdict = Verdict::Inconclusive;
    else
        rep.verdict = Verdict::Integrable;
    rep.gamma_residual = rep.conditions[0].residual;
    rep.Q_residual = rep.conditions[1].residual;
    rep.levy_mass_sequence = rep.conditions[2].sequence;
    return rep;
}

IntegralTriplet integral_triplet(const IsrmSpec& spec, const MatrixField& f, const QuadratureConfig& cfg, bool force) {
    IntegralTriplet out;
    out.report = check_integrability(spec, f, cfg);
    if (out.report.verdict != Verdict::Integrable && !force) throw NotIntegrable(verdict_text(out.report));

    const int m = spec.m;
    const MeasurableSet region = region_of(spec, f, std::nullopt);
    const std::vector<Point>& singular = out.report.singular;
    const Breakpoints breaks = breaks_of(spec, f, singular);
    const auto& w = spec.domain.density;
    const QuadratureConfig inner = cfg.tightened(10.0);
    out.triplet = IdTriplet::zero(m);
    if (f.is_zero() || region.empty()) return out;

    if (!drift_vanishes(spec)) {
        auto r = integrate_set(
            [&](const Point& s) -> Vec {
                const double ws = w(s);
                if (ws == 0.0) return Vec::Zero(m);
                return u_m(spec, f(s), s, inner) * ws;
            },
            region, Vec(Vec::Zero(m)), cfg, breaks);
        out.triplet.gamma = r.value;
        out.gamma_converged = r.converged;
        out.gamma_residual = r.error_estimate;
    }

    if (!spec.beta_is_zero()) {
        auto r = integrate_set(
            [&](const Point& s) -> Mat {
                const double ws = w(s);
                if (ws == 0.0) return Mat::Zero(m, m);
                const Mat R = f(s);
                return R * spec.beta_at(s) * R.transpose() * ws;
            },
            region, Mat(Mat::Zero(m, m)), cfg, breaks);
        out.triplet.Q = r.value;
        out.Q_converged = r.converged;
        out.Q_residual = r.error_estimate;
        project_psd(out.triplet.Q);
    }

    if (spec.rho.is_zero()) return out;

    if (spec.rho.is_constant()) {
        const LevyMeasure& rho = spec.rho.constant_value();
        if (f.is_simple()) {
            std::vector<LevyMeasure> terms;
            for (const auto& p : f.pieces()) {
                const double lam = spec.domain.measure(p.set, cfg);
                if (lam > 0.0 && !p.R.isZero(0.0)) terms.push_back(pushforward(rho, p.R).scaled(lam));
            }
            out.triplet.levy = terms.empty() ? LevyMeasure(m) : LevyMeasure::sum(std::move(terms));
            return out;
        }
        if (const auto& prof = f.profile()) {
            if (prof->g.is_constant()) {
                const double lam = spec.domain.measure(region, cfg);
                out.triplet.levy = pushforward(rho, prof->g.constant_value() * prof->R).scaled(lam);
                return out;
            }
            const FlatMeasure flat = flatten(rho);
            bool rays_only = flat.atoms.empty() && flat.mixtures.empty() && !flat.rays.empty();
            for (const auto& ray : flat.rays) rays_only = rays_only && ray.alpha == flat.rays.front().alpha;
            if (rays_only) {
                // Rays are homogeneous: the image under g(s) R scales the weight by |g|^alpha.
                const double a = flat.rays.front().alpha;
                const auto& g = prof->g;
                auto part = [&](double sign) {
                    auto r = integrate_set(
                        [&](const Point& s) {
                            const double ws = w(s);
                            if (ws == 0.0) return 0.0;
                            const double v = sign * g(s);
                            return v > 0.0 ? std::pow(v, a) * ws : 0.0;
                        },
                        region, 0.0, cfg, breaks);
                    if (!r.converged) throw QuadratureFailure("power moment of the field profile", r.error_estimate);
                    return r.value;
                };
                const double plus = part(1.0);
                const double minus = part(-1.0);
                std::vector<LevyMeasure> terms;
                if (plus > 0.0) terms.push_back(pushforward(rho, prof->R).scaled(plus));
                if (minus > 0.0) terms.push_back(pushforward(rho, Mat(-prof->R)).scaled(minus));
                out.triplet.levy = terms.empty() ? LevyMeasure(m) : LevyMeasure::sum(std::move(terms));
                return out;
            }
        }
    }

    auto k = std::make_shared<MixtureKernel>();
    k->dim = m;
    k->boxes = region.boxes();
    k->breaks = breaks;
    k->weight = [w](const Point& s) { return w(s); };
    k->at = [rho = spec.rho, f](const Point& s) { return rho.at(s).pushforward(f(s)); };
    k->singular = singular;
    k->cfg = cfg;
    out.triplet.levy = LevyMeasure::mixture(k);
    return out;
}

QuadratureResult<cplx> integral_log_cf_result(const IsrmSpec& spec, const MatrixField& f, const Vec& t,
                                              const std::optional<MeasurableSet>& A, const QuadratureConfig& cfg) {
    if (t.size() != spec.m) throw DimensionMismatch("integral_log_cf: t has wrong dimension");
    const MeasurableSet region = region_of(spec, f, A);
    QuadratureResult<cplx> r;
    if (f.is_zero() || region.empty() || t.isZero(0.0)) return r;
    const Breakpoints breaks = breaks_of(spec, f, declared_singular(spec, f));
    const auto& w = spec.domain.density;
    const QuadratureConfig inner = cfg.tightened(10.0);
    return integrate_set(
        [&](const Point& s) -> cplx {
            const double ws = w(s);
            if (ws == 0.0) return 0.0;
            const Vec tau = f(s).transpose() * t;
            if (tau.isZero(0.0)) return 0.0;
            return k_m(spec, tau, s, inner) * ws;
        },
        region, cplx(0.0), cfg, breaks);
}

cplx integral_log_cf(const IsrmSpec& spec, const MatrixField& f, const Vec& t, const std::optional<MeasurableSet>& A,
                     const QuadratureConfig& cfg) {
    auto r = integral_log_cf_result(spec, f, t, A, cfg);
    if (!r.converged) throw QuadratureFailure("log-CF of the stochastic integral", r.error_estimate);
    return r.value;
}

cplx joint_log_cf(const IsrmSpec& spec, const std::vector<MatrixField>& fields, const std::vector<Vec>& ts,
                  const QuadratureConfig& cfg) {
    if (fields.size() != ts.size()) throw DimensionMismatch("joint_log_cf: one t per field");
    Breakpoints breaks = spec.domain.breaks;
    std::vector<Point> singular = spec.domain.singular;
    for (std::size_t j = 0; j < fields.size(); ++j) {
        const auto& f = fields[j];
        if (f.m() != spec.m || ts[j].size() != spec.m) throw DimensionMismatch("joint_log_cf: dimension mismatch");
        if (f.base_dim() != spec.domain.dim()) throw DimensionMismatch("field and domain base dimensions differ");
        merge_breakpoints(breaks, f.breaks());
        if (f.support()) merge_breakpoints(breaks, set_breakpoints(*f.support()));
        singular.insert(singular.end(), f.singular().begin(), f.singular().end());
    }
    add_point_breaks(breaks, singular, spec.domain.dim());
    const auto& w = spec.domain.density;
    const QuadratureConfig inner = cfg.tightened(10.0);
    auto r = integrate_set(
        [&](const Point& s) -> cplx {
            const double ws = w(s);
            if (ws == 0.0) return 0.0;
            Vec tau = Vec::Zero(spec.m);
            for (std::size_t j = 0; j < fields.size(); ++j) tau += fields[j](s).transpose() * ts[j];
            if (tau.isZero(0.0)) return 0.0;
            return k_m(spec, tau, s, inner) * ws;
        },
        spec.domain.as_set(), cplx(0.0), cfg, breaks);
    if (!r.converged) throw QuadratureFailure("joint log-CF", r.error_estimate);
    return r.value;
}

std::vector<cplx> cf_convergence_gap(const IsrmSpec& spec, const std::vector<MatrixField>& f_seq, const MatrixField& f,
                                     const Vec& t, const QuadratureConfig& cfg) {
    std::vector<cplx> out;
    out.reserve(f_seq.size());
    for (const auto& fn : f_seq) out.push_back(integral_log_cf(spec, fn - f, t, std::nullopt, cfg));
    return out;
}

Mat simple_integral(const MatrixField& f, const std::vector<Mat>& piece_samples) {
    if (!f.is_simple()) throw Error("simple_integral needs a simple field");
    const auto& pieces = f.pieces();
    if (pieces.size() != piece_samples.size()) throw DimensionMismatch("simple_integral: one sample block per piece");
    if (pieces.empty()) return Mat(0, f.m());
    const Eigen::Index n = piece_samples.front().rows();
    Mat out = Mat::Zero(n, f.m());
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        const Mat& X = piece_samples[j];
        if (X.rows() != n || X.cols() != f.m()) throw DimensionMismatch("simple_integral: sample block has wrong shape");
        out += X * pieces[j].R.transpose();
    }
    return out;
}

}  // namespace isrm
