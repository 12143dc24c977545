#include "isrm/quadrature.hpp"

#include <limits>
#include <sstream>

#include "isrm/errors.hpp"

namespace isrm {

void QuadratureConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw Error("quadrature tolerances must be positive");
    if (max_depth < 1 || max_intervals < 1) throw Error("quadrature limits must be positive");
    if (first_level < 1 || last_level < first_level + 3) throw Error("need at least four truncation levels");
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Integrable: return "integrable";
        case Verdict::Divergent: return "divergent";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

ProbeOutcome divergence_probe(std::span<const double> values) {
    ProbeOutcome out;
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = values.size();
    if (n == 0) return out;
    out.extrapolated = values.back();
    out.residual = std::numeric_limits<double>::infinity();
    if (n < 4) return out;
    for (double v : values)
        if (!std::isfinite(v)) {
            out.verdict = Verdict::Divergent;
            return out;
        }

    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    const double tiny = 1e-12 * std::max(1.0, scale);

    std::vector<double> d(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) d[k] = values[k + 1] - values[k];

    if (std::abs(d.back()) <= tiny) {
        out.verdict = Verdict::Integrable;
        out.ratio = 0.0;
        out.residual = std::abs(d.back());
        return out;
    }
    int sign = 0;
    for (double x : d) {
        if (std::abs(x) <= tiny) continue;
        const int sx = x > 0 ? 1 : -1;
        if (sign != 0 && sx != sign) return out;
        sign = sx;
    }

    // Ratios of successive increments; the early levels may be pre-asymptotic,
    // so only the trailing half decides.
    std::vector<double> q;
    for (std::size_t k = 0; k + 1 < d.size(); ++k)
        q.push_back(std::abs(d[k]) <= tiny ? 0.0 : std::abs(d[k + 1]) / std::abs(d[k]));
    const std::size_t from = q.size() > 4 ? q.size() / 2 : 0;
    double qmax = 0.0;
    double qmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = from; k < q.size(); ++k) {
        qmax = std::max(qmax, q[k]);
        qmin = std::min(qmin, q[k]);
    }
    out.ratio = q.back();
    if (qmax <= 0.98) {
        out.verdict = Verdict::Integrable;
        const double r = q.back();
        const double tail = d.back() * r / (1.0 - r);
        out.extrapolated = values.back() + tail;
        out.residual = std::abs(tail);
    } else if (qmin >= 0.999) {
        out.verdict = Verdict::Divergent;
    }
    return out;
}

namespace {

constexpr double kRadialUnderflow = 1e-100;
constexpr double kRadialOverflow = 1e300;

void check_bound(const RadialIntegrand& h, double r, cplx value) {
    const double cap = h.bound * std::min(1.0, r * r);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag()) ||
        std::abs(value) > cap * (1.0 + 1e-9) + 1e-300) {
        std::ostringstream os;
        os << "radial integrand |h(" << r << ")| = " << std::abs(value) << " exceeds " << cap;
        throw IntegrandBoundViolated(os.str());
    }
}

/// Integral of exp(i w r) r^(-alpha-1) over [r0, infinity) along the rotated
/// path r = r0 + i v / w, where the integrand decays like exp(-v).
QuadratureResult<cplx> wave_tail(double w, double alpha, double r0, const QuadratureConfig& cfg) {
    QuadratureResult<cplx> out;
    if (w == 0.0) {
        out.value = std::pow(r0, -alpha) / alpha;
        return out;
    }
    const double aw = std::abs(w);
    auto g = [&](double v) -> cplx { return std::exp(-v) * std::pow(cplx(r0, v / aw), -alpha - 1.0); };
    out = integrate_semi_infinite(g, 0.0, cfg);
    const cplx pre = cplx(0.0, 1.0) * std::exp(cplx(0.0, aw * r0)) / aw;
    out.value *= pre;
    out.error_estimate *= std::abs(pre);
    if (w < 0) out.value = std::conj(out.value);
    return out;
}

}  // namespace

QuadratureResult<cplx> integrate_radial(const RadialIntegrand& h, double alpha, double coeff,
                                        const QuadratureConfig& cfg) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error("radial index must lie in (0, 2)");
    double wmax = 0.0;
    for (const auto& w : h.waves) wmax = std::max(wmax, std::abs(w.frequency));
    const double r0 = wmax > 0.0 ? std::min(1.0, M_PI / wmax) : 1.0;

    if (!h.waves.empty()) {
        // The decomposition must reproduce h on the tail.
        for (double r : {r0, 2.0 * r0, 7.5 * r0}) {
            cplx sum = h.tail_smooth(r);
            for (const auto& w : h.waves) sum += w.amplitude * std::exp(cplx(0.0, w.frequency * r));
            const cplx ref = h.full(r);
            if (std::abs(sum - ref) > 1e-8 * std::max(1.0, std::abs(ref)))
                throw Error("radial tail decomposition does not match the integrand");
        }
    }

    const double p = 2.0 / (2.0 - alpha);
    const double near_scale = coeff * p * std::pow(r0, 2.0 - alpha);
    auto near = [&](double u) -> cplx {
        const double r = r0 * std::pow(u, p);
        if (r < kRadialUnderflow) return 0.0;
        const cplx v = h.full(r);
        check_bound(h, r, v);
        return v / (r * r) * (near_scale * u);
    };
    auto near_res = integrate_interval(near, 0.0, 1.0, cfg);

    const double q = 2.0 / alpha;
    const double tail_scale = coeff * std::pow(r0, -alpha) * q;
    double wave_mass = 0.0;
    for (const auto& w : h.waves) wave_mass += std::abs(w.amplitude);
    auto tail = [&](double u) -> cplx {
        const double r = std::min(r0 * std::pow(u, -q), kRadialOverflow);
        cplx v;
        if (h.waves.empty()) {
            v = h.full(r);
            check_bound(h, r, v);
        } else {
            v = h.tail_smooth(r);
            if (!std::isfinite(std::abs(v)) || std::abs(v) > (h.bound + wave_mass) * (1.0 + 1e-9))
                throw IntegrandBoundViolated("radial tail term is unbounded");
        }
        return v * (tail_scale * u);
    };
    auto tail_res = integrate_interval(tail, 0.0, 1.0, cfg);

    QuadratureResult<cplx> out;
    out.value = near_res.value + tail_res.value;
    out.error_estimate = near_res.error_estimate + tail_res.error_estimate;
    out.converged = near_res.converged && tail_res.converged;
    out.evaluations = near_res.evaluations + tail_res.evaluations;
    for (const auto& w : h.waves) {
        auto wr = wave_tail(w.frequency, alpha, r0, cfg);
        const cplx s = w.amplitude * coeff;
        out.value += s * wr.value;
        out.error_estimate += std::abs(s) * wr.error_estimate;
        out.converged = out.converged && wr.converged;
        out.evaluations += wr.evaluations;
    }
    return out;
}

QuadratureResult<double> integrate_radial_segment(const std::function<double(double)>& h, double alpha,
                                                  double coeff, double lo, double hi,
                                                  const QuadratureConfig& cfg) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error("radial index must lie in (0, 2)");
    if (!(lo >= 0.0) || !(hi > lo)) {
        return QuadratureResult<double>{};
    }
    auto weight = [&](double r) { return coeff * std::pow(r, -alpha - 1.0); };
    if (lo == 0.0) {
        if (std::isinf(hi)) {
            auto a = integrate_radial_segment(h, alpha, coeff, 0.0, 1.0, cfg);
            auto b = integrate_radial_segment(h, alpha, coeff, 1.0, hi, cfg);
            a.value += b.value;
            a.error_estimate += b.error_estimate;
            a.converged = a.converged && b.converged;
            a.evaluations += b.evaluations;
            return a;
        }
        const double p = 2.0 / (2.0 - alpha);
        const double scale = coeff * p * std::pow(hi, 2.0 - alpha);
        auto g = [&](double u) -> double {
            const double r = hi * std::pow(u, p);
            if (r < kRadialUnderflow) return 0.0;
            return h(r) / (r * r) * (scale * u);
        };
        return integrate_interval(g, 0.0, 1.0, cfg);
    }
    if (std::isinf(hi)) {
        const double q = 2.0 / alpha;
        const double scale = coeff * std::pow(lo, -alpha) * q;
        auto g = [&](double u) -> double {
            const double r = std::min(lo * std::pow(u, -q), kRadialOverflow);
            return h(r) * (scale * u);
        };
        return integrate_interval(g, 0.0, 1.0, cfg);
    }
    auto g = [&](double r) -> double { return h(r) * weight(r); };
    return integrate_interval(g, lo, hi, cfg);
}

}  // namespace isrm
