#pragma once

// Deterministic adaptive quadrature: Gauss-Kronrod 7/15 on a global
// bisection tree, nested for boxes, with substitutions for endpoint
// singularities, semi-infinite ranges and power-law radial measures.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "isrm/geometry.hpp"
#include "isrm/linalg.hpp"

namespace isrm {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_depth = 30;
    int max_intervals = 2000;
    /// Truncation levels 2^-k, k = first_level..last_level, for singular integrands.
    int first_level = 4;
    int last_level = 16;
    /// Smooth polynomial substitution clustering nodes at both interval ends.
    bool endpoint_transform = true;

    /// Same config with both tolerances divided by `factor`.
    QuadratureConfig tightened(double factor) const {
        QuadratureConfig c = *this;
        c.abs_tol = std::max(abs_tol / factor, 1e-15);
        c.rel_tol = std::max(rel_tol / factor, 1e-13);
        return c;
    }
    void validate() const;
};

enum class Verdict { Integrable, Divergent, Inconclusive };

const char* to_string(Verdict v);

template <class T>
struct QuadratureResult {
    T value{};
    double error_estimate = 0.0;
    bool converged = true;
    std::size_t evaluations = 0;
    /// Growth diagnosis, filled when an interval integral failed near an endpoint.
    std::optional<Verdict> diagnosis;
};

/// Outcome of a truncation-sequence analysis.
struct ProbeOutcome {
    Verdict verdict = Verdict::Inconclusive;
    /// Last observed increment ratio (NaN when undefined).
    double ratio = 0.0;
    /// Geometric-tail extrapolation of the sequence limit.
    double extrapolated = 0.0;
    /// Size of the extrapolated tail.
    double residual = 0.0;
};

/// Classifies values over increasing truncation levels: geometric decay of the
/// increments means a finite limit, non-decaying increments mean divergence.
ProbeOutcome divergence_probe(std::span<const double> values);

namespace detail {

template <class R, class = void>
struct plain {
    using type = R;
};
template <class R>
struct plain<R, std::void_t<typename R::PlainObject>> {
    using type = typename R::PlainObject;
};
template <class R>
using plain_t = typename plain<std::decay_t<R>>::type;

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const cplx& z) { return std::abs(z); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& v) {
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

template <class T>
T zero_like(const T& like) {
    if constexpr (std::is_arithmetic_v<T>) {
        return T{0};
    } else if constexpr (std::is_same_v<T, cplx>) {
        return cplx{0.0, 0.0};
    } else {
        return T::Zero(like.rows(), like.cols());
    }
}

/// Pairwise summation in index order.
template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return v[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    T a = pairwise_sum(v, lo, mid);
    T b = pairwise_sum(v, mid, hi);
    return a + b;
}

template <class T>
struct Segment {
    double a;
    double b;
    T value;
    double error;
    int depth;
};

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

/// One Gauss-Kronrod 7/15 panel with the QUADPACK error heuristic.
template <class T, class G>
Segment<T> gk15(G& g, double a, double b, int depth) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    T fc = g(center);
    T resk = fc * kWgk[7];
    T resg = fc * kWg[3];
    T f1[7];
    T f2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = g(center - dx);
        f2[j] = g(center + dx);
        resk = resk + (f1[j] + f2[j]) * kWgk[j];
        if (j % 2 == 1) resg = resg + (f1[j] + f2[j]) * kWg[j / 2];
    }
    const T mean = resk * 0.5;
    double resasc = kWgk[7] * magnitude(fc - mean);
    double resabs = kWgk[7] * magnitude(fc);
    for (int j = 0; j < 7; ++j) {
        resasc += kWgk[j] * (magnitude(f1[j] - mean) + magnitude(f2[j] - mean));
        resabs += kWgk[j] * (magnitude(f1[j]) + magnitude(f2[j]));
    }
    const double ah = std::abs(half);
    resasc *= ah;
    resabs *= ah;
    double err = magnitude(resk - resg) * ah;
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = 2.220446049250313e-16;
    if (resabs > 1e-290) err = std::max(50.0 * eps * resabs, err);
    return Segment<T>{a, b, resk * half, err, depth};
}

/// Global adaptive bisection on [a, b] without substitution. On failure,
/// `trouble` is set to -1 / +1 when the worst panel touches the left / right end.
template <class T, class G>
QuadratureResult<T> adapt(G& g, double a, double b, const QuadratureConfig& cfg, int* trouble = nullptr) {
    std::size_t evals = 0;
    auto counted = [&](double x) -> T {
        ++evals;
        return T(g(x));
    };
    std::vector<Segment<T>> segs;
    segs.push_back(gk15<T>(counted, a, b, 0));
    bool converged = false;
    while (true) {
        T total = segs.front().value;
        double err = segs.front().error;
        for (std::size_t i = 1; i < segs.size(); ++i) {
            total = total + segs[i].value;
            err += segs[i].error;
        }
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * magnitude(total));
        if (err <= tol) {
            converged = true;
            break;
        }
        if (static_cast<int>(segs.size()) >= cfg.max_intervals) break;
        std::size_t worst = segs.size();
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].depth >= cfg.max_depth) continue;
            if (worst == segs.size() || segs[i].error > segs[worst].error) worst = i;
        }
        if (worst == segs.size()) break;
        const Segment<T> s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        segs[worst] = gk15<T>(counted, s.a, mid, s.depth + 1);
        segs.push_back(gk15<T>(counted, mid, s.b, s.depth + 1));
    }
    std::sort(segs.begin(), segs.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    std::vector<T> values;
    values.reserve(segs.size());
    double err = 0.0;
    for (const auto& s : segs) {
        values.push_back(s.value);
        err += s.error;
    }
    QuadratureResult<T> r;
    r.value = pairwise_sum(values, 0, values.size());
    r.error_estimate = err;
    r.converged = converged;
    r.evaluations = evals;
    if (!converged && trouble) {
        const auto worst = std::max_element(segs.begin(), segs.end(),
                                            [](const auto& x, const auto& y) { return x.error < y.error; });
        const double span = b - a;
        *trouble = 0;
        if (worst->a - a <= 1e-3 * span) *trouble = -1;
        else if (b - worst->b <= 1e-3 * span) *trouble = 1;
    }
    return r;
}

/// x = a + (b-a) phi(u) with phi(u) = 3u^2 - 2u^3, computed from the nearer end.
inline std::pair<double, double> cubic_map(double a, double b, double u) {
    const double w = b - a;
    const double jac = w * 6.0 * u * (1.0 - u);
    if (u <= 0.5) return {a + w * u * u * (3.0 - 2.0 * u), jac};
    const double v = 1.0 - u;
    return {b - w * v * v * (3.0 - 2.0 * v), jac};
}

/// Tanh-sinh rule on [a, b], refined by halving the step. Nodes are placed by
/// their distance to the nearer end so algebraic end singularities resolve.
template <class T, class F>
QuadratureResult<T> tanh_sinh(F& f, double a, double b, const QuadratureConfig& cfg, int max_level = 10) {
    const double c = 0.5 * (a + b);
    const double L = 0.5 * (b - a);
    constexpr double tmax = 6.5;
    std::size_t evals = 0;
    bool have = false;
    T sum{};
    // Outermost evaluated node per side; its term must be negligible or the
    // truncated tails (and hence the limit) are not under control.
    double edge_t[2] = {0.0, 0.0};
    double edge_term[2] = {0.0, 0.0};
    auto add_node = [&](double t) {
        const double y = 0.5 * M_PI * std::sinh(t);
        const double e = std::exp(-2.0 * std::abs(y));
        const double w = 0.5 * M_PI * std::cosh(t) * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if (w == 0.0) return;
        const double d = 2.0 * L * e / (1.0 + e);
        const double x = t == 0.0 ? c : (t < 0.0 ? a + d : b - d);
        if (!(x > a && x < b)) return;
        ++evals;
        T v = T(f(x)) * (L * w);
        const int side = t < 0.0 ? 0 : 1;
        if (std::abs(t) >= edge_t[side]) {
            edge_t[side] = std::abs(t);
            edge_term[side] = magnitude(v);
        }
        if (!have) {
            sum = v;
            have = true;
        } else {
            sum = sum + v;
        }
    };
    for (double t = -tmax; t <= tmax + 1e-12; t += 1.0) add_node(t);
    T prev = sum * 1.0;
    QuadratureResult<T> r;
    r.converged = false;
    for (int level = 1; level <= max_level; ++level) {
        const double h = std::ldexp(1.0, -level);
        for (double t = -tmax + h; t < tmax; t += 2.0 * h) add_node(t);
        const T cur = sum * h;
        const double diff = magnitude(cur - prev);
        r.value = cur;
        r.error_estimate = diff;
        if (!std::isfinite(magnitude(cur))) break;
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * magnitude(cur));
        if (level >= 3 && diff <= tol && std::max(edge_term[0], edge_term[1]) <= tol) {
            r.converged = true;
            break;
        }
        prev = cur;
    }
    r.evaluations = evals;
    return r;
}

template <class T>
QuadratureResult<T> combine(std::vector<QuadratureResult<T>>& parts) {
    QuadratureResult<T> out;
    std::vector<T> values;
    for (auto& p : parts) {
        values.push_back(p.value);
        out.error_estimate += p.error_estimate;
        out.converged = out.converged && p.converged;
        out.evaluations += p.evaluations;
        if (p.diagnosis && !out.diagnosis) out.diagnosis = p.diagnosis;
    }
    out.value = pairwise_sum(values, 0, values.size());
    return out;
}

}  // namespace detail

/// Adaptive integral of f over [a, b]. Endpoints are never evaluated.
template <class F>
auto integrate_interval(F&& f, double a, double b, const QuadratureConfig& cfg = {})
    -> QuadratureResult<detail::plain_t<std::invoke_result_t<F&, double>>> {
    using T = detail::plain_t<std::invoke_result_t<F&, double>>;
    if (!(b > a)) {
        QuadratureResult<T> r;
        r.value = detail::zero_like<T>(T(f(a)));
        return r;
    }
    QuadratureResult<T> r;
    int trouble = 0;
    if (cfg.endpoint_transform) {
        auto g = [&](double u) -> T {
            const auto [x, jac] = detail::cubic_map(a, b, u);
            return T(f(x)) * jac;
        };
        r = detail::adapt<T>(g, 0.0, 1.0, cfg, &trouble);
    } else {
        auto g = [&](double x) -> T { return T(f(x)); };
        r = detail::adapt<T>(g, a, b, cfg, &trouble);
    }
    if (!r.converged && trouble != 0) {
        auto plain_f = [&](double x) -> T { return T(f(x)); };
        auto ts = detail::tanh_sinh<T>(plain_f, a, b, cfg);
        if (ts.converged) {
            ts.evaluations += r.evaluations;
            return ts;
        }
        // Endpoint trouble: probe growth over truncations toward the offending end.
        const bool left = trouble < 0;
        std::vector<double> values;
        const QuadratureConfig& inner = cfg;
        for (int k = cfg.first_level; k <= cfg.last_level; ++k) {
            const double h = (b - a) * std::ldexp(1.0, -k);
            const double lo = left ? a + h : a;
            const double hi = left ? b : b - h;
            auto g = [&](double u) -> T {
                const auto [x, jac] = detail::cubic_map(lo, hi, u);
                return T(f(x)) * jac;
            };
            values.push_back(detail::magnitude(detail::adapt<T>(g, 0.0, 1.0, inner).value));
        }
        r.diagnosis = divergence_probe(values).verdict;
    }
    return r;
}

/// Adaptive integral of f over [a, infinity) through x = a + u/(1-u).
template <class F>
auto integrate_semi_infinite(F&& f, double a, const QuadratureConfig& cfg = {})
    -> QuadratureResult<detail::plain_t<std::invoke_result_t<F&, double>>> {
    using T = detail::plain_t<std::invoke_result_t<F&, double>>;
    auto g = [&](double u) -> T {
        const double v = 1.0 - u;
        return T(f(a + u / v)) * (1.0 / (v * v));
    };
    QuadratureConfig c = cfg;
    auto r = integrate_interval(g, 0.0, 1.0, c);
    r.diagnosis.reset();
    return r;
}

/// Adaptive integral of f(Point) over a box (dimension >= 1) by nested
/// one-dimensional rules. Interior breakpoints split the axis ranges.
template <class F>
auto integrate_box(F&& f, const Box& box, const QuadratureConfig& cfg = {}, const Breakpoints& breaks = {})
    -> QuadratureResult<detail::plain_t<std::invoke_result_t<F&, const Point&>>> {
    using T = detail::plain_t<std::invoke_result_t<F&, const Point&>>;
    const int d = box.dim();
    Point s(d);
    bool inner_ok = true;
    std::size_t inner_evals = 0;

    std::function<QuadratureResult<T>(int, const QuadratureConfig&)> along;
    along = [&](int axis, const QuadratureConfig& c) -> QuadratureResult<T> {
        const Interval side = box.sides[axis];
        std::vector<double> cuts{side.lo};
        if (axis < static_cast<int>(breaks.size()))
            for (double x : breaks[axis])
                if (x > side.lo && x < side.hi) cuts.push_back(x);
        cuts.push_back(side.hi);
        const QuadratureConfig inner_cfg = c.tightened(10.0 * std::max(1.0, side.length()));
        std::vector<QuadratureResult<T>> parts;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            auto g = [&](double x) -> T {
                s[axis] = x;
                if (axis + 1 == d) return T(f(static_cast<const Point&>(s)));
                auto r = along(axis + 1, inner_cfg);
                inner_ok = inner_ok && r.converged;
                inner_evals += r.evaluations;
                return r.value;
            };
            const double share = (cuts[i + 1] - cuts[i]) / std::max(side.length(), 1e-300);
            QuadratureConfig pc = c;
            pc.abs_tol = std::max(c.abs_tol * share, 1e-15);
            parts.push_back(integrate_interval(g, cuts[i], cuts[i + 1], pc));
        }
        return detail::combine(parts);
    };

    if (box.degenerate()) {
        QuadratureResult<T> r;
        r.value = detail::zero_like<T>(T(f(box.midpoint())));
        return r;
    }
    auto r = along(0, cfg);
    r.converged = r.converged && inner_ok;
    r.evaluations += inner_evals;
    return r;
}

/// Integral over a finite union of boxes (one integrate_box per box); `zero`
/// is returned for an empty set.
template <class F, class T>
QuadratureResult<T> integrate_set(F&& f, const MeasurableSet& A, const T& zero, const QuadratureConfig& cfg = {},
                                  const Breakpoints& breaks = {}) {
    std::vector<QuadratureResult<T>> parts;
    for (const auto& box : A.boxes()) {
        if (box.degenerate()) continue;
        auto r = integrate_box(f, box, cfg, breaks);
        QuadratureResult<T> p;
        p.value = r.value;
        p.error_estimate = r.error_estimate;
        p.converged = r.converged;
        p.evaluations = r.evaluations;
        p.diagnosis = r.diagnosis;
        parts.push_back(std::move(p));
    }
    if (parts.empty()) {
        QuadratureResult<T> r;
        r.value = zero;
        return r;
    }
    return detail::combine(parts);
}

/// Wave term amplitude * exp(i * frequency * r) on the radial tail.
struct RadialWave {
    cplx amplitude;
    double frequency;
};

/// A radial functional h with |h(r)| <= bound * min{1, r^2}. When `waves` is
/// non-empty, h(r) = tail_smooth(r) + sum of waves on the tail, and the wave
/// terms are integrated along a rotated contour.
struct RadialIntegrand {
    std::function<cplx(double)> full;
    std::function<cplx(double)> tail_smooth;
    std::vector<RadialWave> waves;
    double bound = 1e4;
};

/// Integral of h(r) * coeff * r^(-alpha-1) over (0, infinity), alpha in (0, 2).
/// Split at r = 1 (or at pi / max |frequency| when oscillating faster).
/// Throws IntegrandBoundViolated when h leaves the Levy-integrable class.
QuadratureResult<cplx> integrate_radial(const RadialIntegrand& h, double alpha, double coeff,
                                        const QuadratureConfig& cfg = {});

/// Same integral restricted to r in [lo, hi] (hi may be +infinity), for
/// non-oscillating functionals without a bound requirement.
QuadratureResult<double> integrate_radial_segment(const std::function<double(double)>& h, double alpha,
                                                  double coeff, double lo, double hi,
                                                  const QuadratureConfig& cfg = {});

}  // namespace isrm
