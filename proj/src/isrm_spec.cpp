#include "isrm/isrm_spec.hpp"

#include <cmath>
#include <sstream>

#include "isrm/errors.hpp"

namespace isrm {

namespace {

std::string point_text(const Point& s) {
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
    os << ")";
    return os.str();
}

double check_density(double w, const Point& s) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw SpecError("control density must be finite and >= 0 at " + point_text(s));
    return w;
}

}  // namespace

Domain Domain::lebesgue(Box box) {
    if (box.dim() < 1 || box.dim() > 2) throw SpecError("domain dimension must be 1 or 2");
    for (const auto& side : box.sides)
        if (!std::isfinite(side.lo) || !std::isfinite(side.hi) || !(side.hi >= side.lo))
            throw SpecError("domain bounds must be finite with lo <= hi");
    Domain d;
    d.box = std::move(box);
    return d;
}

Domain Domain::with_density(Box box, const Expr& density) {
    Domain d = lebesgue(std::move(box));
    if (density.arity() > d.dim()) throw SpecError("density uses a coordinate beyond the domain dimension");
    d.density = scalar_fn(density);
    d.breaks.resize(d.dim());
    for (int a = 0; a < d.dim(); ++a) d.breaks[a] = density.breakpoints(a);
    return d;
}

double Domain::measure(const MeasurableSet& A, const QuadratureConfig& cfg) const {
    const MeasurableSet inside = A.intersect(box);
    if (density.is_constant()) return density.constant_value() * inside.volume();
    auto r = integrate_set([&](const Point& s) { return check_density(density(s), s); }, inside, 0.0, cfg, breaks);
    if (!r.converged) throw QuadratureFailure("control measure of a set", r.error_estimate);
    return r.value;
}

std::vector<Point> Domain::probe_points(int per_axis) const {
    std::vector<Point> out;
    const int d = dim();
    const int total = d == 1 ? per_axis : per_axis * per_axis;
    for (int k = 0; k < total; ++k) {
        Point s(d);
        int rest = k;
        for (int a = 0; a < d; ++a) {
            const int i = rest % per_axis;
            rest /= per_axis;
            s[a] = box.sides[a].lo + (i + 0.5) / per_axis * box.sides[a].length();
        }
        out.push_back(std::move(s));
    }
    return out;
}

LevyKernel LevyKernel::zero(int m) { return constant(LevyMeasure(m)); }

LevyKernel LevyKernel::constant(LevyMeasure phi) {
    LevyKernel k;
    k.m_ = phi.dim();
    k.constant_ = std::move(phi);
    return k;
}

LevyKernel LevyKernel::radial(ScalarFn alpha, ScalarFn coeff, bool symmetric) {
    if (alpha.is_constant() && coeff.is_constant())
        return constant(LevyMeasure::radial(alpha.constant_value(), coeff.constant_value(), symmetric));
    return custom(1, [alpha, coeff, symmetric](const Point& s) { return LevyMeasure::radial(alpha(s), coeff(s), symmetric); });
}

LevyKernel LevyKernel::polar(std::vector<Vec> directions, std::vector<ScalarFn> weights, ScalarFn alpha, ScalarFn coeff) {
    if (directions.empty() || directions.size() != weights.size())
        throw DimensionMismatch("polar kernel: directions and weights differ in length");
    const int m = static_cast<int>(directions.front().size());
    auto build = [directions, weights, alpha, coeff](const Point& s) {
        std::vector<double> w;
        for (const auto& f : weights) w.push_back(f(s));
        return LevyMeasure::polar(directions, w, alpha(s), coeff(s));
    };
    bool all_constant = alpha.is_constant() && coeff.is_constant();
    for (const auto& f : weights) all_constant = all_constant && f.is_constant();
    if (all_constant) return constant(build(Point()));
    return custom(m, build);
}

LevyKernel LevyKernel::atoms(std::vector<Vec> points, std::vector<ScalarFn> masses) {
    if (points.empty() || points.size() != masses.size())
        throw DimensionMismatch("atom kernel: points and masses differ in length");
    const int m = static_cast<int>(points.front().size());
    auto build = [points, masses](const Point& s) {
        std::vector<double> w;
        for (const auto& f : masses) w.push_back(f(s));
        return LevyMeasure::atoms(points, w);
    };
    bool all_constant = true;
    for (const auto& f : masses) all_constant = all_constant && f.is_constant();
    if (all_constant) return constant(build(Point()));
    return custom(m, build);
}

LevyKernel LevyKernel::sum(std::vector<LevyKernel> terms) {
    if (terms.empty()) throw DimensionMismatch("sum of no kernels has no dimension");
    const int m = terms.front().dim();
    bool all_constant = true;
    for (const auto& t : terms) {
        if (t.dim() != m) throw DimensionMismatch("kernel sum: dimensions differ");
        all_constant = all_constant && t.is_constant();
    }
    auto build = [terms](const Point& s) {
        std::vector<LevyMeasure> ms;
        for (const auto& t : terms) ms.push_back(t.at(s));
        return LevyMeasure::sum(std::move(ms));
    };
    if (all_constant) return constant(build(Point()));
    return custom(m, build);
}

LevyKernel LevyKernel::custom(int m, std::function<LevyMeasure(const Point&)> at) {
    if (m < 1) throw DimensionMismatch("kernel dimension must be positive");
    LevyKernel k;
    k.m_ = m;
    k.fn_ = std::move(at);
    return k;
}

LevyMeasure LevyKernel::at(const Point& s) const {
    if (constant_) return *constant_;
    LevyMeasure phi = fn_(s);
    if (phi.dim() != m_) throw DimensionMismatch("kernel returned a measure of wrong dimension");
    return phi;
}

LevyKernel LevyKernel::scaled_by(ScalarFn c) const {
    if (is_zero()) return *this;
    if (constant_ && c.is_constant()) return constant(constant_->scaled(c.constant_value()));
    const LevyKernel self = *this;
    return custom(m_, [self, c](const Point& s) { return self.at(s).scaled(c(s)); });
}

LevyKernel LevyKernel::pushforward(const Mat& R) const {
    if (R.cols() != m_) throw DimensionMismatch("kernel pushforward: map has wrong dimension");
    if (constant_) return constant(constant_->pushforward(R));
    const LevyKernel self = *this;
    return custom(static_cast<int>(R.rows()), [self, R](const Point& s) { return self.at(s).pushforward(R); });
}

Mat IsrmSpec::beta_at(const Point& s) const {
    Mat B = beta(s);
    if (B.rows() != m || B.cols() != m) throw DimensionMismatch("beta(s) must be m x m");
    const double adjusted = project_psd(B);
    if (adjusted > 1e-8 && !beta_warned->exchange(true))
        warn("beta(s) adjusted to a symmetric PSD matrix by " + std::to_string(adjusted) + " at " + point_text(s));
    return B;
}

void IsrmSpec::validate(int per_axis, const QuadratureConfig& cfg) const {
    if (m < 1) throw SpecError("state dimension must be positive");
    if (rho.dim() != m) throw SpecError("Levy kernel dimension differs from m");
    for (const auto& s : domain.probe_points(per_axis)) {
        check_density(domain.density(s), s);
        const Vec a = alpha(s);
        if (a.size() != m || !a.allFinite()) throw SpecError("alpha(s) must be a finite m-vector at " + point_text(s));
        const Mat B = beta(s);
        if (B.rows() != m || B.cols() != m || !B.allFinite())
            throw SpecError("beta(s) must be a finite m x m matrix at " + point_text(s));
        beta_at(s);
        const double q = min_quadratic_mass(rho.at(s), cfg);
        if (q > 1.0 + 1e-8)
            throw SpecError("int min{1,|x|^2} rho(s,dx) = " + std::to_string(q) + " exceeds 1 at " + point_text(s));
    }
}

IsrmSpec make_spec(int m, Domain domain, VecFn alpha, MatFn beta, LevyKernel rho) {
    IsrmSpec spec;
    spec.m = m;
    spec.domain = std::move(domain);
    spec.alpha = alpha.defined() ? std::move(alpha) : VecFn(Vec(Vec::Zero(m)));
    spec.beta = beta.defined() ? std::move(beta) : MatFn(Mat(Mat::Zero(m, m)));
    spec.rho = std::move(rho);
    return spec;
}

cplx k_m(const IsrmSpec& spec, const Vec& t, const Point& s, const QuadratureConfig& cfg) {
    if (t.size() != spec.m) throw DimensionMismatch("k_m: t has wrong dimension");
    if (t.isZero(0.0)) return 0.0;
    cplx k = 0.0;
    if (!spec.alpha_is_zero()) k += cplx(0.0, spec.alpha(s).dot(t));
    if (!spec.beta_is_zero()) k -= 0.5 * t.dot(spec.beta_at(s) * t);
    if (!spec.rho.is_zero()) k += compensated_exp_integral(spec.rho.at(s), t, cfg);
    return k;
}

double control_density(const IsrmSpec& spec, const Point& s, const QuadratureConfig& cfg) {
    double c = 0.0;
    if (!spec.alpha_is_zero()) c += spec.alpha(s).norm();
    if (!spec.beta_is_zero()) c += spec.beta_at(s).trace();
    if (!spec.rho.is_zero()) c += min_quadratic_mass(spec.rho.at(s), cfg);
    return c;
}

IdTriplet triplet_of_set(const IsrmSpec& spec, const MeasurableSet& A, const QuadratureConfig& cfg) {
    const int m = spec.m;
    if (!A.boxes().empty() && A.dim() != spec.domain.dim()) throw DimensionMismatch("set and domain dimensions differ");
    const MeasurableSet inside = A.intersect(spec.domain.box);
    const double lambda = spec.domain.measure(inside, cfg);
    if (inside.empty() || lambda == 0.0) return IdTriplet::zero(m);
    const auto& w = spec.domain.density;
    const Breakpoints& br = spec.domain.breaks;

    Vec gamma = Vec::Zero(m);
    if (spec.alpha.is_constant()) {
        gamma = spec.alpha.constant_value() * lambda;
    } else {
        auto r = integrate_set([&](const Point& s) -> Vec { return spec.alpha(s) * w(s); }, inside, Vec(Vec::Zero(m)),
                               cfg, br);
        if (!r.converged) throw QuadratureFailure("drift of a set", r.error_estimate);
        gamma = r.value;
    }

    Mat Q = Mat::Zero(m, m);
    if (spec.beta.is_constant()) {
        Q = spec.beta_at(Point()) * lambda;
    } else {
        auto r = integrate_set([&](const Point& s) -> Mat { return spec.beta_at(s) * w(s); }, inside,
                               Mat(Mat::Zero(m, m)), cfg, br);
        if (!r.converged) throw QuadratureFailure("Gaussian part of a set", r.error_estimate);
        Q = r.value;
    }
    project_psd(Q);

    LevyMeasure phi(m);
    if (spec.rho.is_constant()) {
        phi = spec.rho.constant_value().scaled(lambda);
    } else {
        auto k = std::make_shared<MixtureKernel>();
        k->dim = m;
        k->boxes = inside.boxes();
        k->breaks = br;
        k->weight = [w](const Point& s) { return w(s); };
        k->at = [rho = spec.rho](const Point& s) { return rho.at(s); };
        k->singular = spec.domain.singular;
        k->cfg = cfg;
        phi = LevyMeasure::mixture(k);
    }
    return IdTriplet(gamma, Q, phi);
}

IsrmSpec normalize(const IsrmSpec& spec, const QuadratureConfig& cfg) {
    const bool constant = spec.alpha.is_constant() && spec.beta.is_constant() && spec.rho.is_constant();
    bool any_positive = false;
    for (const auto& s : spec.domain.probe_points()) {
        const double c = control_density(spec, s, cfg);
        if (!std::isfinite(c)) throw DegenerateSpec("control density is not finite at " + point_text(s));
        any_positive = any_positive || c > 0.0;
    }
    if (!any_positive) throw DegenerateSpec("control density vanishes: the spec carries no characteristics");

    IsrmSpec out = spec;
    if (constant) {
        const double c = control_density(spec, Point(), cfg);
        if (c == 1.0) return out;
        const double inv = 1.0 / c;
        const auto w = spec.domain.density;
        out.domain.density = w.is_constant() ? ScalarFn(w.constant_value() * c)
                                             : ScalarFn(std::function<double(const Point&)>(
                                                   [w, c](const Point& s) { return w(s) * c; }));
        out.alpha = VecFn(Vec(spec.alpha.constant_value() * inv));
        out.beta = MatFn(Mat(spec.beta.constant_value() * inv));
        out.rho = spec.rho.scaled_by(ScalarFn(inv));
        return out;
    }
    auto c = [spec, cfg](const Point& s) { return control_density(spec, s, cfg); };
    auto inv = [c](const Point& s) {
        const double v = c(s);
        return v > 0.0 ? 1.0 / v : 0.0;
    };
    const auto w = spec.domain.density;
    out.domain.density = ScalarFn(std::function<double(const Point&)>([w, c](const Point& s) { return w(s) * c(s); }));
    const auto a = spec.alpha;
    const auto b = spec.beta;
    out.alpha = VecFn(std::function<Vec(const Point&)>([a, inv](const Point& s) -> Vec { return a(s) * inv(s); }));
    out.beta = MatFn(std::function<Mat(const Point&)>([b, inv](const Point& s) -> Mat { return b(s) * inv(s); }));
    out.rho = spec.rho.scaled_by(ScalarFn(std::function<double(const Point&)>(inv)));
    return out;
}

double mu_constant(const IdTriplet& mu, const QuadratureConfig& cfg) {
    return mu.gamma.norm() + mu.Q.trace() + min_quadratic_mass(mu.levy, cfg);
}

IsrmSpec from_nu_mu(const Domain& nu, const IdTriplet& mu, const QuadratureConfig& cfg) {
    const double C = mu_constant(mu, cfg);
    if (!(C > 0.0)) throw PointMassAtZero("mu is the point mass at zero (C_mu = 0)");
    Domain d = nu;
    const auto w = nu.density;
    d.density = w.is_constant() ? ScalarFn(w.constant_value() * C)
                                : ScalarFn(std::function<double(const Point&)>([w, C](const Point& s) { return w(s) * C; }));
    auto spec = make_spec(mu.dim(), std::move(d), VecFn(Vec(mu.gamma / C)), MatFn(Mat(mu.Q / C)),
                          LevyKernel::constant(mu.levy.scaled(1.0 / C)));
    spec.note = "nu_mu: C_mu = " + std::to_string(C);
    return spec;
}

namespace {

/// -Re int (e^{irx} - 1 - irx/(1+x^2)) |x|^(-a-1) dx over both half-lines at t = 1,
/// by radial quadrature (independent of the closed form).
double symmetric_stable_integral_numeric(double a, const QuadratureConfig& cfg) {
    RadialIntegrand h;
    h.full = [](double r) { return compensated_exp_kernel(1.0, r); };
    h.tail_smooth = [](double r) { return cplx(-1.0, -r / (1.0 + r * r)); };
    h.waves = {RadialWave{1.0, 1.0}};
    const auto q = integrate_radial(h, a, 1.0, cfg.tightened(100.0));
    if (!q.converged) throw QuadratureFailure("multistable density self-check", q.error_estimate);
    return -2.0 * q.value.real();
}

}  // namespace

IsrmSpec multistable(const Domain& domain, const Expr& alpha, const QuadratureConfig& cfg) {
    if (alpha.arity() > domain.dim()) throw SpecError("alpha(s) uses a coordinate beyond the domain dimension");
    Domain d = domain;
    merge_breakpoints(d.breaks, [&] {
        Breakpoints b(d.dim());
        for (int a = 0; a < d.dim(); ++a) b[a] = alpha.breakpoints(a);
        return b;
    }());
    return multistable(d, scalar_fn(alpha), cfg);
}

IsrmSpec multistable(const Domain& domain, ScalarFn alpha, const QuadratureConfig& cfg) {
    auto probes = domain.probe_points(9);
    for (const auto& s : probes) {
        const double a = alpha(s);
        if (!(a > 0.0 && a < 2.0))
            throw IndexOutOfRange("stability index " + std::to_string(a) + " outside (0, 2) at " + point_text(s));
    }
    auto theta = [alpha](const Point& s) {
        const double a = alpha(s);
        return a * (2.0 - a) / 4.0;
    };
    // eta(s) from int (e^{itx} - 1 - itx/(1+x^2)) |x|^(-a-1) dx * eta = -|t|^a.
    auto eta = [alpha](const Point& s) { return 1.0 / (2.0 * stable_cos_constant(alpha(s))); };

    // Solve w(s) theta(s) I(alpha(s)) = -1 numerically at the probes and see
    // which closed form the solution follows.
    if (alpha.is_constant()) probes.resize(1);
    bool eta_over_theta = true, inverse_product = true;
    for (const auto& s : probes) {
        const double solved = 1.0 / (theta(s) * symmetric_stable_integral_numeric(alpha(s), cfg));
        const double c1 = eta(s) / theta(s);
        const double c2 = 1.0 / (theta(s) * eta(s));
        eta_over_theta = eta_over_theta && std::abs(solved - c1) <= 1e-7 * solved;
        inverse_product = inverse_product && std::abs(solved - c2) <= 1e-7 * solved;
    }
    if (!eta_over_theta && !inverse_product)
        throw Error("multistable: numerically solved control density matches no closed form");

    auto ratio = [eta, theta, eta_over_theta](const Point& s) {
        return eta_over_theta ? eta(s) / theta(s) : 1.0 / (theta(s) * eta(s));
    };
    Domain d = domain;
    const auto w0 = domain.density;
    if (alpha.is_constant() && w0.is_constant())
        d.density = ScalarFn(w0.constant_value() * ratio(Point()));
    else
        d.density = ScalarFn(std::function<double(const Point&)>([w0, ratio](const Point& s) { return w0(s) * ratio(s); }));

    ScalarFn th = alpha.is_constant() ? ScalarFn(theta(Point()))
                                      : ScalarFn(std::function<double(const Point&)>(theta));
    auto spec = make_spec(1, std::move(d), {}, {}, LevyKernel::radial(alpha, th, true));
    spec.note = eta_over_theta ? "multistable: control density eta/theta" : "multistable: control density 1/(theta eta)";

    // Self-check against the target -|t|^alpha(s) w0(s) with the kernel integral done by quadrature.
    auto checks = domain.probe_points(5);
    if (alpha.is_constant() && w0.is_constant()) checks.resize(1);
    for (const auto& s : checks)
        for (double t : {0.5, 1.0, 2.0}) {
            const double a = alpha(s);
            const double k = -th(s) * std::pow(t, a) * symmetric_stable_integral_numeric(a, cfg);
            const double got = spec.domain.density(s) * k;
            const double want = -std::pow(t, a) * w0(s);
            if (std::abs(got - want) > 1e-6 * std::abs(want))
                throw Error("multistable: self-check failed at " + point_text(s));
        }
    return spec;
}

IsrmSpec gaussian(const Domain& domain, int m, std::optional<Mat> B) {
    Mat b = B ? *B : Mat(Mat::Identity(m, m));
    if (b.rows() != m || b.cols() != m) throw DimensionMismatch("gaussian: beta must be m x m");
    auto spec = make_spec(m, domain, {}, MatFn(b), LevyKernel::zero(m));
    spec.note = "gaussian";
    return spec;
}

IsrmSpec sas(const Domain& domain, double alpha, const QuadratureConfig& cfg) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw IndexOutOfRange("stability index outside (0, 2)");
    return multistable(domain, ScalarFn(alpha), cfg);
}

}  // namespace isrm
