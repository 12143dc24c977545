#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "isrm/errors.hpp"
#include "isrm/id_distribution.hpp"

using namespace isrm;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}
Mat m1(double a) { return Mat::Constant(1, 1, a); }

std::vector<Vec> probes2() {
    return {v2(0.5, 0), v2(-1, 0), v2(0, 2), v2(1.3, -0.7), v2(-2, -2)};
}

IdTriplet mixed2() {
    Mat Q(2, 2);
    Q << 1.0, 0.3, 0.3, 0.5;
    auto phi = LevyMeasure::sum({LevyMeasure::atoms({v2(1, 0), v2(-0.5, 0.5)}, {0.7, 0.4}),
                                 LevyMeasure::polar({v2(1, 1)}, {1.0}, 1.4, 0.3)});
    return IdTriplet(v2(0.2, -0.1), Q, phi);
}

cplx empirical(const Mat& xs, const Vec& t) {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) acc += std::exp(cplx(0.0, xs.row(i).dot(t)));
    return acc / double(xs.rows());
}
}  // namespace

TEST_CASE("log characteristic function") {
    CHECK(log_cf(IdTriplet::zero(3), Vec::Constant(3, 1.7)) == cplx(0.0));
    CHECK(log_cf(IdTriplet(v1(0), m1(1), LevyMeasure(1)), v1(2)) == cplx(-2.0, 0.0));
    const IdTriplet atom(v1(0), m1(0), LevyMeasure::atoms({v1(1)}, {1}));
    CHECK(std::abs(log_cf(atom, v1(M_PI)) - cplx(-2, -M_PI / 2)) < 1e-14);
    for (const auto& t : probes2()) CHECK(log_cf(mixed2(), t).real() <= 0.0);
    CHECK(log_cf(mixed2(), v2(0, 0)) == cplx(0.0));
}

TEST_CASE("triplet validation") {
    Mat bad(2, 2);
    bad << 1, 0, 0, -1;
    CHECK_THROWS_AS(IdTriplet(v2(0, 0), bad, LevyMeasure(2)), Error);
    CHECK_THROWS_AS(IdTriplet(v2(0, 0), Mat::Identity(2, 2), LevyMeasure(1)), DimensionMismatch);
}

TEST_CASE("convolution and scaling") {
    const IdTriplet a = mixed2();
    const IdTriplet z = IdTriplet::zero(2);
    for (const auto& t : probes2()) CHECK(log_cf(convolve(a, z), t) == log_cf(a, t));

    const auto g = convolve(IdTriplet(v1(0), m1(1), LevyMeasure(1)), IdTriplet(v1(0), m1(2), LevyMeasure(1)));
    CHECK(g.Q(0, 0) == 3.0);
    CHECK(g.levy.is_zero());

    const IdTriplet b(v2(1, 1), Mat::Identity(2, 2), LevyMeasure::atoms({v2(0.2, 2)}, {3.0}));
    for (const auto& t : probes2()) {
        CHECK(std::abs(log_cf(convolve(a, b), t) - log_cf(a, t) - log_cf(b, t)) < 1e-12);
        CHECK(std::abs(log_cf(scale(a, 0.3), t) - 0.3 * log_cf(a, t)) < 1e-12);
        const auto half = scale(a, 0.5);
        CHECK(std::abs(log_cf(convolve(half, half), t) - log_cf(a, t)) < 1e-12);
        CHECK(log_cf(scale(a, 1.0), t) == log_cf(a, t));
    }
    const auto unit = scale(IdTriplet(v1(0), m1(4), LevyMeasure(1)), 0.25);
    CHECK(unit.Q(0, 0) == 1.0);
    CHECK_THROWS_AS(convolve(a, IdTriplet::zero(1)), DimensionMismatch);
}

TEST_CASE("linear images") {
    Mat R(2, 2);
    R << 0.4, -1.1, 2.0, 0.3;
    const auto img = linear_image(mixed2(), R);
    for (const auto& t : probes2())
        CHECK(std::abs(log_cf(img, t) - log_cf(mixed2(), Vec(R.transpose() * t))) < 1e-9);
}

TEST_CASE("null convergence diagnostic") {
    std::vector<IdTriplet> zeros(5, IdTriplet::zero(2));
    CHECK(null_convergence_check(zeros).tends_to_point_mass);

    std::vector<IdTriplet> seq;
    for (int n = 1; n <= 50; ++n) seq.emplace_back(v2(1.0 / n, 0), Mat::Zero(2, 2), LevyMeasure(2));
    const auto rep = null_convergence_check(seq, 1e-1);
    for (std::size_t i = 1; i < seq.size(); ++i) CHECK(rep.gamma_norm[i] < rep.gamma_norm[i - 1]);
    CHECK(rep.tends_to_point_mass);

    std::vector<IdTriplet> shifted(4, IdTriplet(v2(1, 0), Mat::Zero(2, 2), LevyMeasure(2)));
    CHECK_FALSE(null_convergence_check(shifted).tends_to_point_mass);
}

TEST_CASE("Gaussian and compound Poisson sampling") {
    const std::size_t n = 100000;
    Mat Q(2, 2);
    Q << 2.0, 0.5, 0.5, 1.0;
    const IdTriplet g(v2(1, -3), Q, LevyMeasure(2));
    const Mat xs = sample(g, n, 11, 1e-3);
    const Vec mean = xs.colwise().mean().transpose();
    CHECK(std::abs(mean(0) - 1) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(mean(1) + 3) < 4 * std::sqrt(1.0 / n));

    // Atom 1 with mass 2: every draw is -1 + (number of jumps).
    const IdTriplet cp(v1(0), m1(0), LevyMeasure::atoms({v1(1)}, {2}));
    const Mat ys = sample(cp, n, 5, 0.5);
    const double count_mean = ys.col(0).mean() + 1.0;
    CHECK(std::abs(count_mean - 2.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(ys(0, 0) + 1.0 - std::round(ys(0, 0) + 1.0)) < 1e-12);
}

TEST_CASE("stable sampling matches the analytic characteristic function") {
    const std::size_t n = 100000;
    const double a = 1.5, c = 0.4, eps = 1e-2;
    const IdTriplet st(v1(0), m1(0), LevyMeasure::radial(a, c));
    const TripletSampler sampler(st, eps);
    const Mat xs = sample(st, n, 99, eps);
    const double k = -std::tgamma(-a) * std::cos(M_PI * a / 2);
    for (double t : {0.5, 1.0}) {
        const cplx exact = std::exp(-2 * c * k * std::pow(t, a));
        const double band = 3 / std::sqrt(double(n)) + 0.5 * t * t * sampler.small_jump_moment();
        CHECK(std::abs(empirical(xs, v1(t)) - exact) <= band);
    }
}

TEST_CASE("one-sided jumps keep the right centre") {
    // Drift correction matters for asymmetric measures.
    const std::size_t n = 100000;
    const IdTriplet tr(v1(0.3), m1(0), LevyMeasure::radial(1.2, 0.5, false));
    const double eps = 1e-3;
    const TripletSampler sampler(tr, eps);
    const Mat xs = sample(tr, n, 3, eps);
    for (double t : {0.5, 1.0, 2.0}) {
        const cplx exact = std::exp(log_cf(tr, v1(t)));
        const double band = 3 / std::sqrt(double(n)) + 0.5 * t * t * sampler.small_jump_moment();
        CHECK(std::abs(empirical(xs, v1(t)) - exact) <= band);
    }
}

TEST_CASE("sampling is reproducible under any thread count") {
    const IdTriplet tr = mixed2();
    setenv("ISRM_THREADS", "1", 1);
    const Mat a = sample(tr, 10000, 42, 1e-2);
    setenv("ISRM_THREADS", "4", 1);
    const Mat b = sample(tr, 10000, 42, 1e-2);
    unsetenv("ISRM_THREADS");
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const Mat c = sample(tr, 10000, 43, 1e-2);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("mixtures are sampled by rejection in the base") {
    auto k = std::make_shared<MixtureKernel>();
    k->dim = 1;
    k->boxes = {Box({Interval{0.0, 1.0}})};
    k->weight = [](const Point& s) { return 1.0 + s(0); };
    k->at = [](const Point& s) { return LevyMeasure::atoms({v1(0.5 + s(0))}, {1.0}); };
    const IdTriplet tr(v1(0), m1(0), LevyMeasure::mixture(k));
    const std::size_t n = 100000;
    const Mat xs = sample(tr, n, 8, 1e-3);
    for (double t : {0.5, 1.0, 2.0}) {
        const cplx exact = std::exp(log_cf(tr, v1(t)));
        CHECK(std::abs(empirical(xs, v1(t)) - exact) <= 3 / std::sqrt(double(n)));
    }
}

TEST_CASE("concentration bound") {
    CHECK(std::abs(concentration_constant(1.0, 1) - (1 - std::sin(1.0))) < 1e-12);
    CHECK(std::abs(1.0 / (2 * concentration_constant(1.0, 1)) - 3.1540) < 1e-4);
    CHECK(concentration_bound([](const Vec&) { return cplx(1.0); }, 0.7, 2) == 0.0);

    // For delta = 2 the infimum sits inside the feasible set: 1 - max_{y >= 4} sin(y)/y.
    double best = 1.0;
    for (double y = 4.0; y < 50.0; y += 1e-5) best = std::min(best, 1 - std::sin(y) / y);
    CHECK(std::abs(concentration_constant(2.0, 1) - best) < 1e-9);

    const double b = concentration_bound([](const Vec& t) { return cplx(std::exp(-0.5 * t.squaredNorm())); }, 1.0, 1);
    CHECK(b >= 0.3173);
    const Mat xs = sample(IdTriplet(v1(0), m1(1), LevyMeasure(1)), 100000, 1, 1e-3);
    const double freq = (xs.col(0).array().abs() >= 1.0).cast<double>().mean();
    CHECK(std::abs(freq - 0.3173) < 4 * std::sqrt(0.3173 * 0.6827 / 100000));
    CHECK(b >= freq);
}
