#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <string>

#include "isrm/errors.hpp"
#include "isrm/simulation.hpp"

using namespace isrm;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}
Mat m1(double a) { return Mat::Constant(1, 1, a); }
Box unit1() { return Box({Interval{0.0, 1.0}}); }
MeasurableSet set1(double lo, double hi) { return MeasurableSet::single(Box({Interval{lo, hi}})); }

IsrmSpec compound_poisson1() {
    IdTriplet mu(v1(0.1), m1(0.0), LevyMeasure::atoms({v1(1.0), v1(-0.5)}, {1.5, 0.8}));
    return from_nu_mu(Domain::lebesgue(unit1()), mu);
}

SamplePlan plan(std::size_t n, std::uint64_t seed = 1, int cells = 64) {
    SamplePlan p;
    p.n_samples = n;
    p.seed = seed;
    p.partition = {cells};
    return p;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean(), mb = b.mean();
    const Eigen::VectorXd ca = a.array() - ma, cb = b.array() - mb;
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

Mat covariance(const Mat& x) {
    const Mat c = x.rowwise() - x.colwise().mean();
    return c.transpose() * c / double(x.rows() - 1);
}
}  // namespace

TEST_CASE("empirical characteristic function") {
    Mat one(1, 2);
    one << 0.3, -1.2;
    const Vec t = v2(2.0, 0.5);
    CHECK(std::abs(empirical_cf(one, t) - std::exp(cplx(0.0, one.row(0).dot(t)))) < 1e-15);
    CHECK(empirical_cf(one, v2(0, 0)) == cplx(1.0, 0.0));

    const std::size_t n = 100000;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    Mat x(n, 1);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) = z(rng);
    CHECK(std::abs(empirical_cf(x, v1(1.0)) - std::exp(-0.5)) < 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(empirical_cf(x, v1(7.0))) <= 1.0);
    CHECK_THROWS_AS(empirical_cf(Mat(0, 1), v1(1.0)), Error);
}

TEST_CASE("grid refinement") {
    const auto dom = Domain::lebesgue(unit1());
    const auto g = build_grid(dom, {set1(0.1, 0.33)}, {}, plan(1, 1, 4));
    CHECK(g.lines[0] == std::vector<double>{0.0, 0.1, 0.25, 0.33, 0.5, 0.75, 1.0});
    CHECK(g.cells.size() == 6);

    std::vector<std::string> warnings;
    set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
    const auto snapped = build_grid(dom, {set1(0.25 + 1e-11, 0.5)}, {}, plan(1, 1, 4));
    set_warning_handler(nullptr);
    CHECK(snapped.lines[0].size() == 5);
    CHECK(warnings.size() == 1);

    CHECK_THROWS_AS(build_grid(dom, {set1(0.5, 1.2)}, {}, plan(1, 1, 4)), PartitionMismatch);

    const auto plane = Domain::lebesgue(Box({Interval{0, 1}, Interval{0, 2}}));
    SamplePlan p2 = plan(1);
    p2.partition = {2, 3};
    CHECK(build_grid(plane, {}, {}, p2).cells.size() == 6);

    SamplePlan bad = plan(0);
    CHECK_THROWS_AS(bad.validate(1), Error);
    bad = plan(10);
    bad.eps = 0.0;
    CHECK_THROWS_AS(bad.validate(1), Error);
}

TEST_CASE("sampling sets jointly") {
    const auto cp = compound_poisson1();
    const std::size_t n = 40000;
    const auto A = set1(0.0, 0.4), B = set1(0.4, 1.0), AB = set1(0.0, 1.0);
    const auto draws = sample_measure(cp, {A, B, AB}, plan(n, 5, 16));
    CHECK(std::abs(correlation(draws[0].col(0), draws[1].col(0))) < 4.0 / std::sqrt(double(n)));
    CHECK(((draws[0] + draws[1]) - draws[2]).cwiseAbs().maxCoeff() < 1e-12);

    // Nested sets: the increment is independent of the smaller set.
    const auto nested = sample_measure(cp, {set1(0.0, 0.3), set1(0.0, 0.8)}, plan(n, 9, 16));
    const Mat inc = nested[1] - nested[0];
    for (double s : {0.7, 1.9}) {
        Mat both(n, 2);
        both << nested[0], inc;
        const cplx joint = empirical_cf(both, v2(s, -s));
        const cplx prod = empirical_cf(nested[0], v1(s)) * empirical_cf(inc, v1(-s));
        CHECK(std::abs(joint - prod) < 6.0 / std::sqrt(double(n)));
    }

    // Marginal law of M(A) against its triplet.
    const auto trip = triplet_of_set(cp, A);
    for (double s : {0.5, 2.0})
        CHECK(std::abs(empirical_cf(draws[0], v1(s)) - std::exp(log_cf(trip, v1(s)))) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("samples do not depend on the thread count") {
    const auto ms = sas(Domain::lebesgue(unit1()), 1.3);
    const auto f = MatrixField::expression({{Expr::parse("1 + s1")}}, 1);
    setenv("ISRM_THREADS", "1", 1);
    const Mat a = sample_integral_partition(ms, f, plan(9000, 11, 8));
    setenv("ISRM_THREADS", "4", 1);
    const Mat b = sample_integral_partition(ms, f, plan(9000, 11, 8));
    unsetenv("ISRM_THREADS");
    CHECK(a == b);
    const Mat c = sample_integral_partition(ms, f, plan(9000, 12, 8));
    CHECK(a != c);
}

TEST_CASE("partition route") {
    const auto gauss = gaussian(Domain::lebesgue(unit1()), 2);
    const auto f =
        MatrixField::expression({{Expr::parse("1"), Expr::parse("0")}, {Expr::parse("0"), Expr::parse("s1")}}, 1);
    const Mat x = sample_integral_partition(gauss, f, plan(100000, 2));
    const Mat cov = covariance(x);
    CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(cov(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(0.05));
    CHECK(std::abs(cov(0, 1)) < 0.02);

    // A grid-aligned simple field is reproduced exactly: the partition gap vanishes.
    const auto cp = compound_poisson1();
    const auto simple = MatrixField::simple({{m1(2.0), set1(0.0, 0.25)}, {m1(-1.0), set1(0.25, 1.0)}});
    const auto rep = validate(cp, simple, plan(20000, 4, 8), default_probe_grid(1));
    for (const auto& p : rep.probes) CHECK(p.partition < 1e-10);
    CHECK(rep.pass);

    // Partition gap shrinks as cells shrink.
    const auto ms = sas(Domain::lebesgue(unit1()), 1.5);
    const auto smooth = MatrixField::expression({{Expr::parse("exp(s1)")}}, 1);
    double last = std::numeric_limits<double>::infinity();
    for (int cells : {2, 8, 32}) {
        const auto r = validate(ms, smooth, plan(200, 1, cells), {v1(1.0)});
        CHECK(r.probes[0].partition < last);
        last = r.probes[0].partition;
    }
}

TEST_CASE("triplet route") {
    const auto gauss = gaussian(Domain::lebesgue(unit1()), 2);
    const auto f =
        MatrixField::expression({{Expr::parse("1"), Expr::parse("s1")}, {Expr::parse("0"), Expr::parse("2")}}, 1);
    const Mat Q = integral_triplet(gauss, f).triplet.Q;
    const Mat x = sample_integral_triplet(gauss, f, plan(100000, 8));
    CHECK((covariance(x) - Q).cwiseAbs().maxCoeff() < 0.05 * Q.cwiseAbs().maxCoeff());

    const Mat zero = sample_integral_triplet(gauss, MatrixField::constant(Mat::Zero(2, 2), 1), plan(100, 1));
    CHECK(zero.isZero(0.0));

    // Two routes agree in distribution for a compound-Poisson spec.
    const auto cp = compound_poisson1();
    const auto simple = MatrixField::simple({{m1(1.5), set1(0.0, 0.5)}, {m1(-0.5), set1(0.5, 1.0)}});
    const std::size_t n = 40000;
    const Mat a = sample_integral_partition(cp, simple, plan(n, 21, 8));
    const Mat b = sample_integral_triplet(cp, simple, plan(n, 22));
    for (const auto& t : default_probe_grid(1))
        CHECK(std::abs(empirical_cf(a, t) - empirical_cf(b, t)) < 2 * 3.0 / std::sqrt(double(n)));
}

TEST_CASE("validation reports") {
    const auto gauss = gaussian(Domain::lebesgue(unit1()), 2);
    const auto id = MatrixField::constant(Mat::Identity(2, 2), 1);
    const auto ok = validate(gauss, id, plan(100000, 3), default_probe_grid(2));
    CHECK(ok.pass);
    CHECK(ok.probes.size() == 16);
    for (const auto& p : ok.probes) CHECK(p.band == doctest::Approx(3.0 / std::sqrt(1e5) + p.partition));

    const auto cauchy = sas(Domain::lebesgue(unit1()), 1.0);
    const auto one = MatrixField::constant(m1(1.0), 1);
    const auto c = validate(cauchy, one, plan(100000, 4), default_probe_grid(1));
    CHECK(c.pass);
    for (const auto& p : c.probes) CHECK(std::abs(p.analytic - std::exp(-std::abs(p.t[0]))) < 1e-8);

    ValidationOptions shifted;
    shifted.gamma_shift = v2(1.0, 1.0);
    CHECK_FALSE(validate(gauss, id, plan(100000, 3), default_probe_grid(2), shifted).pass);

    const auto div = validate(sas(Domain::lebesgue(unit1()), 1.5), MatrixField::power_law(0.9, m1(1), v1(0.0)),
                              plan(100), default_probe_grid(1));
    CHECK_FALSE(div.pass);
    CHECK(div.verdict == Verdict::Divergent);
}
