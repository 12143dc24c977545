#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "isrm/cli_commands.hpp"
#include "isrm/errors.hpp"
#include "isrm/io.hpp"

using namespace isrm;

namespace {

const std::string kFix = ISRM_FIXTURES;

std::string fx(const std::string& name) { return kFix + "/" + name; }

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
        rows.push_back(r);
    }
    return rows;
}

std::string tmp(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("isrm_cli_" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("check exit codes and report") {
    CHECK(run({"check", "--spec", fx("sas_15.json"), "--field", fx("power_05.json")}).code == 0);

    const auto report = tmp("report.json");
    const auto r = run({"check", "--spec", fx("sas_15.json"), "--field", fx("power_08.json"), "--report", report});
    CHECK(r.code == 2);
    const auto j = nlohmann::json::parse(slurp(report));
    CHECK(j["schema_version"] == 1);
    CHECK(j["verdict"] == "divergent");
    REQUIRE(j["witness"].size() == 1);
    CHECK(j["witness"][0] == "levy_mass");
    CHECK(j["levy_mass_sequence"].size() > 3);

    CHECK(run({"check", "--spec", fx("gaussian_2d.json"), "--field", fx("diag_1_s.json")}).code == 0);
}

TEST_CASE("usage, I/O and schema errors exit 1") {
    CHECK(run({"check", "--spec", fx("malformed.json"), "--field", fx("one_1d.json")}).code == 1);
    CHECK(run({"check", "--spec", fx("no_such_file.json"), "--field", fx("one_1d.json")}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"check", "--spec", fx("sas_15.json")}).code == 1);
    // Field size must match the spec dimension.
    CHECK(run({"check", "--spec", fx("gaussian_2d.json"), "--field", fx("one_1d.json")}).code == 1);

    const auto bad = tmp("bad_spec.json");
    write_file(bad, R"({"schema_version": 2, "kind": "gaussian", "m": 1, "domain": {"bounds": [[0, 1]]}})");
    CHECK(run({"check", "--spec", bad, "--field", fx("one_1d.json")}).code == 1);
    write_file(bad, R"({"schema_version": 1, "kind": "sas", "alpha": 2.5, "domain": {"bounds": [[0, 1]]}})");
    CHECK(run({"check", "--spec", bad, "--field", fx("one_1d.json")}).code == 1);
    write_file(bad, R"({"schema_version": 1, "m": 1, "domain": {"bounds": [[0, 1]]}, "alpha": ["s1 +"]})");
    const auto r = run({"check", "--spec", bad, "--field", fx("one_1d.json")});
    CHECK(r.code == 1);
    CHECK(!r.err.empty());
    write_file(bad, R"({"schema_version": 1, "m": 1, "domain": {"bounds": [[0, 1]]}, "rho": {"kind": "nope"}})");
    CHECK(run({"check", "--spec", bad, "--field", fx("one_1d.json")}).code == 1);
}

TEST_CASE("cf closed forms") {
    SUBCASE("Gaussian, identity field on a set") {
        const auto r = run({"cf", "--spec", fx("gaussian_2d.json"), "--field", fx("identity_2d.json"), "--grid", "-2:2:5",
                            "--set", "0:0.5"});
        REQUIRE(r.code == 0);
        CHECK(r.out.rfind("t1,t2,re,im\n", 0) == 0);
        const auto rows = csv_rows(r.out);
        CHECK(rows.size() == 25);
        for (const auto& row : rows) {
            const double n2 = row[0] * row[0] + row[1] * row[1];
            CHECK(row[2] == doctest::Approx(-0.25 * n2).epsilon(1e-12));
            CHECK(row[3] == 0.0);
        }
    }
    SUBCASE("multistable, constant index") {
        const auto r = run({"cf", "--spec", fx("multistable_08.json"), "--field", fx("one_1d.json"), "--t", "0;0.5;1;2"});
        REQUIRE(r.code == 0);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0][1] == 0.0);
        CHECK(rows[0][2] == 0.0);
        for (std::size_t k = 1; k < 4; ++k)
            CHECK(rows[k][1] == doctest::Approx(-std::pow(rows[k][0], 0.8)).epsilon(1e-9));
    }
    SUBCASE("divergent field is refused, --force does not override it") {
        CHECK(run({"cf", "--spec", fx("sas_15.json"), "--field", fx("power_08.json"), "--t", "1"}).code == 2);
        CHECK(run({"cf", "--spec", fx("sas_15.json"), "--field", fx("power_08.json"), "--t", "1", "--force"}).code == 2);
    }
    SUBCASE("--force adds a residual column") {
        const auto r = run({"cf", "--spec", fx("sas_15.json"), "--field", fx("power_05.json"), "--t", "1", "--force"});
        REQUIRE(r.code == 0);
        CHECK(r.out.rfind("t1,re,im,abs_err\n", 0) == 0);
        // -int_0^1 (s^-0.5)^1.5 ds = -4.
        const auto rows = csv_rows(r.out);
        CHECK(rows[0][1] == doctest::Approx(-4.0).epsilon(1e-6));
        CHECK(rows[0][3] >= 0.0);
    }
    SUBCASE("complex field on the doubled spec") {
        const auto r = run({"cf", "--spec", fx("gaussian_2d.json"), "--field", fx("complex_1.json"), "--t", "0.5,-1"});
        REQUIRE(r.code == 0);
        // |assoc(f)^T t|^2 = (s^2 + (1 - s)^2) |t|^2, integrated: 2/3.
        CHECK(csv_rows(r.out)[0][2] == doctest::Approx(-0.5 * 1.25 * 2.0 / 3.0).epsilon(1e-10));
    }
}

TEST_CASE("sample") {
    const auto a = tmp("a.csv"), b = tmp("b.csv");
    const std::vector<std::string> base = {"sample", "--spec", fx("compound_poisson.json"), "--field",
                                           fx("simple_grid.json"), "-n", "10", "--seed", "7", "--out"};
    auto args = base;
    args.push_back(a);
    const auto r = run(args);
    REQUIRE(r.code == 0);
    CHECK(r.err.find("truncation bound") != std::string::npos);
    args.back() = b;
    REQUIRE(run(args).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(csv_rows(slurp(a)).size() == 10);

    SUBCASE("Gaussian column means") {
        const int n = 20000;
        const auto g = run({"sample", "--spec", fx("gaussian_2d.json"), "--field", fx("diag_1_s.json"), "-n",
                            std::to_string(n), "--seed", "3"});
        REQUIRE(g.code == 0);
        const auto rows = csv_rows(g.out);
        REQUIRE(rows.size() == static_cast<std::size_t>(n));
        // Variances 1 and about 1/3.
        const double sd[2] = {1.0, std::sqrt(1.0 / 3.0)};
        for (int c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (const auto& row : rows) mean += row[c];
            mean /= n;
            CHECK(std::abs(mean) < 4.0 * sd[c] / std::sqrt(double(n)));
        }
    }
    SUBCASE("zero field") {
        const auto z = run({"sample", "--spec", fx("gaussian_1d.json"), "--field", fx("zero_1d.json"), "-n", "5"});
        REQUIRE(z.code == 0);
        for (const auto& row : csv_rows(z.out)) CHECK(row[0] == 0.0);
    }
    SUBCASE("M(A) without a field") {
        const auto m = run({"sample", "--spec", fx("compound_poisson.json"), "--set", "0:0.5", "-n", "50", "--seed", "1"});
        REQUIRE(m.code == 0);
        CHECK(csv_rows(m.out).size() == 50);
    }
    SUBCASE("triplet route") {
        const auto t = run({"sample", "--spec", fx("sas_15.json"), "--field", fx("one_1d.json"), "-n", "20", "--route",
                            "triplet"});
        CHECK(t.code == 0);
        CHECK(run({"sample", "--spec", fx("sas_15.json"), "--field", fx("one_1d.json"), "--route", "other"}).code == 1);
    }
    SUBCASE("refused fields") {
        CHECK(run({"sample", "--spec", fx("sas_15.json"), "--field", fx("power_08.json"), "-n", "5"}).code == 2);
        CHECK(run({"sample", "--spec", fx("multistable_var.json"), "--field", fx("power_05.json"), "-n", "5", "--route",
                   "triplet"})
                  .code == 4);
        CHECK(run({"sample", "--spec", fx("gaussian_1d.json"), "--field", fx("one_1d.json"), "-n", "0"}).code == 1);
    }
}

TEST_CASE("sample is independent of the thread count") {
    const auto a = tmp("t1.csv"), b = tmp("t4.csv");
    const std::vector<std::string> args = {"sample", "--spec", fx("multistable_var.json"), "--field", fx("one_1d.json"),
                                           "-n", "10000", "--seed", "11", "--eps", "0.02", "--out"};
    auto with = [&](const char* threads, const std::string& path) {
        setenv("ISRM_THREADS", threads, 1);
        auto a2 = args;
        a2.push_back(path);
        return run(a2).code;
    };
    REQUIRE(with("1", a) == 0);
    REQUIRE(with("4", b) == 0);
    unsetenv("ISRM_THREADS");
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("validate") {
    const auto r = run({"validate", "--spec", fx("gaussian_2d.json"), "--field", fx("diag_1_s.json"), "-n", "20000"});
    CHECK(r.code == 0);
    CHECK(csv_rows(r.out).size() == 16);
    CHECK(r.err.find("PASS") != std::string::npos);

    CHECK(run({"validate", "--spec", fx("gaussian_2d.json"), "--field", fx("diag_1_s.json"), "-n", "20000",
               "--tol-scale", "0.01"})
              .code == 5);
    CHECK(run({"validate", "--spec", fx("sas_15.json"), "--field", fx("power_08.json"), "-n", "100"}).code == 2);

    const auto report = tmp("validation.json");
    const auto c = run({"validate", "--spec", fx("multistable_10.json"), "--field", fx("one_1d.json"), "-n", "20000",
                        "--grid", "-2:2:5", "--report", report});
    CHECK(c.code == 0);
    const auto j = nlohmann::json::parse(slurp(report));
    CHECK(j["pass"] == true);
    CHECK(j["probes"].size() == 5);
}

TEST_CASE("parsers") {
    const auto A = parse_set("0:0.5x0:1 + 0.5:1x0:0.5", 2);
    CHECK(A.boxes().size() == 2);
    CHECK(A.volume() == doctest::Approx(0.75));
    CHECK_THROWS_AS(parse_set("0:1", 2), SpecError);
    CHECK_THROWS_AS(parse_set("1:0", 1), SpecError);
    CHECK_THROWS_AS(parse_set("0:0.6+0.5:1", 1), OverlappingPieces);

    const auto g = parse_grid({"-1:1:3", "0:1:2"}, 2);
    REQUIRE(g.size() == 6);
    CHECK(g[0] == (Vec(2) << -1, 0).finished());
    CHECK(g[5] == (Vec(2) << 1, 1).finished());
    CHECK(parse_grid({"2:3:1"}, 2).size() == 1);
    CHECK_THROWS_AS(parse_grid({"0:1:0"}, 1), SpecError);
    CHECK_THROWS_AS(parse_grid({"0:1"}, 1), SpecError);

    const auto p = parse_points("0.5,1;2,0", 2);
    REQUIRE(p.size() == 2);
    CHECK(p[1] == (Vec(2) << 2, 0).finished());
    CHECK_THROWS_AS(parse_points("1,2,3", 2), SpecError);
    CHECK_THROWS_AS(parse_vector("1,x", 2), SpecError);

    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("generic spec document") {
    const auto spec = load_spec(fx("generic_2d.json"));
    CHECK(spec.m == 2);
    CHECK(control_density(spec, Point::Constant(1, 0.5)) > 0.0);
    const auto r = run({"cf", "--spec", fx("generic_2d.json"), "--field", fx("identity_2d.json"), "--t", "1,-0.5;-1,0.5"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    // log-CF at -t is the conjugate.
    CHECK(rows[0][2] == doctest::Approx(rows[1][2]).epsilon(1e-12));
    CHECK(rows[0][3] == doctest::Approx(-rows[1][3]).epsilon(1e-12));
}
