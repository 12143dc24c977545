#include "isrm/cli_commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "isrm/errors.hpp"
#include "isrm/io.hpp"

namespace isrm {

namespace {

struct Options {
    std::string spec_path;
    std::string field_path;
    double abs_tol = QuadratureConfig{}.abs_tol;
    double rel_tol = QuadratureConfig{}.rel_tol;
    int max_depth = QuadratureConfig{}.max_depth;

    std::string report_path;
    std::string out_path;
    std::string set_text;
    std::vector<std::string> grid;
    std::string points;
    bool force = false;

    std::size_t n = 100000;
    std::uint64_t seed = 0;
    double eps = 1e-3;
    std::vector<int> cells;
    std::string route = "partition";
    double tol_scale = 1.0;
    std::string shift_gamma;
};

QuadratureConfig make_cfg(const Options& o) {
    QuadratureConfig cfg;
    cfg.abs_tol = o.abs_tol;
    cfg.rel_tol = o.rel_tol;
    cfg.max_depth = o.max_depth;
    cfg.validate();
    return cfg;
}

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::Integrable: return kExitOk;
        case Verdict::Divergent: return kExitDivergent;
        case Verdict::Inconclusive: return kExitInconclusive;
    }
    return kExitUsage;
}

/// Complex fields act through their associated real field on the 2m-dimensional spec.
MatrixField as_real(const AnyField& any, const IsrmSpec& spec) {
    if (const auto* c = std::get_if<ComplexMatrixField>(&any)) {
        if (spec.m != 2 * c->m()) throw DimensionMismatch("complex field of size m needs a spec of dimension 2m");
        return associated(*c);
    }
    const auto& f = std::get<MatrixField>(any);
    if (f.m() != spec.m) throw DimensionMismatch("field size does not match the spec dimension");
    return f;
}

struct Loaded {
    IsrmSpec spec;
    std::optional<MatrixField> field;
    std::optional<MeasurableSet> set;
};

Loaded load(const Options& o, const QuadratureConfig& cfg, bool field_required) {
    Loaded l{load_spec(o.spec_path, cfg), std::nullopt, std::nullopt};
    if (!o.field_path.empty())
        l.field = as_real(load_field(o.field_path, l.spec.domain.dim()), l.spec);
    else if (field_required)
        throw SpecError("--field is required");
    if (!o.set_text.empty()) l.set = parse_set(o.set_text, l.spec.domain.dim());
    return l;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SpecError("cannot write '" + path + "'");
    f << text;
    if (!f) throw SpecError("write to '" + path + "' failed");
}

std::vector<std::string> t_columns(int m) {
    std::vector<std::string> cols;
    for (int i = 1; i <= m; ++i) cols.push_back("t" + std::to_string(i));
    return cols;
}

std::vector<Vec> probes_from(const Options& o, int m, bool allow_default) {
    std::vector<Vec> ts;
    if (!o.grid.empty()) ts = parse_grid(o.grid, m);
    if (!o.points.empty()) {
        const auto extra = parse_points(o.points, m);
        ts.insert(ts.end(), extra.begin(), extra.end());
    }
    if (ts.empty()) {
        if (!allow_default) throw SpecError("give probe points with --grid or --t");
        ts = default_probe_grid(m);
    }
    return ts;
}

void print_report(const IntegrabilityReport& rep, std::ostream& out) {
    out << "verdict: " << to_string(rep.verdict) << '\n';
    for (const auto& c : rep.conditions)
        out << "  " << c.name << ": " << to_string(c.verdict) << "  value " << format_number(c.value) << "  residual "
            << format_number(c.residual) << '\n';
    if (!rep.witness.empty()) {
        out << "witness:";
        for (const auto& w : rep.witness) out << ' ' << w;
        out << '\n';
    }
}

int cmd_check(const Options& o, std::ostream& out) {
    const auto cfg = make_cfg(o);
    const auto l = load(o, cfg, true);
    const MatrixField f = l.set ? l.field->restricted(*l.set) : *l.field;
    const auto rep = check_integrability(l.spec, f, cfg);
    print_report(rep, out);
    if (!o.report_path.empty()) emit(report_to_json(rep).dump(2) + "\n", o.report_path, out);
    return verdict_exit(rep.verdict);
}

int cmd_cf(const Options& o, std::ostream& out, std::ostream& err) {
    const auto cfg = make_cfg(o);
    const auto l = load(o, cfg, true);
    const int m = l.spec.m;
    const auto ts = probes_from(o, m, false);

    const MatrixField f = l.set ? l.field->restricted(*l.set) : *l.field;
    const auto rep = check_integrability(l.spec, f, cfg);
    if (rep.verdict == Verdict::Divergent || (rep.verdict == Verdict::Inconclusive && !o.force)) {
        print_report(rep, err);
        return verdict_exit(rep.verdict);
    }
    const bool forced = rep.verdict != Verdict::Integrable;
    if (forced) err << "warning: integrability is inconclusive; abs_err reports the quadrature residual\n";

    std::ostringstream csv;
    auto cols = t_columns(m);
    cols.insert(cols.end(), {"re", "im"});
    if (o.force) cols.push_back("abs_err");
    write_csv_header(csv, cols);
    for (const auto& t : ts) {
        std::vector<double> row(t.data(), t.data() + m);
        if (o.force) {
            const auto r = integral_log_cf_result(l.spec, *l.field, t, l.set, cfg);
            row.insert(row.end(), {r.value.real(), r.value.imag(), r.error_estimate});
        } else {
            const cplx v = integral_log_cf(l.spec, *l.field, t, l.set, cfg);
            row.insert(row.end(), {v.real(), v.imag()});
        }
        write_csv_row(csv, row);
    }
    emit(csv.str(), o.out_path, out);
    return kExitOk;
}

SamplePlan plan_from(const Options& o) {
    SamplePlan plan;
    plan.n_samples = o.n;
    plan.seed = o.seed;
    plan.eps = o.eps;
    plan.partition = o.cells;
    return plan;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream& err) {
    const auto cfg = make_cfg(o);
    const auto l = load(o, cfg, false);
    const int m = l.spec.m;
    const SamplePlan plan = plan_from(o);
    plan.validate(l.spec.domain.dim());

    // Without a field, M(A) is the integral of the identity over A.
    MatrixField f = l.field ? *l.field : MatrixField::constant(Mat::Identity(m, m), l.spec.domain.dim());
    if (l.set) f = f.restricted(*l.set);

    const auto rep = check_integrability(l.spec, f, cfg);
    if (rep.verdict != Verdict::Integrable) {
        print_report(rep, err);
        return verdict_exit(rep.verdict);
    }

    Mat samples;
    double moment = 0.0;
    if (o.route == "partition") {
        auto ps = sample_integrals_partition(l.spec, {f}, plan, cfg);
        samples = std::move(ps.samples.front());
        moment = ps.truncation_moment.front();
    } else {
        const auto trip = integral_triplet(l.spec, f, cfg);
        moment = TripletSampler(trip.triplet, plan.eps, cfg).small_jump_moment();
        samples = sample(trip.triplet, plan.n_samples, plan.seed, plan.eps, cfg);
    }
    std::ostringstream csv;
    write_samples_csv(csv, samples);
    emit(csv.str(), o.out_path, out);
    err << "truncation bound: |cf error(t)| <= " << format_number(0.5 * moment) << " * |t|^2\n";
    return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto cfg = make_cfg(o);
    const auto l = load(o, cfg, true);
    const int m = l.spec.m;
    const SamplePlan plan = plan_from(o);
    plan.validate(l.spec.domain.dim());
    const auto probes = probes_from(o, m, true);

    ValidationOptions opts;
    if (!(o.tol_scale > 0.0)) throw SpecError("--tol-scale must be positive");
    opts.tol_scale = o.tol_scale;
    if (!o.shift_gamma.empty()) opts.gamma_shift = parse_vector(o.shift_gamma, m);

    const MatrixField f = l.set ? l.field->restricted(*l.set) : *l.field;
    const auto rep = validate(l.spec, f, plan, probes, opts, cfg);
    if (rep.verdict != Verdict::Integrable) {
        err << rep.message << '\n';
        return verdict_exit(rep.verdict);
    }

    std::ostringstream csv;
    auto cols = t_columns(m);
    cols.insert(cols.end(), {"re_emp", "im_emp", "re_ana", "im_ana", "gap", "band", "pass"});
    write_csv_header(csv, cols);
    for (const auto& p : rep.probes) {
        std::vector<double> row(p.t.data(), p.t.data() + m);
        row.insert(row.end(), {p.empirical.real(), p.empirical.imag(), p.analytic.real(), p.analytic.imag(), p.gap,
                               p.band, p.pass ? 1.0 : 0.0});
        write_csv_row(csv, row);
    }
    emit(csv.str(), o.out_path, out);
    if (!o.report_path.empty()) emit(report_to_json(rep).dump(2) + "\n", o.report_path, out);

    std::size_t passed = 0;
    for (const auto& p : rep.probes) passed += p.pass;
    err << "validation " << (rep.pass ? "PASS" : "FAIL") << ": " << passed << "/" << rep.probes.size()
        << " probes within band, n = " << rep.n_samples << '\n';
    return rep.pass ? kExitOk : kExitValidationFail;
}

void common_flags(CLI::App* cmd, Options& o, bool field_required) {
    cmd->add_option("--spec", o.spec_path, "ISRM spec (JSON)")->required();
    auto* fld = cmd->add_option("--field", o.field_path, "matrix field (JSON)");
    if (field_required) fld->required();
    cmd->add_option("--set", o.set_text, "restrict to A, e.g. 0:0.5 or 0:1x0:0.5+1:2x0:1");
    cmd->add_option("--abs-tol", o.abs_tol, "quadrature absolute tolerance");
    cmd->add_option("--rel-tol", o.rel_tol, "quadrature relative tolerance");
    cmd->add_option("--max-depth", o.max_depth, "quadrature bisection depth");
}

void sampling_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("-n", o.n, "number of samples");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--eps", o.eps, "small-jump truncation level");
    cmd->add_option("--cells", o.cells, "cells per axis (one value for all axes, or one per axis)");
    cmd->add_option("--out", o.out_path, "CSV output file (default: standard output)");
}

/// Restores the default warning sink on scope exit.
struct WarningSink {
    explicit WarningSink(std::ostream& err) {
        set_warning_handler([&err](const std::string& msg) { err << "warning: " << msg << '\n'; });
    }
    ~WarningSink() { set_warning_handler(nullptr); }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Independently scattered random measures: integrability, characteristic functions, sampling"};
    app.name("isrm");
    app.require_subcommand(1);
    Options o;

    auto* check = app.add_subcommand("check", "integrability of a field; exit 0/2/3");
    common_flags(check, o, true);
    check->add_option("--report", o.report_path, "write the report as JSON");

    auto* cf = app.add_subcommand("cf", "log-characteristic function of the integral on a grid");
    common_flags(cf, o, true);
    cf->add_option("--grid", o.grid, "tmin:tmax:steps, once or per axis")->take_all();
    cf->add_option("--t", o.points, "explicit points, e.g. \"0.5,1;2,0\"");
    cf->add_option("--out", o.out_path, "CSV output file (default: standard output)");
    cf->add_flag("--force", o.force, "evaluate even when integrability is inconclusive");

    auto* smp = app.add_subcommand("sample", "draws of the integral (or of M(A) without --field)");
    common_flags(smp, o, false);
    sampling_flags(smp, o);
    smp->add_option("--route", o.route, "partition or triplet")->check(CLI::IsMember({"partition", "triplet"}));

    auto* val = app.add_subcommand("validate", "Monte-Carlo check of the characteristic function; exit 0/5");
    common_flags(val, o, true);
    sampling_flags(val, o);
    val->add_option("--grid", o.grid, "probe grid tmin:tmax:steps, once or per axis")->take_all();
    val->add_option("--t", o.points, "explicit probe points");
    val->add_option("--tol-scale", o.tol_scale, "multiplier of the acceptance band");
    val->add_option("--shift-gamma", o.shift_gamma, "add this drift to the analytic target (negative control)");
    val->add_option("--report", o.report_path, "write the report as JSON");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "isrm: " << e.what() << '\n';
        return kExitUsage;
    }

    WarningSink sink(err);
    try {
        if (check->parsed()) return cmd_check(o, out);
        if (cf->parsed()) return cmd_cf(o, out, err);
        if (smp->parsed()) return cmd_sample(o, out, err);
        return cmd_validate(o, out, err);
    } catch (const UnsupportedLevyVariant& e) {
        err << "isrm: unsupported: " << e.what() << '\n';
        return kExitUnsupported;
    } catch (const Divergent& e) {
        err << "isrm: divergent: " << e.what() << '\n';
        return kExitDivergent;
    } catch (const QuadratureFailure& e) {
        err << "isrm: inconclusive: " << e.what() << '\n';
        return kExitInconclusive;
    } catch (const NotIntegrable& e) {
        err << "isrm: " << e.what() << '\n';
        return kExitInconclusive;
    } catch (const std::exception& e) {
        err << "isrm: " << e.what() << '\n';
        return kExitUsage;
    }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

}  // namespace isrm
