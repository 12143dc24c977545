#include "isrm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "isrm/errors.hpp"
#include "isrm/random.hpp"

namespace isrm {

int SamplePlan::cells_along(int axis) const {
    if (partition.empty()) return 64;
    if (partition.size() == 1) return partition.front();
    return partition.at(static_cast<std::size_t>(axis));
}

void SamplePlan::validate(int base_dim) const {
    if (n_samples < 1) throw Error("sample plan: n_samples must be >= 1");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("sample plan: eps must be positive");
    if (partition.size() > 1 && static_cast<int>(partition.size()) != base_dim)
        throw DimensionMismatch("sample plan: one cell count per axis");
    for (int a = 0; a < base_dim; ++a)
        if (cells_along(a) < 1) throw Error("sample plan: at least one cell per axis");
}

namespace {

/// Adds x to the sorted lines, snapping to a line within tol.
void add_line(std::vector<double>& lines, double x, double tol, bool warn_on_snap) {
    auto it = std::lower_bound(lines.begin(), lines.end(), x);
    double nearest = std::numeric_limits<double>::infinity();
    if (it != lines.end()) nearest = std::min(nearest, std::abs(*it - x));
    if (it != lines.begin()) nearest = std::min(nearest, std::abs(*(it - 1) - x));
    if (nearest == 0.0) return;
    if (nearest <= tol) {
        if (warn_on_snap) {
            std::ostringstream os;
            os << "partition: set boundary " << x << " snapped to a grid line " << nearest << " away";
            warn(os.str());
        }
        return;
    }
    lines.insert(it, x);
}

std::vector<Box> cells_of(const std::vector<std::vector<double>>& lines) {
    std::vector<Box> cells;
    const int d = static_cast<int>(lines.size());
    std::vector<std::size_t> idx(d, 0);
    if (d == 0) return cells;
    while (true) {
        std::vector<Interval> sides(d);
        for (int a = 0; a < d; ++a) sides[a] = {lines[a][idx[a]], lines[a][idx[a] + 1]};
        cells.emplace_back(std::move(sides));
        int a = 0;
        while (a < d && ++idx[a] + 1 == lines[a].size()) idx[a++] = 0;
        if (a == d) break;
    }
    return cells;
}

struct CellTerm {
    std::size_t out;
    Mat R;
};

/// A used cell: its triplet, sampler and the outputs it feeds.
struct PreparedCell {
    IdTriplet triplet;
    TripletSampler sampler;
    std::vector<CellTerm> terms;
};

struct Prepared {
    CellGrid grid;
    std::vector<PreparedCell> cells;
    std::size_t outputs = 0;
};

Prepared prepare(const IsrmSpec& spec, const CellGrid& grid,
                 const std::function<std::vector<CellTerm>(const Box&)>& terms_of, std::size_t outputs,
                 const SamplePlan& plan, const QuadratureConfig& cfg) {
    Prepared p;
    p.grid = grid;
    p.outputs = outputs;
    for (const auto& cell : grid.cells) {
        auto terms = terms_of(cell);
        if (terms.empty()) continue;
        IdTriplet trip = triplet_of_set(spec, MeasurableSet::single(cell), cfg);
        TripletSampler sampler(trip, plan.eps, cfg);
        p.cells.push_back(PreparedCell{std::move(trip), std::move(sampler), std::move(terms)});
    }
    return p;
}

std::vector<Mat> draw(const Prepared& p, int m, const SamplePlan& plan) {
    const std::size_t n = plan.n_samples;
    std::vector<Mat> out(p.outputs, Mat::Zero(static_cast<Eigen::Index>(n), m));
    const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
    parallel_for_chunks(chunks, [&](std::size_t c) {
        auto rng = make_stream(plan.seed, c);
        Vec x(m);
        std::vector<Vec> y(p.outputs, Vec::Zero(m));
        const std::size_t end = std::min(n, (c + 1) * kChunkSize);
        for (std::size_t i = c * kChunkSize; i < end; ++i) {
            for (auto& v : y) v.setZero();
            for (const auto& cell : p.cells) {
                x.setZero();
                cell.sampler.add_draw(rng, x);
                for (const auto& t : cell.terms) y[t.out] += t.R * x;
            }
            for (std::size_t k = 0; k < p.outputs; ++k) out[k].row(static_cast<Eigen::Index>(i)) = y[k].transpose();
        }
    });
    return out;
}

Breakpoints field_breaks(const IsrmSpec& spec, const MatrixField& f) {
    Breakpoints b = spec.domain.breaks;
    merge_breakpoints(b, f.breaks());
    if (f.support()) merge_breakpoints(b, set_breakpoints(*f.support()));
    if (f.is_simple())
        for (const auto& piece : f.pieces()) merge_breakpoints(b, set_breakpoints(piece.set));
    return b;
}

CellGrid grid_for_fields(const IsrmSpec& spec, const std::vector<MatrixField>& fields, const SamplePlan& plan) {
    Breakpoints extra;
    std::vector<MeasurableSet> sets;
    for (const auto& f : fields) {
        if (f.base_dim() != spec.domain.dim()) throw DimensionMismatch("field and domain base dimensions differ");
        if (f.m() != spec.m) throw DimensionMismatch("field and spec dimensions differ");
        merge_breakpoints(extra, field_breaks(spec, f));
    }
    // Breakpoints outside the domain are irrelevant to the partition.
    for (int a = 0; a < static_cast<int>(extra.size()) && a < spec.domain.dim(); ++a) {
        const auto& side = spec.domain.box.sides[a];
        auto& v = extra[a];
        v.erase(std::remove_if(v.begin(), v.end(), [&](double x) { return x <= side.lo || x >= side.hi; }), v.end());
    }
    return build_grid(spec.domain, sets, extra, plan);
}

Prepared prepare_fields(const IsrmSpec& spec, const std::vector<MatrixField>& fields, const SamplePlan& plan,
                        const QuadratureConfig& cfg) {
    plan.validate(spec.domain.dim());
    const CellGrid grid = grid_for_fields(spec, fields, plan);
    auto terms_of = [&](const Box& cell) {
        std::vector<CellTerm> terms;
        const Point mid = cell.midpoint();
        for (std::size_t k = 0; k < fields.size(); ++k) {
            Mat R = fields[k](mid);
            if (!R.isZero(0.0)) terms.push_back({k, std::move(R)});
        }
        return terms;
    };
    return prepare(spec, grid, terms_of, fields.size(), plan, cfg);
}

std::vector<double> truncation_moments(const Prepared& p) {
    std::vector<double> b(p.outputs, 0.0);
    for (const auto& cell : p.cells)
        for (const auto& t : cell.terms) {
            const double r = operator_norm(t.R);
            b[t.out] += r * r * cell.sampler.small_jump_moment();
        }
    return b;
}

}  // namespace

CellGrid build_grid(const Domain& domain, const std::vector<MeasurableSet>& sets, const Breakpoints& extra,
                    const SamplePlan& plan) {
    const int d = domain.dim();
    CellGrid g;
    g.lines.resize(d);
    for (int a = 0; a < d; ++a) {
        const auto& side = domain.box.sides[a];
        const int n = plan.cells_along(a);
        if (n < 1) throw Error("partition: at least one cell per axis");
        auto& L = g.lines[a];
        for (int i = 0; i <= n; ++i) L.push_back(i == n ? side.hi : side.lo + side.length() * i / n);
    }
    for (const auto& A : sets) {
        if (!A.boxes().empty() && A.dim() != d) throw DimensionMismatch("set and domain dimensions differ");
        for (const auto& box : A.boxes())
            for (int a = 0; a < d; ++a) {
                const auto& side = domain.box.sides[a];
                const double tol = 1e-9 * std::max(1.0, side.length());
                for (double x : {box.sides[a].lo, box.sides[a].hi}) {
                    if (x < side.lo - tol || x > side.hi + tol)
                        throw PartitionMismatch("set boundary lies outside the domain");
                    add_line(g.lines[a], std::clamp(x, side.lo, side.hi), tol, true);
                }
            }
    }
    for (int a = 0; a < d && a < static_cast<int>(extra.size()); ++a) {
        const auto& side = domain.box.sides[a];
        const double tol = 1e-9 * std::max(1.0, side.length());
        for (double x : extra[a])
            if (x > side.lo && x < side.hi) add_line(g.lines[a], x, tol, false);
    }
    g.cells = cells_of(g.lines);
    return g;
}

std::vector<Mat> sample_measure(const IsrmSpec& spec, const std::vector<MeasurableSet>& sets, const SamplePlan& plan,
                                const QuadratureConfig& cfg) {
    plan.validate(spec.domain.dim());
    const CellGrid grid = build_grid(spec.domain, sets, {}, plan);
    const Mat I = Mat::Identity(spec.m, spec.m);
    auto terms_of = [&](const Box& cell) {
        std::vector<CellTerm> terms;
        const Point mid = cell.midpoint();
        for (std::size_t k = 0; k < sets.size(); ++k)
            if (sets[k].contains(mid)) terms.push_back({k, I});
        return terms;
    };
    return draw(prepare(spec, grid, terms_of, sets.size(), plan, cfg), spec.m, plan);
}

PartitionSample sample_integrals_partition(const IsrmSpec& spec, const std::vector<MatrixField>& fields,
                                           const SamplePlan& plan, const QuadratureConfig& cfg) {
    const Prepared p = prepare_fields(spec, fields, plan, cfg);
    PartitionSample out;
    out.samples = draw(p, spec.m, plan);
    out.grid = p.grid;
    out.truncation_moment = truncation_moments(p);
    return out;
}

Mat sample_integral_partition(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan,
                              const QuadratureConfig& cfg) {
    return std::move(sample_integrals_partition(spec, {f}, plan, cfg).samples.front());
}

MatrixField partition_field(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan) {
    plan.validate(spec.domain.dim());
    const CellGrid grid = grid_for_fields(spec, {f}, plan);
    std::vector<MatrixField::Piece> pieces;
    for (const auto& cell : grid.cells) pieces.push_back({f(cell.midpoint()), MeasurableSet::single(cell)});
    return MatrixField::simple(std::move(pieces));
}

Mat sample_integral_triplet(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan,
                            const QuadratureConfig& cfg) {
    plan.validate(spec.domain.dim());
    const auto it = integral_triplet(spec, f, cfg);
    return sample(it.triplet, plan.n_samples, plan.seed, plan.eps, cfg);
}

cplx empirical_cf(const Mat& samples, const Vec& t) {
    if (samples.rows() == 0) throw Error("empirical_cf: no samples");
    if (samples.cols() != t.size()) throw DimensionMismatch("empirical_cf: t has wrong dimension");
    const Vec phase = samples * t;
    double re = 0.0, im = 0.0;
    for (Eigen::Index k = 0; k < phase.size(); ++k) {
        re += std::cos(phase[k]);
        im += std::sin(phase[k]);
    }
    const double n = static_cast<double>(samples.rows());
    return {re / n, im / n};
}

std::vector<Vec> default_probe_grid(int m) {
    const double axis[] = {-1.0, -0.25, 0.5, 1.5};
    std::vector<Vec> out;
    if (m == 1) {
        for (double a : axis) out.push_back(Vec::Constant(1, a));
    } else if (m == 2) {
        for (double a : axis)
            for (double b : axis) {
                Vec t(2);
                t << a, b;
                out.push_back(t);
            }
    } else {
        // Coordinate directions and the diagonal.
        for (double a : axis) {
            for (int i = 0; i < m; ++i) {
                Vec t = Vec::Zero(m);
                t[i] = a;
                out.push_back(t);
            }
            out.push_back(Vec::Constant(m, a));
        }
    }
    return out;
}

ValidationReport validate(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan,
                          const std::vector<Vec>& probes, const ValidationOptions& opts, const QuadratureConfig& cfg) {
    ValidationReport rep;
    rep.n_samples = plan.n_samples;
    rep.verdict = check_integrability(spec, f, cfg).verdict;
    if (rep.verdict != Verdict::Integrable) {
        rep.message = std::string("field is not certified integrable (") + to_string(rep.verdict) + ")";
        return rep;
    }
    const Prepared p = prepare_fields(spec, {f}, plan, cfg);
    const Mat samples = std::move(draw(p, spec.m, plan).front());
    const double moment = truncation_moments(p).front();
    const double clt = 3.0 / std::sqrt(static_cast<double>(plan.n_samples));

    rep.pass = true;
    for (const auto& t : probes) {
        if (t.size() != spec.m) throw DimensionMismatch("validate: probe has wrong dimension");
        ValidationProbe pr;
        pr.t = t;
        const cplx psi = integral_log_cf(spec, f, t, std::nullopt, cfg);
        cplx psi_p = 0.0;
        for (const auto& cell : p.cells) psi_p += log_cf(cell.triplet, cell.terms.front().R.transpose() * t, cfg);
        cplx target = psi;
        if (opts.gamma_shift) {
            if (opts.gamma_shift->size() != spec.m) throw DimensionMismatch("validate: gamma shift has wrong dimension");
            target += cplx(0.0, opts.gamma_shift->dot(t));
        }
        pr.analytic = std::exp(target);
        pr.empirical = empirical_cf(samples, t);
        pr.gap = std::abs(pr.empirical - pr.analytic);
        pr.clt = clt;
        pr.truncation = 0.5 * t.squaredNorm() * moment;
        pr.partition = std::abs(psi_p - psi);
        pr.band = opts.tol_scale * (pr.clt + pr.truncation + pr.partition);
        pr.pass = pr.gap <= pr.band;
        rep.pass = rep.pass && pr.pass;
        rep.probes.push_back(std::move(pr));
    }
    // The reference gap integrates over every cell boundary; skip it on fine 2-D grids.
    if (!probes.empty() && !f.is_zero() && p.grid.cells.size() <= 256) {
        const auto fp = partition_field(spec, f, plan);
        rep.partition_gap_first = cf_convergence_gap(spec, {fp}, f, probes.front(), cfg).front();
    }
    rep.message = rep.pass ? "all probes within band" : "empirical CF outside band";
    return rep;
}

}  // namespace isrm
