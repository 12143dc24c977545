#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isrm/stochastic_integral.hpp"

namespace isrm {

struct SamplePlan {
    std::size_t n_samples = 100000;
    std::uint64_t seed = 0;
    /// Jumps of norm <= eps are replaced by their compensator.
    double eps = 1e-3;
    /// Uniform cells per axis (before refinement by set and field boundaries).
    std::vector<int> partition;

    int cells_along(int axis) const;
    /// Throws Error on a non-positive count, eps or cell number.
    void validate(int base_dim) const;
};

/// Cell partition of the domain box, refined so that given sets are cell unions.
struct CellGrid {
    /// Grid lines per axis, sorted, including the box ends.
    std::vector<std::vector<double>> lines;
    std::vector<Box> cells;
};

/// Uniform grid plus every set boundary (and any extra breakpoints). Boundaries
/// within 1e-9 of a uniform line are snapped to it with a warning; a set
/// reaching outside the domain raises PartitionMismatch.
CellGrid build_grid(const Domain& domain, const std::vector<MeasurableSet>& sets, const Breakpoints& extra,
                    const SamplePlan& plan);

/// Joint draws of (M(A_1), ..., M(A_k)): one n x m matrix per set.
std::vector<Mat> sample_measure(const IsrmSpec& spec, const std::vector<MeasurableSet>& sets, const SamplePlan& plan,
                                const QuadratureConfig& cfg = {});

/// Samples of the partition route plus its error budget.
struct PartitionSample {
    /// One n x m matrix per field, all drawn on one shared grid.
    std::vector<Mat> samples;
    CellGrid grid;
    /// Per field, sum over cells of |f(mid)|^2 times the dropped small-jump second moment;
    /// the CF error of the truncation is at most |t|^2 / 2 times this.
    std::vector<double> truncation_moment;
};

/// Samples of sum_c f_k(mid_c) M(c) for every field k (the simple field f_P per cell).
PartitionSample sample_integrals_partition(const IsrmSpec& spec, const std::vector<MatrixField>& fields,
                                           const SamplePlan& plan, const QuadratureConfig& cfg = {});

Mat sample_integral_partition(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan,
                              const QuadratureConfig& cfg = {});

/// The simple field f_P = sum_c f(mid_c) 1_c on the grid the partition route uses.
MatrixField partition_field(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan);

/// Direct draws from [gamma_f, Q_f, phi_f].
Mat sample_integral_triplet(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan,
                            const QuadratureConfig& cfg = {});

/// (1/n) sum_k exp(i <t, x_k>) over the rows of `samples`.
cplx empirical_cf(const Mat& samples, const Vec& t);

/// Per-axis values {-1, -0.25, 0.5, 1.5}: 4 probes for m = 1, a 4 x 4 grid for m = 2.
std::vector<Vec> default_probe_grid(int m);

struct ValidationProbe {
    Vec t;
    cplx empirical;
    cplx analytic;
    double gap = 0.0;
    double band = 0.0;
    /// Components of the band before scaling.
    double clt = 0.0;
    double truncation = 0.0;
    double partition = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<ValidationProbe> probes;
    std::size_t n_samples = 0;
    Verdict verdict = Verdict::Integrable;
    /// int K((f_P - f)^T t) at the first probe, for reference.
    cplx partition_gap_first = 0.0;
    bool pass = false;
    std::string message;
};

struct ValidationOptions {
    double tol_scale = 1.0;
    /// Added to the drift of the analytic target (negative control).
    std::optional<Vec> gamma_shift;
};

/// Empirical CF of the partition route against exp(integral_log_cf) on the probes;
/// band = tol_scale * (3/sqrt(n) + truncation bound + partition gap).
ValidationReport validate(const IsrmSpec& spec, const MatrixField& f, const SamplePlan& plan,
                          const std::vector<Vec>& probes, const ValidationOptions& opts = {},
                          const QuadratureConfig& cfg = {});

}  // namespace isrm
