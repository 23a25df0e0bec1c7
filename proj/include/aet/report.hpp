#pragma once

#include "aet/diagnostics.hpp"
#include "aet/io.hpp"

#include <array>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace aet {

// Pointwise posterior summary of the effect surface: mean, equal-tailed
// credible band at level 1 - alpha, and the positive-effect probability.
struct SurfaceSummary {
    std::vector<BioVec> points;
    Eigen::VectorXd mean;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    Eigen::VectorXd prob_positive;
};

SurfaceSummary surface_summary(const PosteriorFit& fit, std::vector<BioVec> points,
                               double alpha = 0.05);

// Location interval for an upward zero crossing of the effect surface along
// one axis: from where the upper band first clears zero to where the lower
// band does. NaN endpoints when a band never clears zero on the grid.
struct CrossingInterval {
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
};
CrossingInterval band_crossing(const SurfaceSummary& curve, int axis);

// Worked single-dataset example: a sigmoid-effect dataset (n = 500, noise
// sd 5) fit with the free-knot sampler at reporting strength (2000 samples,
// 5000 burn-in, thin 5, 4 chains), summarized as effect curves over the
// first biomarker at two display levels of the second, the zero-crossing
// interval, and convergence traces at four reference patterns.
struct IllustrationResult {
    std::vector<double> hb_grid;
    std::array<double, 2> dhr_levels{5.0, 15.0};
    std::array<SurfaceSummary, 2> curves;     // aligned with dhr_levels
    std::array<CrossingInterval, 2> crossing; // per display level
    CrossingInterval crossing_union;
    double max_curve_gap = 0.0; // max |mean difference| between the levels
    std::array<BioVec, 4> trace_patterns;
    std::array<double, 4> rhat;
    std::vector<TraceRow> traces;
    std::shared_ptr<const SplineFit> fit;
};

IllustrationResult run_illustration(std::uint64_t seed);

// hb, dhr_level, mean, lo, hi, prob_positive: one row per grid point x level.
void write_curves_csv(const std::filesystem::path& file, const IllustrationResult& example);
// pattern, hb, dhr, chain, iteration, gamma.
void write_traces_csv(const std::filesystem::path& file, std::span<const BioVec> patterns,
                      std::span<const TraceRow> traces);
// Crossing intervals, per-pattern scale-reduction statistics, curve gap.
void write_illustration_json(const std::filesystem::path& file,
                             const IllustrationResult& example);

// hb, dhr, vcb, mean, lo, hi, prob_positive over an evaluation grid.
void write_surface_csv(const std::filesystem::path& file, const SurfaceSummary& surface);

// Evaluation grid spanning the biomarker supports (third coordinate at the
// VCB truncated mean when dim is 3).
std::vector<BioVec> surface_grid(int dim);

} // namespace aet
