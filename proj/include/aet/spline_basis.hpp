#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace aet {

// Interior candidate knot positions for one spline term, plus the boundary
// taken from the observed covariate range.
struct CandidateKnots {
    std::vector<double> positions; // strictly increasing, interior to (lo, hi)
    double lo = 0.0;
    double hi = 1.0;
    int count() const { return static_cast<int>(positions.size()); }
};

// Candidate knots at the q/(count+1) sample quantiles of `values`
// (q = 1..count), deduplicated and restricted to the open interval between
// the observed min and max. Throws ConfigError when all values coincide.
CandidateKnots candidate_knots(std::vector<double> values, int count = 5);

// Which candidates are currently active, as a bit mask over candidate indices.
struct KnotState {
    std::uint32_t mask = 0;

    int count() const { return std::popcount(mask); }
    bool has(int i) const { return (mask >> i) & 1u; }
    KnotState with(int i) const { return {mask | (1u << i)}; }
    KnotState without(int i) const { return {mask & ~(1u << i)}; }
    bool operator==(const KnotState&) const = default;
};

// A degree-1 B-spline on {lo, active knots..., hi} has count+2 hat functions;
// the first is dropped for identifiability, leaving count+1 columns.
inline int basis_columns(const KnotState& state) { return state.count() + 1; }

// Evaluate the retained hats at x (clamped to [lo, hi]); writes
// basis_columns(state) values to out.
void basis_eval(double x, const CandidateKnots& knots, const KnotState& state, double* out);

// All count+2 hats before the identifiability drop; test/diagnostic use.
std::vector<double> basis_eval_full(double x, const CandidateKnots& knots, const KnotState& state);

// Rows = xs, columns = retained hats.
Eigen::MatrixXd basis_matrix(std::span<const double> xs, const CandidateKnots& knots,
                             const KnotState& state);

} // namespace aet
