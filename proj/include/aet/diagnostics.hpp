#pragma once

#include "aet/rjmcmc.hpp"

#include <vector>

namespace aet {

// Per-chain series of gamma draws at one biomarker point, in retention order.
std::vector<std::vector<double>> trace_series(const SplineFit& fit, const BioVec& point);

// Split-R-hat over per-chain series: each chain is halved and the usual
// between/within variance ratio is taken over the split sequences. Returns
// NaN when fewer than two chains or too few draws per half.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct TraceRow {
    int chain = 0;
    int iteration = 0; // retention index within the chain
    int pattern = 0;   // index into the pattern list
    double gamma = 0.0;
};

// Long-format trace at several reference points (one row per draw x pattern).
std::vector<TraceRow> trace_rows(const SplineFit& fit, std::span<const BioVec> patterns);

} // namespace aet
