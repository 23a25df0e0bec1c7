#include "aet/spline_basis.hpp"

#include "aet/empirical.hpp"
#include "aet/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace aet {

CandidateKnots candidate_knots(std::vector<double> values, int count) {
    if (values.empty()) throw ConfigError("candidate_knots: no values");
    if (count < 1) throw ConfigError("candidate_knots: count must be >= 1");
    std::sort(values.begin(), values.end());
    CandidateKnots out;
    out.lo = values.front();
    out.hi = values.back();
    if (out.lo == out.hi)
        throw ConfigError("candidate_knots: all covariate values identical; no interior knots possible");
    for (int q = 1; q <= count; ++q) {
        const double pos = empirical_quantile(values, static_cast<double>(q) / (count + 1));
        if (pos <= out.lo || pos >= out.hi) continue;          // keep knots interior
        if (!out.positions.empty() && pos == out.positions.back()) continue; // ties collapse
        out.positions.push_back(pos);
    }
    return out;
}

namespace {

// Writes all count+2 hats on {lo, active positions..., hi} evaluated at x.
// Knot vector is assembled on the stack; candidate sets are tiny (<= 31).
void eval_hats(double x, const CandidateKnots& knots, const KnotState& state, double* hats) {
    double t[34];
    int m = 0;
    t[m++] = knots.lo;
    for (int i = 0; i < knots.count(); ++i)
        if (state.has(i)) t[m++] = knots.positions[static_cast<std::size_t>(i)];
    t[m++] = knots.hi;

    x = std::clamp(x, knots.lo, knots.hi);
    std::fill(hats, hats + m, 0.0);

    // segment index s with t[s] <= x <= t[s+1]
    int s = 0;
    while (s + 2 < m && x > t[s + 1]) ++s;
    const double w = (x - t[s]) / (t[s + 1] - t[s]);
    hats[s] = 1.0 - w;
    hats[s + 1] = w;
}

} // namespace

void basis_eval(double x, const CandidateKnots& knots, const KnotState& state, double* out) {
    assert((state.mask >> knots.count()) == 0 && "active knot outside candidate set");
    double hats[34];
    eval_hats(x, knots, state, hats);
    const int cols = basis_columns(state);
    std::copy(hats + 1, hats + 1 + cols, out);
}

std::vector<double> basis_eval_full(double x, const CandidateKnots& knots, const KnotState& state) {
    std::vector<double> hats(static_cast<std::size_t>(state.count()) + 2);
    eval_hats(x, knots, state, hats.data());
    return hats;
}

Eigen::MatrixXd basis_matrix(std::span<const double> xs, const CandidateKnots& knots,
                             const KnotState& state) {
    const int cols = basis_columns(state);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(xs.size()), cols);
    double buf[33];
    for (std::size_t r = 0; r < xs.size(); ++r) {
        basis_eval(xs[r], knots, state, buf);
        for (int c = 0; c < cols; ++c) out(static_cast<Eigen::Index>(r), c) = buf[c];
    }
    return out;
}

} // namespace aet
