#include "aet/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace aet {

namespace {

double sample_mean(const double* x, int n) {
    return std::accumulate(x, x + n, 0.0) / n;
}

double sample_var(const double* x, int n, double mean) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (x[i] - mean) * (x[i] - mean);
    return s / (n - 1);
}

} // namespace

std::vector<std::vector<double>> trace_series(const SplineFit& fit, const BioVec& point) {
    const Eigen::MatrixXd surface = gamma_surface(fit, std::span<const BioVec>(&point, 1));
    std::vector<std::vector<double>> chains(fit.n_chains());
    const auto& draws = fit.draws().draws;
    for (std::size_t i = 0; i < draws.size(); ++i)
        chains[draws[i].chain].push_back(surface(0, static_cast<int>(i)));
    return chains;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (chains.size() < 2) return nan;
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto& c : chains) len = std::min(len, c.size());
    const int half = static_cast<int>(len / 2);
    if (half < 2) return nan;

    std::vector<double> means, vars;
    for (const auto& c : chains) {
        // First and last halves; the middle element of an odd chain is unused.
        const double* segs[2] = {c.data(), c.data() + (c.size() - half)};
        for (const double* seg : segs) {
            const double m = sample_mean(seg, half);
            means.push_back(m);
            vars.push_back(sample_var(seg, half, m));
        }
    }
    const int m_seq = static_cast<int>(means.size());
    const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / m_seq;
    const double grand = sample_mean(means.data(), m_seq);
    const double between_over_n = sample_var(means.data(), m_seq, grand);
    if (!(within > 0.0)) return nan;
    const double var_plus = (half - 1.0) / half * within + between_over_n;
    return std::sqrt(var_plus / within);
}

std::vector<TraceRow> trace_rows(const SplineFit& fit, std::span<const BioVec> patterns) {
    const Eigen::MatrixXd surface = gamma_surface(fit, patterns);
    const auto& draws = fit.draws().draws;
    std::vector<int> iteration(fit.n_chains(), 0);
    std::vector<TraceRow> rows;
    rows.reserve(draws.size() * patterns.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const int it = iteration[draws[i].chain]++;
        for (std::size_t p = 0; p < patterns.size(); ++p)
            rows.push_back({draws[i].chain, it, static_cast<int>(p),
                            surface(static_cast<int>(p), static_cast<int>(i))});
    }
    return rows;
}

} // namespace aet
