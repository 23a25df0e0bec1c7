#include "aet/posterior_fit.hpp"

#include <algorithm>
#include <cassert>

namespace aet {

namespace {
constexpr int kDrawChunk = 256;
}

std::vector<int> PosteriorFit::positive_counts(std::span<const BioVec> points) const {
    std::vector<int> counts(points.size(), 0);
    Eigen::MatrixXd block;
    for (int first = 0; first < n_draws(); first += kDrawChunk) {
        const int last = std::min(first + kDrawChunk, n_draws());
        gamma_block(points, first, last, block);
        for (Eigen::Index i = 0; i < block.rows(); ++i)
            counts[static_cast<std::size_t>(i)] += static_cast<int>((block.row(i).array() > 0.0).count());
    }
    return counts;
}

Eigen::VectorXd PosteriorFit::posterior_mean_gamma(std::span<const BioVec> points) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(points.size()));
    Eigen::MatrixXd block;
    for (int first = 0; first < n_draws(); first += kDrawChunk) {
        const int last = std::min(first + kDrawChunk, n_draws());
        gamma_block(points, first, last, block);
        sum += block.rowwise().sum();
    }
    return sum / static_cast<double>(n_draws());
}

double PosteriorFit::prob_positive_mean(std::span<const BioVec> points) const {
    assert(!points.empty());
    int positive = 0;
    Eigen::MatrixXd block;
    for (int first = 0; first < n_draws(); first += kDrawChunk) {
        const int last = std::min(first + kDrawChunk, n_draws());
        gamma_block(points, first, last, block);
        positive += static_cast<int>((block.colwise().mean().array() > 0.0).count());
    }
    return static_cast<double>(positive) / static_cast<double>(n_draws());
}

PosteriorFit::GammaMoments PosteriorFit::gamma_moments(std::span<const BioVec> points) const {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd block;
    for (int first = 0; first < n_draws(); first += kDrawChunk) {
        const int last = std::min(first + kDrawChunk, n_draws());
        gamma_block(points, first, last, block);
        sum += block.rowwise().sum();
        sumsq += block.array().square().matrix().rowwise().sum();
    }
    GammaMoments m;
    const double d = static_cast<double>(n_draws());
    m.mean = sum / d;
    m.sd = (sumsq / d - m.mean.cwiseProduct(m.mean))
               .cwiseMax(0.0)
               .cwiseSqrt()
               .cwiseMax(1e-12); // scripted or degenerate draws can be exactly constant
    return m;
}

PosteriorFit::GammaBand PosteriorFit::simultaneous_band(std::span<const BioVec> points,
                                                        double alpha) const {
    assert(!points.empty());
    GammaBand band;
    band.moments = gamma_moments(points);
    const Eigen::VectorXd inv_sd = band.moments.sd.cwiseInverse();
    std::vector<double> worst(static_cast<std::size_t>(n_draws()));
    Eigen::MatrixXd block;
    for (int first = 0; first < n_draws(); first += kDrawChunk) {
        const int last = std::min(first + kDrawChunk, n_draws());
        gamma_block(points, first, last, block);
        Eigen::MatrixXd dev = (-block).colwise() + band.moments.mean;
        dev.array().colwise() *= inv_sd.array();
        for (int d = first; d < last; ++d)
            worst[static_cast<std::size_t>(d)] = dev.col(d - first).maxCoeff();
    }
    std::sort(worst.begin(), worst.end());
    // Interpolated order statistic at probability 1 - alpha.
    const double h = (static_cast<double>(worst.size()) - 1.0) * (1.0 - alpha);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, worst.size() - 1);
    band.multiplier = worst[lo] + (h - static_cast<double>(lo)) * (worst[hi] - worst[lo]);
    return band;
}

CutoffFit CutoffFit::fit(const Dataset& data, const CutoffSpec& spec, const PriorSpec& prior,
                         int draws, RandomStream& rng) {
    CutoffFit f;
    f.dim_ = data.dim();
    f.spec_ = spec;
    const Eigen::MatrixXd design = cutoff_design(data, spec);
    f.posterior_ = conjugate_posterior(design, data.y, prior);
    f.beta_.resize(design.cols(), draws);
    f.sigma2_.resize(static_cast<std::size_t>(draws));
    for (int d = 0; d < draws; ++d) {
        const CoefficientState s = sample_coefficients(f.posterior_, rng);
        f.beta_.col(d) = s.beta;
        f.sigma2_[static_cast<std::size_t>(d)] = s.sigma2;
    }
    return f;
}

void CutoffFit::gamma_block(std::span<const BioVec> points, int first, int last,
                            Eigen::MatrixXd& out) const {
    assert(first >= 0 && last <= n_draws() && first <= last);
    const int half = 1 << dim_;
    const int width = last - first;
    out.resize(static_cast<Eigen::Index>(points.size()), width);
    // gamma depends on x only through its exceedance pattern, so evaluate one
    // draw row per pattern and broadcast
    std::map<int, Eigen::RowVectorXd> per_pattern;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int pat = cutoff_pattern(points[i], spec_, dim_);
        auto it = per_pattern.find(pat);
        if (it == per_pattern.end()) {
            const Eigen::VectorXd row = cutoff_subset_row(pat, dim_);
            it = per_pattern
                     .emplace(pat, row.transpose() * beta_.middleCols(first, width).bottomRows(half))
                     .first;
        }
        out.row(static_cast<Eigen::Index>(i)) = it->second;
    }
}

} // namespace aet
