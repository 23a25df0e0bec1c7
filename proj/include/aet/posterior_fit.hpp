#pragma once

#include "aet/patient.hpp"
#include "aet/regression_core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace aet {

// Fitted posterior over treatment-effect surfaces, abstracting over the model
// formulation. All consumers evaluate gamma draws in bounded blocks so that a
// large evaluation set never materializes a points-by-draws matrix at once.
class PosteriorFit {
public:
    virtual ~PosteriorFit() = default;

    virtual int n_draws() const = 0;
    virtual int n_chains() const = 0;

    // gamma values for draws [first, last) at the given points;
    // out is resized to points.size() x (last - first).
    virtual void gamma_block(std::span<const BioVec> points, int first, int last,
                             Eigen::MatrixXd& out) const = 0;

    // Posterior inclusion probability per predictive term (keyed by the
    // term's biomarker bit mask); empty for fixed-structure models.
    virtual std::map<std::uint8_t, double> inclusion_probabilities() const = 0;

    // Derived quantities (chunked internally).
    std::vector<int> positive_counts(std::span<const BioVec> points) const;
    Eigen::VectorXd posterior_mean_gamma(std::span<const BioVec> points) const;
    // Fraction of draws whose average gamma over `points` is positive.
    double prob_positive_mean(std::span<const BioVec> points) const;

    // Pointwise posterior mean and standard deviation of gamma.
    struct GammaMoments {
        Eigen::VectorXd mean;
        Eigen::VectorXd sd; // floored away from zero so ratios stay finite
    };
    GammaMoments gamma_moments(std::span<const BioVec> points) const;

    // Simultaneous lower credible bound for gamma over `points`: the
    // multiplier is the (1 - alpha) quantile, across draws, of the largest
    // standardized downward excursion max_i (mean_i - gamma_i) / sd_i, so
    // the bound mean - multiplier * sd covers every point jointly with
    // posterior probability 1 - alpha.
    struct GammaBand {
        GammaMoments moments;
        double multiplier = 0.0;
    };
    GammaBand simultaneous_band(std::span<const BioVec> points, double alpha) const;
};

// Dichotomized-biomarker model: fixed structure, independent draws from the
// exact conjugate posterior.
class CutoffFit : public PosteriorFit {
public:
    static CutoffFit fit(const Dataset& data, const CutoffSpec& spec, const PriorSpec& prior,
                         int draws, RandomStream& rng);

    int n_draws() const override { return static_cast<int>(beta_.cols()); }
    int n_chains() const override { return 1; }
    void gamma_block(std::span<const BioVec> points, int first, int last,
                     Eigen::MatrixXd& out) const override;
    std::map<std::uint8_t, double> inclusion_probabilities() const override { return {}; }

    const Eigen::MatrixXd& beta_draws() const { return beta_; }
    const std::vector<double>& sigma2_draws() const { return sigma2_; }
    const ConjugatePosterior& posterior() const { return posterior_; }

private:
    int dim_ = 2;
    CutoffSpec spec_;
    ConjugatePosterior posterior_;
    Eigen::MatrixXd beta_;        // p x draws
    std::vector<double> sigma2_;
};

} // namespace aet
