#pragma once

#include "aet/patient.hpp"
#include "aet/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace aet {

// Prior hyperparameters shared by every model formulation.
//   beta | sigma2 ~ N(0, sigma2 * coef_variance * I)
//   sigma2       ~ InverseGamma(sigma_shape, sigma_scale)
//   lambda_terms : rate of the truncated-Poisson prior on the active term count
//   lambda_knots : rate of the truncated-Poisson prior on per-term knot counts
struct PriorSpec {
    double coef_variance = 20.0;
    double sigma_shape = 0.01;
    double sigma_scale = 0.01;
    double lambda_terms = 3.0;
    double lambda_knots = 3.0;
    void validate() const; // throws ConfigError
};

// coef_variance states the prior variance of a coefficient on the raw outcome
// scale, but the conjugate machinery multiplies it by sigma^2. Dividing by a
// plug-in variance estimate (the sample variance of y) keeps the stated
// magnitude while preserving conjugacy. Degenerate responses (fewer than two
// observations, or zero variance) leave the prior unchanged.
PriorSpec anchored_to_response(PriorSpec prior, const Eigen::VectorXd& y);

struct CoefficientState {
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
};

// Exact Normal-Inverse-Gamma posterior for one fixed design, together with
// the log marginal likelihood of y under that design (coefficients and noise
// variance integrated out analytically).
struct ConjugatePosterior {
    Eigen::VectorXd mean;       // posterior mean of beta
    Eigen::MatrixXd chol_lower; // L with L L^T = X^T X + I / coef_variance
    double shape = 0.0;         // posterior inverse-gamma shape
    double scale = 0.0;         // posterior inverse-gamma scale
    double log_marginal = 0.0;
    int dim() const { return static_cast<int>(mean.size()); }
};

ConjugatePosterior conjugate_posterior(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const PriorSpec& prior);

// sigma2 from the posterior inverse-gamma, then beta | sigma2 from the
// posterior normal.
CoefficientState sample_coefficients(const ConjugatePosterior& post, RandomStream& rng);

// Gaussian log likelihood of y given a design and coefficients.
// Throws std::domain_error when coef.sigma2 <= 0.
double log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                      const CoefficientState& coef);

// Dichotomization thresholds, one per biomarker (strict inequality x > t).
struct CutoffSpec {
    std::vector<double> thresholds{60.0, 8.0, 20.0};
};

// Bit mask of threshold exceedances for one patient.
int cutoff_pattern(const BioVec& x, const CutoffSpec& spec, int dim);

// Design with 2^(dim+1) columns: all products of the threshold indicators in
// canonical subset order (intercept first), then the same block times the
// treatment indicator.
Eigen::MatrixXd cutoff_design(const Dataset& data, const CutoffSpec& spec);

// Treatment effect at x under the Cutoff model: the treatment-block part of
// the design row at x, dotted with beta.
double cutoff_gamma_at(const BioVec& x, const CutoffSpec& spec, int dim,
                       const Eigen::VectorXd& beta);

// The indicator row over subset columns for a given exceedance pattern
// (length 2^dim); entry j is 1 iff subset_j is contained in the pattern.
Eigen::VectorXd cutoff_subset_row(int pattern, int dim);

} // namespace aet
