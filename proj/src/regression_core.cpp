#include "aet/regression_core.hpp"

#include "aet/error.hpp"
#include "aet/model_structure.hpp"
#include "aet/stats_dist.hpp"

#include <cassert>
#include <cmath>

namespace aet {

void PriorSpec::validate() const {
    if (!(coef_variance > 0.0)) throw ConfigError("prior.coef_variance must be > 0");
    if (!(sigma_shape > 0.0)) throw ConfigError("prior.sigma_shape must be > 0");
    if (!(sigma_scale > 0.0)) throw ConfigError("prior.sigma_scale must be > 0");
    if (!(lambda_terms > 0.0)) throw ConfigError("prior.lambda_terms must be > 0");
    if (!(lambda_knots > 0.0)) throw ConfigError("prior.lambda_knots must be > 0");
}

PriorSpec anchored_to_response(PriorSpec prior, const Eigen::VectorXd& y) {
    if (y.size() < 2) return prior;
    const double var = (y.array() - y.mean()).square().sum() / (y.size() - 1.0);
    if (std::isfinite(var) && var > 0.0) prior.coef_variance /= var;
    return prior;
}

ConjugatePosterior conjugate_posterior(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const PriorSpec& prior) {
    prior.validate();
    assert(design.rows() == y.size());
    const int n = static_cast<int>(design.rows());
    const int p = static_cast<int>(design.cols());
    assert(p >= 1);

    const double v = prior.coef_variance;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p, p) / v;
    if (n > 0) a.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
    a.triangularView<Eigen::StrictlyUpper>() = a.transpose();

    ConjugatePosterior post;
    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    post.chol_lower = llt.matrixL();
    const Eigen::VectorXd xty = n > 0 ? Eigen::VectorXd(design.transpose() * y)
                                      : Eigen::VectorXd(Eigen::VectorXd::Zero(p));
    post.mean = llt.solve(xty);
    post.shape = prior.sigma_shape + 0.5 * n;
    post.scale = prior.sigma_scale + 0.5 * (y.squaredNorm() - post.mean.dot(xty));

    const double logdet_a = 2.0 * post.chol_lower.diagonal().array().log().sum();
    post.log_marginal = -0.5 * n * std::log(2.0 * M_PI) - 0.5 * p * std::log(v) -
                        0.5 * logdet_a + prior.sigma_shape * std::log(prior.sigma_scale) -
                        post.shape * std::log(post.scale) + std::lgamma(post.shape) -
                        std::lgamma(prior.sigma_shape);
    return post;
}

CoefficientState sample_coefficients(const ConjugatePosterior& post, RandomStream& rng) {
    CoefficientState s;
    s.sigma2 = sample_inverse_gamma(post.shape, post.scale, rng);
    Eigen::VectorXd z(post.dim());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    // beta | sigma2 ~ N(mean, sigma2 * A^{-1}); A = L L^T so solve L^T w = z
    s.beta = post.mean +
             std::sqrt(s.sigma2) *
                 post.chol_lower.transpose().triangularView<Eigen::Upper>().solve(z);
    return s;
}

double log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                      const CoefficientState& coef) {
    if (!(coef.sigma2 > 0.0)) throw std::domain_error("log_likelihood: sigma2 must be > 0");
    assert(design.rows() == y.size() && design.cols() == coef.beta.size());
    const int n = static_cast<int>(design.rows());
    if (n == 0) return 0.0;
    const double rss = (y - design * coef.beta).squaredNorm();
    return -0.5 * n * std::log(2.0 * M_PI * coef.sigma2) - 0.5 * rss / coef.sigma2;
}

int cutoff_pattern(const BioVec& x, const CutoffSpec& spec, int dim) {
    if (static_cast<int>(spec.thresholds.size()) < dim)
        throw ConfigError("cutoff thresholds missing for a requested biomarker");
    int pattern = 0;
    for (int j = 0; j < dim; ++j)
        if (x[static_cast<std::size_t>(j)] > spec.thresholds[static_cast<std::size_t>(j)])
            pattern |= 1 << j;
    return pattern;
}

Eigen::VectorXd cutoff_subset_row(int pattern, int dim) {
    // canonical subset order: intercept, singles, pairs, triple
    const int half = 1 << dim;
    Eigen::VectorXd row(half);
    row[0] = 1.0;
    const auto terms = canonical_terms(dim);
    for (int j = 0; j < half - 1; ++j)
        row[j + 1] = (terms[static_cast<std::size_t>(j)] & ~pattern) == 0 ? 1.0 : 0.0;
    return row;
}

Eigen::MatrixXd cutoff_design(const Dataset& data, const CutoffSpec& spec) {
    const int dim = data.dim();
    const int half = 1 << dim;
    Eigen::MatrixXd X(data.n(), 2 * half);
    const auto pts = data.points();
    for (int i = 0; i < data.n(); ++i) {
        const int pat = cutoff_pattern(pts[static_cast<std::size_t>(i)], spec, dim);
        const Eigen::VectorXd row = cutoff_subset_row(pat, dim);
        X.row(i).head(half) = row;
        X.row(i).tail(half) = data.treat[i] * row;
    }
    return X;
}

double cutoff_gamma_at(const BioVec& x, const CutoffSpec& spec, int dim,
                       const Eigen::VectorXd& beta) {
    const int half = 1 << dim;
    assert(beta.size() == 2 * half);
    const int pat = cutoff_pattern(x, spec, dim);
    return cutoff_subset_row(pat, dim).dot(beta.tail(half));
}

} // namespace aet
