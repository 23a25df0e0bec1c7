#pragma once

#include "aet/rng.hpp"

namespace aet {

// Location-scale Student-t truncated to [lower, upper]:
// X = shift + scale * T, T ~ t(df), conditioned on X in the interval.
struct TruncatedTSpec {
    double df = 5.0;
    double scale = 1.0;
    double shift = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    void validate() const; // throws ConfigError
};

// Normal(mean, sd) truncated to [lower, upper]; either bound may be infinite.
struct TruncatedNormalSpec {
    double mean = 0.0;
    double sd = 1.0;
    double lower = 0.0;
    double upper = 1.0;
    void validate() const;
};

// Poisson(rate) restricted to {0, 1, ..., max_value} and renormalized.
struct TruncatedPoissonSpec {
    double rate = 3.0;
    int max_value = 5;
    void validate() const;
};

double truncated_t_cdf(const TruncatedTSpec& spec, double x);
double sample_truncated_t(const TruncatedTSpec& spec, RandomStream& rng);

double truncated_normal_cdf(const TruncatedNormalSpec& spec, double x);
double sample_truncated_normal(const TruncatedNormalSpec& spec, RandomStream& rng);
double truncated_normal_mean(const TruncatedNormalSpec& spec);

double truncated_poisson_log_pmf(int k, const TruncatedPoissonSpec& spec);
double truncated_poisson_pmf(int k, const TruncatedPoissonSpec& spec);
int sample_truncated_poisson(const TruncatedPoissonSpec& spec, RandomStream& rng);

// Inverse-gamma(shape, scale) draw: density ~ x^{-shape-1} exp(-scale/x).
// The log variant never overflows; the plain variant clamps to DBL_MAX in the
// (astronomically heavy) upper tail that doubles cannot represent.
double log_sample_inverse_gamma(double shape, double scale, RandomStream& rng);
double sample_inverse_gamma(double shape, double scale, RandomStream& rng);
double inverse_gamma_cdf(double x, double shape, double scale);

// Thin wrappers over the underlying special-function library, so call sites
// stay free of its headers.
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);
double normal_cdf(double x);
double normal_quantile(double p);
double chi_squared_quantile(double p, double df);
double log_normal_density(double x, double mean, double sd);

} // namespace aet
