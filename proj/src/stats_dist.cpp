#include "aet/stats_dist.hpp"

#include "aet/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cfloat>
#include <cmath>
#include <limits>

namespace aet {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_cdf_at(double z) { return boost::math::cdf(kStdNormal, z); }

} // namespace

void TruncatedTSpec::validate() const {
    if (!(df > 0.0)) throw ConfigError("truncated t: df must be > 0");
    if (!(scale > 0.0)) throw ConfigError("truncated t: scale must be > 0");
    if (!(lower < upper)) throw ConfigError("truncated t: lower must be < upper");
    if (!std::isfinite(lower) || !std::isfinite(upper))
        throw ConfigError("truncated t: bounds must be finite");
}

void TruncatedNormalSpec::validate() const {
    if (!(sd > 0.0)) throw ConfigError("truncated normal: sd must be > 0");
    if (!(lower < upper)) throw ConfigError("truncated normal: lower must be < upper");
}

void TruncatedPoissonSpec::validate() const {
    if (!(rate > 0.0)) throw ConfigError("truncated poisson: rate must be > 0");
    if (max_value < 0) throw ConfigError("truncated poisson: max_value must be >= 0");
}

double truncated_t_cdf(const TruncatedTSpec& spec, double x) {
    spec.validate();
    if (x <= spec.lower) return 0.0;
    if (x >= spec.upper) return 1.0;
    const boost::math::students_t_distribution<double> t(spec.df);
    const double flo = boost::math::cdf(t, (spec.lower - spec.shift) / spec.scale);
    const double fhi = boost::math::cdf(t, (spec.upper - spec.shift) / spec.scale);
    const double fx = boost::math::cdf(t, (x - spec.shift) / spec.scale);
    return (fx - flo) / (fhi - flo);
}

double sample_truncated_t(const TruncatedTSpec& spec, RandomStream& rng) {
    spec.validate();
    const boost::math::students_t_distribution<double> t(spec.df);
    const double flo = boost::math::cdf(t, (spec.lower - spec.shift) / spec.scale);
    const double fhi = boost::math::cdf(t, (spec.upper - spec.shift) / spec.scale);
    const double u = flo + rng.uniform_pos() * (fhi - flo);
    const double x = spec.shift + spec.scale * boost::math::quantile(t, u);
    // quantile/cdf round trips can land a hair outside the interval
    return std::clamp(x, spec.lower, spec.upper);
}

double truncated_normal_cdf(const TruncatedNormalSpec& spec, double x) {
    spec.validate();
    if (x <= spec.lower) return 0.0;
    if (x >= spec.upper) return 1.0;
    const double flo = std::isfinite(spec.lower) ? std_normal_cdf_at((spec.lower - spec.mean) / spec.sd) : 0.0;
    const double fhi = std::isfinite(spec.upper) ? std_normal_cdf_at((spec.upper - spec.mean) / spec.sd) : 1.0;
    const double fx = std_normal_cdf_at((x - spec.mean) / spec.sd);
    return (fx - flo) / (fhi - flo);
}

double sample_truncated_normal(const TruncatedNormalSpec& spec, RandomStream& rng) {
    spec.validate();
    const double flo = std::isfinite(spec.lower) ? std_normal_cdf_at((spec.lower - spec.mean) / spec.sd) : 0.0;
    const double fhi = std::isfinite(spec.upper) ? std_normal_cdf_at((spec.upper - spec.mean) / spec.sd) : 1.0;
    const double u = flo + rng.uniform_pos() * (fhi - flo);
    const double x = spec.mean + spec.sd * boost::math::quantile(kStdNormal, std::clamp(u, DBL_MIN, 1.0 - DBL_EPSILON));
    return std::clamp(x, spec.lower, spec.upper);
}

double truncated_normal_mean(const TruncatedNormalSpec& spec) {
    spec.validate();
    const double alpha = std::isfinite(spec.lower) ? (spec.lower - spec.mean) / spec.sd : -kInf;
    const double beta = std::isfinite(spec.upper) ? (spec.upper - spec.mean) / spec.sd : kInf;
    const double phi_a = std::isfinite(alpha) ? boost::math::pdf(kStdNormal, alpha) : 0.0;
    const double phi_b = std::isfinite(beta) ? boost::math::pdf(kStdNormal, beta) : 0.0;
    const double z = (std::isfinite(beta) ? std_normal_cdf_at(beta) : 1.0) -
                     (std::isfinite(alpha) ? std_normal_cdf_at(alpha) : 0.0);
    return spec.mean + spec.sd * (phi_a - phi_b) / z;
}

double truncated_poisson_log_pmf(int k, const TruncatedPoissonSpec& spec) {
    spec.validate();
    if (k < 0 || k > spec.max_value) return -kInf;
    const double log_rate = std::log(spec.rate);
    // normalizer over {0..max} accumulated in log space
    double max_term = -kInf;
    for (int j = 0; j <= spec.max_value; ++j)
        max_term = std::max(max_term, j * log_rate - std::lgamma(j + 1.0));
    double z = 0.0;
    for (int j = 0; j <= spec.max_value; ++j)
        z += std::exp(j * log_rate - std::lgamma(j + 1.0) - max_term);
    return k * log_rate - std::lgamma(k + 1.0) - max_term - std::log(z);
}

double truncated_poisson_pmf(int k, const TruncatedPoissonSpec& spec) {
    const double lp = truncated_poisson_log_pmf(k, spec);
    return std::isfinite(lp) ? std::exp(lp) : 0.0;
}

int sample_truncated_poisson(const TruncatedPoissonSpec& spec, RandomStream& rng) {
    spec.validate();
    const double u = rng.uniform();
    double acc = 0.0;
    for (int k = 0; k <= spec.max_value; ++k) {
        acc += truncated_poisson_pmf(k, spec);
        if (u < acc) return k;
    }
    return spec.max_value;
}

double log_sample_inverse_gamma(double shape, double scale, RandomStream& rng) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ConfigError("inverse gamma: shape and scale must be > 0");
    // X ~ IG(a, b)  <=>  1/X ~ Gamma(a, rate = b)
    const double u = rng.uniform_pos();
    const boost::math::gamma_distribution<double> g(shape, 1.0 / scale);
    double q = 0.0;
    bool fallback = false;
    try {
        q = boost::math::quantile(g, u);
    } catch (const std::exception&) {
        fallback = true;
    }
    double log_q;
    if (fallback || q < DBL_MIN) {
        // lower-tail asymptote P(a, x) ~ x^a / Gamma(a+1): valid exactly where
        // the direct quantile underflows
        log_q = (std::log(u) + std::lgamma(shape + 1.0)) / shape - std::log(scale);
    } else {
        log_q = std::log(q);
    }
    return -log_q;
}

double sample_inverse_gamma(double shape, double scale, RandomStream& rng) {
    const double lx = log_sample_inverse_gamma(shape, scale, rng);
    if (lx >= std::log(DBL_MAX)) return DBL_MAX;
    return std::exp(lx);
}

double inverse_gamma_cdf(double x, double shape, double scale) {
    if (x <= 0.0) return 0.0;
    const boost::math::gamma_distribution<double> g(shape, 1.0 / scale);
    return boost::math::cdf(boost::math::complement(g, 1.0 / x));
}

double student_t_cdf(double x, double df) {
    return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

double student_t_quantile(double p, double df) {
    return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

double normal_cdf(double x) { return std_normal_cdf_at(x); }

double normal_quantile(double p) { return boost::math::quantile(kStdNormal, p); }

double chi_squared_quantile(double p, double df) {
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), p);
}

double log_normal_density(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

} // namespace aet
