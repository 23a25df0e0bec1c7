#pragma once

#include <span>
#include <vector>

namespace aet {

// Linear-interpolation sample quantile (the R type-7 convention) on an
// ascending-sorted sample. p is clamped to [0,1].
double empirical_quantile(std::span<const double> sorted, double p);

// Empirical CDF of a fixed sample, with its interpolated quantile function.
// Used for the frozen reference distribution of biomarker marginals.
class Ecdf {
public:
    explicit Ecdf(std::vector<double> sample);

    // F(x) = (# sample values <= x) / n
    double operator()(double x) const;
    double quantile(double p) const;
    std::size_t size() const { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

// log(sum(exp(v))) guarded against overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

} // namespace aet
