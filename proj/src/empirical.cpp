#include "aet/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aet {

double empirical_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    p = std::clamp(p, 0.0, 1.0);
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double w = h - static_cast<double>(lo);
    return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
}

Ecdf::Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw std::invalid_argument("Ecdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::quantile(double p) const {
    return empirical_quantile(sorted_, p);
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

} // namespace aet
