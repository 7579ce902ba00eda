#include "qslab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace qslab {

void MomentAccumulator::add(double x) {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ -
           4.0 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term1;
    abs3_sum_ += std::abs(x) * x * x;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    const double delta2 = delta * delta;
    const double delta3 = delta * delta2;
    const double delta4 = delta2 * delta2;

    MomentAccumulator merged;
    merged.n_ = n_ + other.n_;
    merged.mean_ = mean_ + delta * nb / n;
    merged.m2_ = m2_ + other.m2_ + delta2 * na * nb / n;
    merged.m3_ = m3_ + other.m3_ + delta3 * na * nb * (na - nb) / (n * n) +
                 3.0 * delta * (na * other.m2_ - nb * m2_) / n;
    merged.m4_ = m4_ + other.m4_ +
                 delta4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                 6.0 * delta2 * (na * na * other.m2_ + nb * nb * m2_) / (n * n) +
                 4.0 * delta * (na * other.m3_ - nb * m3_) / n;
    merged.abs3_sum_ = abs3_sum_ + other.abs3_sum_;
    *this = merged;
}

double MomentAccumulator::variance() const {
    if (n_ < 2) return 0.0;
    return m2_ / (static_cast<double>(n_) - 1.0);
}

double MomentAccumulator::variance_se() const {
    if (n_ < 2) throw std::invalid_argument("variance_se: needs at least two values");
    const double n = static_cast<double>(n_);
    const double m2 = m2_ / n;
    const double m4 = m4_ / n;
    return std::sqrt((m4 - m2 * m2) / n);
}

double MomentAccumulator::skewness() const {
    if (n_ < 2 || m2_ == 0.0) return 0.0;
    const double n = static_cast<double>(n_);
    return std::sqrt(n) * m3_ / std::pow(m2_, 1.5);
}

double MomentAccumulator::excess_kurtosis() const {
    if (n_ < 2 || m2_ == 0.0) return 0.0;
    const double n = static_cast<double>(n_);
    return n * m4_ / (m2_ * m2_) - 3.0;
}

double MomentAccumulator::abs_third_moment() const {
    if (n_ == 0) return 0.0;
    return std::cbrt(abs3_sum_ / static_cast<double>(n_));
}

double MomentAccumulator::mean_se() const {
    if (n_ < 2) throw std::invalid_argument("mean_se: needs at least two values");
    return std::sqrt(variance() / static_cast<double>(n_));
}

double abs_third_moment(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("abs_third_moment: empty sample");
    double sum = 0.0;
    for (const double x : values) sum += std::abs(x) * x * x;
    return std::cbrt(sum / static_cast<double>(values.size()));
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("EmpiricalCdf: empty sample");
    std::sort(values_.begin(), values_.end());
}

double EmpiricalCdf::operator()(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

double ks_two_sample(const EmpiricalCdf& a, const EmpiricalCdf& b) {
    const auto& xa = a.values();
    const auto& xb = b.values();
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double x = std::min(xa[i], xb[j]);
        while (i < xa.size() && xa[i] <= x) ++i;
        while (j < xb.size() && xb[j] <= x) ++j;
        const double diff = std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
        if (diff > d) d = diff;
    }
    return d;
}

}  // namespace qslab
