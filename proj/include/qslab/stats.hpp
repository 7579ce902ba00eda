#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qslab {

/// Single-pass central moments up to order four plus the absolute third
/// moment about zero. Update and merge follow Pebay's formulas (the parallel
/// extension of Welford's recurrence), so per-worker accumulators merged in a
/// fixed order reproduce the sequential result to rounding.
class MomentAccumulator {
public:
    void add(double x);
    void merge(const MomentAccumulator& other);

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance (divisor count-1); zero for fewer than two values.
    double variance() const;
    /// Standard error of the sample variance, sqrt((m4 - m2^2)/count) with
    /// plug-in population moments.
    double variance_se() const;
    double skewness() const;
    double excess_kurtosis() const;
    /// (mean |x|^3)^(1/3) about the exact center 0.
    double abs_third_moment() const;
    /// Standard error of the mean.
    double mean_se() const;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
    double abs3_sum_ = 0.0;
};

/// (mean |x|^3)^(1/3) about 0 for a whole sample.
double abs_third_moment(std::span<const double> values);

/// Sorted sample for distribution-distance statistics.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    /// Fraction of the sample <= x.
    double operator()(double x) const;

private:
    std::vector<double> values_;
};

/// Standard normal distribution function, absolute error below 1e-10.
double normal_cdf(double x);

/// sup_x |F_m(x) - F(x)| against a reference distribution function.
template <class F>
double ks_distance(const EmpiricalCdf& sample, F&& reference) {
    const auto& xs = sample.values();
    const double m = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = reference(xs[i]);
        const double hi = (static_cast<double>(i) + 1.0) / m - f;
        const double lo = f - static_cast<double>(i) / m;
        if (hi > d) d = hi;
        if (lo > d) d = lo;
    }
    return d;
}

/// sup distance between two empirical distribution functions.
double ks_two_sample(const EmpiricalCdf& a, const EmpiricalCdf& b);

}  // namespace qslab
