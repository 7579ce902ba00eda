#include "qslab/formulas.hpp"

#include <numbers>

namespace qslab {

namespace {

constexpr double kEulerGamma = 0.57721566490153286;
constexpr double kZeta2 = std::numbers::pi * std::numbers::pi / 6.0;

// Kahan-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

ExactValues::ExactValues(std::int64_t table_limit) : limit_(table_limit) {
    if (limit_ < 1) throw std::invalid_argument("ExactValues: table_limit must be positive");
    const auto size = static_cast<std::size_t>(limit_) + 1;
    harmonic_.resize(size);
    harmonic2_.resize(size);
    tail_.resize(size);
    sigma_sq_.resize(size);
    sigma_.resize(size);

    CompensatedSum h, h2;
    harmonic_[0] = 0.0;
    harmonic2_[0] = 0.0;
    for (std::int64_t k = 1; k <= limit_; ++k) {
        const double inv = 1.0 / static_cast<double>(k);
        h.add(inv);
        h2.add(inv * inv);
        harmonic_[static_cast<std::size_t>(k)] = h.sum;
        harmonic2_[static_cast<std::size_t>(k)] = h2.sum;
    }

    // Backward recurrence keeps the tail sums accurate: terms grow as the
    // index decreases, so each addition is of comparable magnitude.
    tail_[static_cast<std::size_t>(limit_)] = zeta2_tail_direct(limit_);
    for (std::int64_t n = limit_ - 1; n >= 0; --n) {
        const double term = 1.0 / (static_cast<double>(n + 1) * static_cast<double>(n + 1));
        tail_[static_cast<std::size_t>(n)] = tail_[static_cast<std::size_t>(n + 1)] + term;
    }

    for (std::int64_t n = 0; n <= limit_; ++n) {
        const auto i = static_cast<std::size_t>(n);
        sigma_sq_[i] = sigma_sq_from(harmonic_[i], tail_[i], n);
        sigma_[i] = std::sqrt(sigma_sq_[i]);
    }
}

double ExactValues::harmonic_direct(std::int64_t n) const {
    if (n <= 1024) {
        CompensatedSum h;
        for (std::int64_t k = 1; k <= n; ++k) h.add(1.0 / static_cast<double>(k));
        return h.sum;
    }
    const double x = static_cast<double>(n);
    const double x2 = x * x;
    return std::log(x) + kEulerGamma + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) +
           1.0 / (120.0 * x2 * x2);
}

double ExactValues::zeta2_tail_direct(std::int64_t n) const {
    // Explicit backward summation of 10^4 terms, then the trigamma expansion
    // 1/m - 1/(2m^2) + 1/(6m^3) for the remainder beyond m = n + 10^4.
    constexpr std::int64_t kExplicitTerms = 10000;
    const std::int64_t m = n + kExplicitTerms;
    const double md = static_cast<double>(m);
    double tail = 1.0 / md - 1.0 / (2.0 * md * md) + 1.0 / (6.0 * md * md * md);
    for (std::int64_t k = m; k > n; --k) {
        const double kd = static_cast<double>(k);
        tail += 1.0 / (kd * kd);
    }
    return tail;
}

double ExactValues::sigma_sq_from(double h, double tail, std::int64_t n) const {
    const double np1 = static_cast<double>(n) + 1.0;
    const double value = (2.0 * h + 1.0 + 6.0 / np1) / np1 - 4.0 * tail;
    if (!(value > 0.0))
        throw std::logic_error("sigma_sq: nonpositive value, formula or summation bug");
    return value;
}

double ExactValues::harmonic(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("harmonic: n must be nonnegative");
    if (n <= limit_) return harmonic_[static_cast<std::size_t>(n)];
    return harmonic_direct(n);
}

double ExactValues::harmonic2(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("harmonic2: n must be nonnegative");
    if (n <= limit_) return harmonic2_[static_cast<std::size_t>(n)];
    return kZeta2 - zeta2_tail_direct(n);
}

double ExactValues::zeta2_tail(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("zeta2_tail: n must be nonnegative");
    if (n <= limit_) return tail_[static_cast<std::size_t>(n)];
    return zeta2_tail_direct(n);
}

double ExactValues::mean_kn(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("mean_kn: n must be nonnegative");
    return 2.0 * (static_cast<double>(n) + 1.0) * harmonic(n) - 4.0 * static_cast<double>(n);
}

Rational ExactValues::mean_kn_exact(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("mean_kn_exact: n must be nonnegative");
    Rational h = 0;
    for (std::int64_t k = 1; k <= n; ++k) h += Rational(1, k);
    return Rational(2 * (n + 1)) * h - Rational(4 * n);
}

double ExactValues::toll_cn(std::int64_t n, std::int64_t i) const {
    if (n < 1) throw std::invalid_argument("toll_cn: n must be positive");
    if (i < 1 || i > n) throw std::invalid_argument("toll_cn: index outside [1, n]");
    return (mean_kn(i - 1) + mean_kn(n - i) - mean_kn(n) + static_cast<double>(n) - 1.0) /
           static_cast<double>(n);
}

double ExactValues::sigma_sq(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("sigma_sq: n must be nonnegative");
    if (n <= limit_) return sigma_sq_[static_cast<std::size_t>(n)];
    return sigma_sq_from(harmonic(n), zeta2_tail(n), n);
}

double ExactValues::sigma(std::int64_t n) const {
    if (n < 0) throw std::invalid_argument("sigma: n must be nonnegative");
    if (n <= limit_) return sigma_[static_cast<std::size_t>(n)];
    return std::sqrt(sigma_sq(n));
}

double ExactValues::clt_scale(std::int64_t n) {
    if (n < 2) throw std::invalid_argument("clt_scale: n must be at least 2");
    return std::sqrt(static_cast<double>(n) / (2.0 * std::log(static_cast<double>(n))));
}

double ExactValues::l3_prediction(std::int64_t n) {
    if (n < 2) throw std::invalid_argument("l3_prediction: n must be at least 2");
    const double logn = std::log(static_cast<double>(n));
    return 2.0 * std::pow(std::numbers::pi, -1.0 / 6.0) *
           std::sqrt(logn / static_cast<double>(n));
}

}  // namespace qslab
