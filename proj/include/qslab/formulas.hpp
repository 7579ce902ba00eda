#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qslab/rational.hpp"

namespace qslab {

/// Closed-form quantities of the comparison-count model: harmonic numbers,
/// the exact mean mu(n) = 2(n+1)H_n - 4n, the toll functions C and C_n, the
/// exact residual variance
///
///     sigma_sq(n) = (2 H_n + 1 + 6/(n+1)) / (n+1) - 4 * sum_{k>n} 1/k^2,
///
/// and the limit-theorem scale factors. Values up to `table_limit` are
/// memoized at construction; larger arguments fall back to direct summation
/// or asymptotic expansions. Read-only after construction, safe to share
/// across workers.
class ExactValues {
public:
    explicit ExactValues(std::int64_t table_limit = 1000000);

    std::int64_t table_limit() const { return limit_; }

    /// H_n, with H_0 = 0.
    double harmonic(std::int64_t n) const;
    /// Second-order harmonic number sum_{k<=n} 1/k^2.
    double harmonic2(std::int64_t n) const;
    /// Tail sum_{k=n+1}^inf 1/k^2, relative error below 1e-12.
    double zeta2_tail(std::int64_t n) const;

    /// mu(n) = 2(n+1)H_n - 4n; mu(0) = mu(1) = 0.
    double mean_kn(std::int64_t n) const;
    Rational mean_kn_exact(std::int64_t n) const;

    /// C_n(i) = (mu(i-1) + mu(n-i) - mu(n) + n - 1) / n for 1 <= i <= n.
    double toll_cn(std::int64_t n, std::int64_t i) const;

    double sigma_sq(std::int64_t n) const;
    double sigma(std::int64_t n) const;

    /// Toll function C(x) = 1 + 2x log x + 2(1-x) log(1-x) on [0,1],
    /// with the x log x := 0 convention at the endpoints.
    static double cost_c(double x) {
        if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("cost_c: argument outside [0,1]");
        const double a = x > 0.0 ? x * std::log(x) : 0.0;
        const double b = x < 1.0 ? (1.0 - x) * std::log1p(-x) : 0.0;
        return 1.0 + 2.0 * (a + b);
    }

    /// sqrt(n / (2 log n)), the normalization of the central limit theorem.
    static double clt_scale(std::int64_t n);
    /// 2 pi^{-1/6} sqrt(log n / n), the predicted L3 norm of the residual.
    static double l3_prediction(std::int64_t n);

private:
    double harmonic_direct(std::int64_t n) const;
    double zeta2_tail_direct(std::int64_t n) const;
    double sigma_sq_from(double h, double tail, std::int64_t n) const;

    std::int64_t limit_;
    std::vector<double> harmonic_;   // H_n
    std::vector<double> harmonic2_;  // sum 1/k^2
    std::vector<double> tail_;       // zeta2_tail(n)
    std::vector<double> sigma_sq_;
    std::vector<double> sigma_;
};

}  // namespace qslab
