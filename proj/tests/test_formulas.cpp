#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qslab/formulas.hpp"
#include "qslab/rng.hpp"

using qslab::ExactValues;
using qslab::Rational;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286;

// Composite 16-point Gauss-Legendre over dyadic panels toward both endpoints;
// the integrand is analytic inside every panel, so the rule converges past
// 1e-12 even though the derivatives blow up at 0 and 1.
double integral_of_cost_c() {
    using boost::math::quadrature::gauss;
    const auto c = [](double x) { return ExactValues::cost_c(x); };
    double half = 0.0;
    double hi = 0.5;
    for (int k = 0; k < 54; ++k) {
        const double lo = hi * 0.5;
        half += gauss<double, 16>::integrate(c, lo, hi);
        hi = lo;
    }
    half += hi;  // remaining [0, 2^-55], where C is 1 up to O(hi log hi)
    return 2.0 * half;  // C(x) = C(1-x)
}

}  // namespace

TEST_CASE("harmonic numbers") {
    ExactValues exact(1000);
    CHECK(exact.harmonic(0) == 0.0);
    CHECK(exact.harmonic(1) == 1.0);
    CHECK(exact.harmonic(3) == doctest::Approx(11.0 / 6.0).epsilon(1e-15));
    CHECK(exact.harmonic2(2) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(exact.harmonic2(0) == 0.0);
}

TEST_CASE("memoized and direct evaluations agree") {
    ExactValues small(64);
    ExactValues large(100000);
    for (std::int64_t n : {100, 1024, 1500, 40000, 99999}) {
        CHECK(small.harmonic(n) == doctest::Approx(large.harmonic(n)).epsilon(1e-14));
        CHECK(small.harmonic2(n) == doctest::Approx(large.harmonic2(n)).epsilon(1e-14));
        CHECK(small.zeta2_tail(n) == doctest::Approx(large.zeta2_tail(n)).epsilon(1e-12));
        CHECK(small.sigma_sq(n) == doctest::Approx(large.sigma_sq(n)).epsilon(1e-12));
    }
}

TEST_CASE("zeta2 tails") {
    ExactValues exact(16);
    CHECK(exact.zeta2_tail(0) == doctest::Approx(kPi * kPi / 6.0).epsilon(1e-14));
    CHECK(exact.zeta2_tail(1) == doctest::Approx(kPi * kPi / 6.0 - 1.0).epsilon(1e-13));
    const double tail = exact.zeta2_tail(1000000);
    const double expansion = 1e-6 - 0.5e-12 + 1.0 / 6.0 * 1e-18;
    CHECK(tail == doctest::Approx(expansion).epsilon(1e-12));
    // The tail and the partial sum reassemble zeta(2).
    CHECK(exact.harmonic2(12345) + exact.zeta2_tail(12345) ==
          doctest::Approx(kPi * kPi / 6.0).epsilon(1e-14));
}

TEST_CASE("mean comparison count") {
    ExactValues exact(2000);
    CHECK(exact.mean_kn(0) == 0.0);
    CHECK(exact.mean_kn(1) == 0.0);
    CHECK(exact.mean_kn(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(exact.mean_kn(3) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
    CHECK(exact.mean_kn_exact(3) == Rational(8, 3));
    CHECK(exact.mean_kn_exact(8) == Rational(2369, 140));  // 18 * 761/280 - 32

    // (n+1) mu(n+1) = (n+2) mu(n) + 2n
    for (std::int64_t n = 0; n <= 1000; ++n) {
        const double lhs = static_cast<double>(n + 1) * exact.mean_kn(n + 1);
        const double rhs = static_cast<double>(n + 2) * exact.mean_kn(n) +
                           2.0 * static_cast<double>(n);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }

    // Divide-and-conquer form: mu(n) = n - 1 + (2/n) sum_{j<n} mu(j).
    double prefix = 0.0;  // sum of mu(j) for j < n
    for (std::int64_t n = 1; n <= 1000; ++n) {
        const double expected = static_cast<double>(n) - 1.0 +
                                2.0 / static_cast<double>(n) * prefix;
        CHECK(exact.mean_kn(n) == doctest::Approx(expected).epsilon(1e-9));
        prefix += exact.mean_kn(n);
    }
}

TEST_CASE("toll function C") {
    CHECK(ExactValues::cost_c(0.0) == 1.0);
    CHECK(ExactValues::cost_c(1.0) == 1.0);
    CHECK(ExactValues::cost_c(0.5) ==
          doctest::Approx(1.0 - 2.0 * std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(ExactValues::cost_c(-0.1), std::domain_error);
    CHECK_THROWS_AS(ExactValues::cost_c(1.1), std::domain_error);

    qslab::UniformStream s(qslab::MasterSeed{11}, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = s.next_uniform();
        CHECK(ExactValues::cost_c(x) ==
              doctest::Approx(ExactValues::cost_c(1.0 - x)).epsilon(1e-14));
    }

    CHECK(std::abs(integral_of_cost_c()) < 1e-10);
}

TEST_CASE("finite-n toll") {
    ExactValues exact(128);
    CHECK(exact.toll_cn(2, 1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(exact.toll_cn(3, 2) == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
    CHECK_THROWS_AS(exact.toll_cn(3, 0), std::invalid_argument);
    CHECK_THROWS_AS(exact.toll_cn(3, 4), std::invalid_argument);

    // Centering: the tolls average to zero over the pivot rank.
    for (std::int64_t n = 1; n <= 100; ++n) {
        double sum = 0.0;
        for (std::int64_t i = 1; i <= n; ++i) sum += exact.toll_cn(n, i);
        CHECK(std::abs(sum / static_cast<double>(n)) < 1e-12);
    }
}

TEST_CASE("residual variance formula") {
    ExactValues exact(100);
    const double var_y = 7.0 - 2.0 * kPi * kPi / 3.0;  // ~0.4202637
    CHECK(exact.sigma_sq(0) == doctest::Approx(var_y).epsilon(1e-13));
    CHECK(exact.sigma_sq(1) == doctest::Approx(exact.sigma_sq(0)).epsilon(1e-13));
    for (std::int64_t n = 0; n <= 100; ++n) CHECK(exact.sigma(n) > 0.0);
}

TEST_CASE("variance expansion gap stays small") {
    ExactValues exact(1 << 16);
    for (std::int64_t n : {1000, 10000, 100000, 1000000}) {
        const double gap = std::abs(static_cast<double>(n) * exact.sigma_sq(n) -
                                    (2.0 * std::log(static_cast<double>(n)) +
                                     2.0 * kEulerGamma - 3.0));
        CHECK(gap <= 0.05);
    }
}

TEST_CASE("limit theorem scales") {
    CHECK(ExactValues::clt_scale(10000) == doctest::Approx(23.300).epsilon(1e-4));
    CHECK(ExactValues::clt_scale(100) == doctest::Approx(3.2950511).epsilon(1e-7));
    CHECK_THROWS_AS(ExactValues::clt_scale(1), std::invalid_argument);
    CHECK_THROWS_AS(ExactValues::l3_prediction(1), std::invalid_argument);

    // l3_prediction(n) = sqrt(2 log n / n) * ||N||_3 with ||N||_3 = (2 sqrt(2/pi))^(1/3).
    const double norm3 = std::cbrt(2.0 * std::sqrt(2.0 / kPi));
    for (std::int64_t n : {2, 10, 1000, 1000000}) {
        const double lhs = ExactValues::l3_prediction(n);
        const double rhs = std::sqrt(2.0 * std::log(static_cast<double>(n)) /
                                     static_cast<double>(n)) * norm3;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}
