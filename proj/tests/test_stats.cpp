#include <cmath>
#include <vector>

#include "doctest.h"
#include "qslab/rng.hpp"
#include "qslab/stats.hpp"
#include "test_support.hpp"

using qslab::EmpiricalCdf;
using qslab::ks_distance;
using qslab::ks_two_sample;
using qslab::MomentAccumulator;
using qslab::normal_cdf;

TEST_CASE("moment accumulator basics") {
    MomentAccumulator acc;
    for (const double x : {1.0, 2.0, 3.0}) acc.add(x);
    CHECK(acc.count() == 3);
    CHECK(acc.mean() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(acc.variance() == doctest::Approx(1.0).epsilon(1e-15));

    MomentAccumulator sym;
    for (const double x : {-1.0, 0.0, 1.0}) sym.add(x);
    CHECK(sym.skewness() == doctest::Approx(0.0));
}

TEST_CASE("merge equals accumulating the concatenation") {
    MomentAccumulator a, b, whole;
    for (const double x : {1.0, 2.0}) { a.add(x); whole.add(x); }
    b.add(3.0);
    whole.add(3.0);
    a.merge(b);
    CHECK(a.count() == whole.count());
    CHECK(a.mean() == doctest::Approx(whole.mean()).epsilon(1e-12));
    CHECK(a.variance() == doctest::Approx(whole.variance()).epsilon(1e-12));

    // Property: random batches, merged in either order, match the single pass.
    qslab::UniformStream s(qslab::MasterSeed{33}, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n1 = 1 + s.next_below(200);
        const auto n2 = 1 + s.next_below(200);
        MomentAccumulator left, right, both;
        for (std::uint64_t i = 0; i < n1; ++i) {
            const double x = s.next_uniform() * 10.0 - 5.0;
            left.add(x);
            both.add(x);
        }
        for (std::uint64_t i = 0; i < n2; ++i) {
            const double x = s.next_uniform() * 10.0 - 5.0;
            right.add(x);
            both.add(x);
        }
        MomentAccumulator lr = left;
        lr.merge(right);
        MomentAccumulator rl = right;
        rl.merge(left);
        for (const MomentAccumulator* m : {&lr, &rl}) {
            CHECK(m->count() == both.count());
            CHECK(m->mean() == doctest::Approx(both.mean()).epsilon(1e-11));
            CHECK(m->variance() == doctest::Approx(both.variance()).epsilon(1e-11));
            CHECK(m->abs_third_moment() ==
                  doctest::Approx(both.abs_third_moment()).epsilon(1e-11));
            CHECK(m->excess_kurtosis() ==
                  doctest::Approx(both.excess_kurtosis()).epsilon(1e-9));
        }
        CHECK(both.variance() >= 0.0);
    }
}

TEST_CASE("absolute third moment about zero") {
    MomentAccumulator acc;
    acc.add(-1.0);
    acc.add(1.0);
    CHECK(acc.abs_third_moment() == doctest::Approx(1.0).epsilon(1e-15));

    MomentAccumulator zero;
    zero.add(0.0);
    CHECK(zero.abs_third_moment() == 0.0);

    const std::vector<double> pair{-1.0, 1.0};
    CHECK(qslab::abs_third_moment(pair) == doctest::Approx(1.0).epsilon(1e-15));

    // 1e6 standard normals: (2 sqrt(2/pi))^(1/3) within 3 SE (delta method).
    qslab::UniformStream s(qslab::MasterSeed{77}, 0);
    std::vector<double> xs(1000000);
    for (double& x : xs) x = qslab::test::next_normal(s);
    double m3 = 0.0, m6 = 0.0;
    for (const double x : xs) {
        const double a3 = std::abs(x) * x * x;
        m3 += a3;
        m6 += a3 * a3;
    }
    m3 /= static_cast<double>(xs.size());
    m6 /= static_cast<double>(xs.size());
    const double abs3 = qslab::abs_third_moment(xs);
    const double expected = std::cbrt(2.0 * std::sqrt(2.0 / 3.14159265358979324));
    const double se = std::sqrt((m6 - m3 * m3) / static_cast<double>(xs.size())) /
                      (3.0 * std::pow(m3, 2.0 / 3.0));
    CHECK(std::abs(abs3 - expected) <= 3.0 * se);
}

TEST_CASE("normal distribution function") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
    qslab::UniformStream s(qslab::MasterSeed{9}, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = 8.0 * (s.next_uniform() - 0.5);
        CHECK(normal_cdf(-x) == doctest::Approx(1.0 - normal_cdf(x)).epsilon(1e-12));
    }
    double prev = 0.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double x = -8.0 + 16.0 * static_cast<double>(i) / 1000000.0;
        const double f = normal_cdf(x);
        CHECK(f >= prev);
        prev = f;
    }
    CHECK(prev <= 1.0);
}

TEST_CASE("one-sample KS distance") {
    CHECK(ks_distance(EmpiricalCdf({0.0}), normal_cdf) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ks_distance(EmpiricalCdf({-1.0, 1.0}), normal_cdf) ==
          doctest::Approx(0.34134).epsilon(1e-4));

    // Quantile construction: sample at (i - 1/2)/m quantiles gives KS = 0.5/m.
    const std::size_t m = 1000;
    std::vector<double> xs(m);
    for (std::size_t i = 0; i < m; ++i)
        xs[i] = qslab::test::normal_quantile((static_cast<double>(i) + 0.5) /
                                             static_cast<double>(m));
    CHECK(ks_distance(EmpiricalCdf(xs), normal_cdf) <= 0.5 / static_cast<double>(m) + 1e-9);
    CHECK_THROWS_AS(EmpiricalCdf({}), std::invalid_argument);
}

TEST_CASE("two-sample KS distance") {
    const std::vector<double> sample{0.3, -1.2, 0.8};
    CHECK(ks_two_sample(EmpiricalCdf(sample), EmpiricalCdf(sample)) == 0.0);
    CHECK(ks_two_sample(EmpiricalCdf({0.0}), EmpiricalCdf({1.0})) ==
          doctest::Approx(1.0).epsilon(1e-15));

    qslab::UniformStream s(qslab::MasterSeed{13}, 1);
    std::vector<double> a(20000), b(20000);
    for (double& x : a) x = qslab::test::next_normal(s);
    for (double& x : b) x = qslab::test::next_normal(s);
    const EmpiricalCdf ca(a), cb(b);
    const double d_ab = ks_two_sample(ca, cb);
    CHECK(d_ab == ks_two_sample(cb, ca));
    CHECK(d_ab >= 0.0);
    CHECK(d_ab <= 1.0);
    const double threshold = 1.63 * std::sqrt(2.0 / 20000.0);
    if (d_ab > threshold)
        MESSAGE("two independent batches exceeded the 1% quantile: ", d_ab);
}

TEST_CASE("standard error of the variance") {
    MomentAccumulator acc;
    for (const double x : {1.0, 2.0, 3.0, 4.0}) acc.add(x);
    // m2 = 1.25, m4 = 2.5625 about the mean 2.5: sqrt((m4 - m2^2)/4) = 0.5.
    CHECK(acc.variance_se() == doctest::Approx(0.5).epsilon(1e-12));

    MomentAccumulator constant;
    for (int i = 0; i < 10; ++i) constant.add(4.2);
    CHECK(constant.variance_se() == doctest::Approx(0.0));

    qslab::UniformStream s(qslab::MasterSeed{14}, 0);
    MomentAccumulator normal;
    for (int i = 0; i < 200000; ++i) normal.add(qslab::test::next_normal(s));
    CHECK(normal.variance_se() ==
          doctest::Approx(std::sqrt(2.0 / 200000.0) * normal.variance()).epsilon(0.05));

    MomentAccumulator one;
    one.add(1.0);
    CHECK_THROWS_AS(one.variance_se(), std::invalid_argument);
}
