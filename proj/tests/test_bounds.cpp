#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "wdbounds/bounds.hpp"
#include "wdbounds/coefficients.hpp"
#include "wdbounds/rng.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace wdb;

namespace {

// 50-digit evaluation of h, used as an independent oracle.
double h_oracle(double x) {
    using boost::multiprecision::cpp_bin_float_50;
    const cpp_bin_float_50 y(x);
    return static_cast<double>((1 + y) * boost::multiprecision::log1p(y) - y);
}

VarianceProfile constant_variance(std::size_t n, double v) {
    return VarianceProfile(std::vector<double>(n, v), VarianceSource::analytic);
}

}  // namespace

TEST_CASE("bennett_h values") {
    CHECK(bennett_h(0.0) == 0.0);
    CHECK_THAT(bennett_h(1.0), WithinAbs(2.0 * std::numbers::ln2 - 1.0, 1e-15));
    CHECK_THAT(bennett_h(0.2), WithinAbs(1.2 * std::log(1.2) - 0.2, 1e-15));
    CHECK_THAT(bennett_h(0.2), WithinAbs(0.018785868, 1e-9));
    CHECK_THROWS_AS(bennett_h(-1e-9), std::domain_error);
}

TEST_CASE("bennett_h is accurate near zero") {
    for (double x : {1e-12, 1e-8, 1e-5, 1e-3, 0.05, 0.0999, 0.1, 0.11, 3.0, 1e6}) {
        const double ref = h_oracle(x);
        CHECK_THAT(bennett_h(x), WithinRel(ref, 1e-9));
    }
    // leading term x^2 / 2
    CHECK_THAT(bennett_h(1e-10), WithinRel(0.5e-20, 1e-9));
}

TEST_CASE("bernstein_h1 and its inverse") {
    CHECK(bernstein_h1(0.0) == 0.0);
    CHECK_THAT(bernstein_h1(1.0), WithinAbs(2.0 - std::sqrt(3.0), 1e-15));
    CHECK_THAT(h1_inverse(bernstein_h1(2.5)), WithinAbs(2.5, 1e-12));
    CHECK_THROWS_AS(bernstein_h1(-1.0), std::domain_error);
    CHECK_THROWS_AS(h1_inverse(-1.0), std::domain_error);
    for (int i = 0; i <= 10000; ++i) {
        const double x = 100.0 * i / 10000.0;
        REQUIRE(std::fabs(h1_inverse(bernstein_h1(x)) - x) <= 1e-12);
        REQUIRE(bennett_h(x) >= bernstein_h1(x));
    }
}

TEST_CASE("iid Bernstein threshold") {
    CHECK_THAT(iid_bernstein_threshold(1000, 1.0 / 12.0, 1.0), WithinAbs(std::sqrt(2000.0 / 12.0) + 1.0 / 6.0, 1e-12));
    CHECK_THAT(iid_bernstein_threshold(1000, 1.0 / 12.0, 1.0), WithinAbs(13.0766, 1e-4));
    CHECK(iid_bernstein_threshold(12345, 0.0, 6.0) == 1.0);
    CHECK(iid_bernstein_threshold(100, 0.25, 0.0) == 0.0);
    CHECK_THROWS(iid_bernstein_threshold(0, 0.1, 1.0));
    CHECK_THROWS(iid_bernstein_threshold(10, -0.1, 1.0));
}

TEST_CASE("Hoeffding threshold") {
    std::vector<double> zeros(99, 0.0);
    CHECK_THAT(hoeffding_threshold(100, zeros, 2.0), WithinAbs(10.0, 1e-12));
    std::vector<double> one{1.0};
    CHECK_THAT(hoeffding_threshold(2, one, 2.0), WithinAbs(std::sqrt(10.0), 1e-12));

    std::vector<double> phi(9);
    for (std::size_t j = 1; j <= 9; ++j) phi[j - 1] = std::ldexp(1.0, -static_cast<int>(j));
    double brute = 1.0;  // j = n
    for (std::size_t j = 1; j <= 9; ++j) {
        const double f = 1.0 + 2.0 * static_cast<double>(10 - j) * phi[j - 1];
        brute += f * f;
    }
    CHECK_THAT(hoeffding_threshold(10, phi, 1.0), WithinAbs(std::sqrt(0.5 * brute), 1e-12));

    std::vector<double> bad{0.5, 1.5};
    CHECK_THROWS_AS(hoeffding_threshold(3, bad, 1.0), ProfileError);
    std::vector<double> short_phi{0.1};
    CHECK_THROWS(hoeffding_threshold(5, short_phi, 1.0));
}

TEST_CASE("variance envelope") {
    const VarianceProfile p({0.1, 0.3, 0.2}, VarianceSource::estimated);
    CHECK(std::vector<double>(p.envelope_values().begin(), p.envelope_values().end()) == std::vector<double>{0.3, 0.3, 0.2});
    const auto again = variance_envelope(p);
    CHECK(again.envelope(1) == 0.3);

    const auto flat = constant_variance(5, 0.2);
    for (std::size_t k = 1; k <= 5; ++k) CHECK(flat.envelope(k) == 0.2);

    const VarianceProfile rising({0.1, 0.2, 0.3, 0.4}, VarianceSource::estimated);
    for (std::size_t k = 1; k <= 4; ++k) CHECK(rising.envelope(k) == 0.4);

    CHECK_THROWS(VarianceProfile({-0.1}, VarianceSource::estimated));
    CHECK_THROWS(VarianceProfile({0.3}, VarianceSource::estimated));  // above k/4 at k = 1
    CHECK_THROWS(VarianceProfile({}, VarianceSource::estimated));
}

TEST_CASE("envelope law on random profiles") {
    Xoshiro256pp gen(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen() % 50;
        std::vector<double> s(n);
        for (std::size_t k = 0; k < n; ++k) s[k] = to_unit(gen()) * 0.25;
        const VarianceProfile p(s, VarianceSource::estimated);
        REQUIRE(p.envelope(n) == s[n - 1]);
        for (std::size_t k = 1; k < n; ++k) REQUIRE(p.envelope(k) == std::max(s[k - 1], p.envelope(k + 1)));
    }
}

TEST_CASE("select_k_star examples") {
    const DependenceProfile zero(std::vector<double>(10, 0.0), ProfileKind::phi_type);
    CHECK(select_k_star(zero, constant_variance(10, 0.0)).k == 1u);

    const auto doubling = doubling_map_profile(50);
    const auto sel = select_k_star(doubling, constant_variance(50, 0.25));
    CHECK(sel.k == 1u);
    CHECK(sel.variance_at_k == 0.25);

    const DependenceProfile ones(std::vector<double>(8, 1.0), ProfileKind::phi_type);
    const auto none = select_k_star(ones, constant_variance(8, 0.0));
    CHECK_FALSE(none.valid());
    CHECK_THROWS_AS(none.require(), NoValidBlockSizeError);
    CHECK_THROWS_AS(thm1_threshold(8, none, 1.0), NoValidBlockSizeError);

    CHECK_THROWS(select_k_star(zero, constant_variance(9, 0.1)));
}

TEST_CASE("select_k_star_prime examples") {
    const DependenceProfile zero(std::vector<double>(10, 0.0), ProfileKind::linf_type);
    CHECK(select_k_star_prime(zero, 10, 0.5).k == 1u);

    const auto doubling = doubling_map_profile(1000);
    CHECK(select_k_star_prime(doubling, 1000, 1.0).k == 5u);
    // k = 4: n delta'_4 = 6.944 > 4; k = 5: 2.778 <= 5
    CHECK_THAT(1000.0 * doubling(4), WithinAbs(6.944, 1e-3));
    CHECK_THAT(1000.0 * doubling(5), WithinAbs(2.778, 1e-3));

    const DependenceProfile ones(std::vector<double>(5, 1.0), ProfileKind::linf_type);
    CHECK_FALSE(select_k_star_prime(ones, 5, 0.5).valid());
    CHECK_THROWS_AS(select_k_star_prime(ones, 5, 0.0), std::domain_error);

    const DependenceProfile phi_kind(std::vector<double>(5, 0.0), ProfileKind::phi_type);
    CHECK_THROWS(select_k_star_prime(phi_kind, 5, 1.0));
    CHECK_THROWS(select_k_star_prime(zero, 11, 1.0));
}

TEST_CASE("selector minimality against an exhaustive scan") {
    Xoshiro256pp gen(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + gen() % 120;
        std::vector<double> delta(n), s(n);
        double level = to_unit(gen());
        for (std::size_t i = 0; i < n; ++i) {
            level *= std::sqrt(to_unit(gen()));
            delta[i] = level;
            s[i] = to_unit(gen()) * 0.25;
        }
        const double x = 0.01 + 10.0 * to_unit(gen());
        const DependenceProfile d(delta, ProfileKind::linf_type);
        const VarianceProfile v(s, VarianceSource::estimated);

        const auto a = select_k_star(d, v);
        const auto b = select_k_star_prime(d, n, x);
        auto holds1 = [&](std::size_t k) {
            double env = 0.0;
            for (std::size_t j = k; j <= n; ++j) env = std::max(env, s[j - 1]);
            return static_cast<double>(k) * delta[k - 1] <= env;
        };
        auto holds2 = [&](std::size_t k) { return static_cast<double>(n) * delta[k - 1] <= static_cast<double>(k) * x; };
        if (a.k) {
            REQUIRE(holds1(*a.k));
            for (std::size_t k = 1; k < *a.k; ++k) REQUIRE_FALSE(holds1(k));
        } else {
            for (std::size_t k = 1; k <= n; ++k) REQUIRE_FALSE(holds1(k));
        }
        if (b.k) {
            REQUIRE(holds2(*b.k));
            for (std::size_t k = 1; k < *b.k; ++k) REQUIRE_FALSE(holds2(k));
        } else {
            for (std::size_t k = 1; k <= n; ++k) REQUIRE_FALSE(holds2(k));
        }
    }
}

TEST_CASE("thm1 threshold") {
    CHECK_THAT(thm1_threshold(1000, 0.25, 1, 1.0), WithinAbs(5.8 * std::sqrt(250.0) + 1.5, 1e-12));
    CHECK_THAT(thm1_threshold(1000, 0.25, 1, 1.0), WithinAbs(93.206, 1e-3));
    CHECK(thm1_threshold(1000, 0.25, 1, 0.0) == 0.0);
    CHECK_THAT(thm1_threshold(1000, 0.0, 3, 2.0), WithinAbs(9.0, 1e-12));
    CHECK_THROWS(thm1_threshold(1000, 0.25, 0, 1.0));
}

TEST_CASE("thm2 threshold") {
    CHECK_THAT(thm2_threshold(1000, 0.185417, 5, 1.0), WithinAbs(2.0 * std::sqrt(185.417) + 6.7, 1e-12));
    CHECK_THAT(thm2_threshold(1000, 0.185417, 5, 1.0), WithinAbs(33.934, 1e-3));
    CHECK(thm2_threshold(1000, 0.185417, 5, 0.0) == 0.0);
    CHECK_THAT(thm2_threshold(1000, 0.0, 2, 3.0), WithinAbs(8.04, 1e-12));
    CHECK_THROWS_AS(thm2_threshold(10, BlockSelection{}, 1.0), NoValidBlockSizeError);
}

TEST_CASE("threshold monotonicity on a grid") {
    for (int i = 0; i < 100; ++i) {
        const double x = 0.1 * i, x2 = 0.1 * (i + 1);
        CHECK(iid_bernstein_threshold(100, 0.1, x) <= iid_bernstein_threshold(100, 0.1, x2));
        CHECK(iid_bernstein_threshold(100, 0.1, x) <= iid_bernstein_threshold(101, 0.1, x));
        CHECK(iid_bernstein_threshold(100, 0.1, x) <= iid_bernstein_threshold(100, 0.11, x));
        CHECK(thm1_threshold(100, 0.1, 3, x) <= thm1_threshold(100, 0.1, 3, x2));
        CHECK(thm1_threshold(100, 0.1, 3, x) <= thm1_threshold(101, 0.1, 3, x));
        CHECK(thm1_threshold(100, 0.1, 3, x) <= thm1_threshold(100, 0.11, 3, x));
        CHECK(thm2_threshold(100, 0.1, 3, x) <= thm2_threshold(100, 0.1, 3, x2));
        CHECK(thm2_threshold(100, 0.1, 3, x) <= thm2_threshold(101, 0.1, 3, x));
        CHECK(thm2_threshold(100, 0.1, 3, x) <= thm2_threshold(100, 0.11, 3, x));
        std::vector<double> phi(99, 0.01), phi_up(100, 0.01);
        CHECK(hoeffding_threshold(100, phi, x) <= hoeffding_threshold(100, phi, x2));
        CHECK(hoeffding_threshold(100, phi, x) <= hoeffding_threshold(101, phi_up, x));
    }
}

TEST_CASE("thm2 Bennett tail") {
    CHECK_THAT(thm2_bennett_tail(100, 1, 0.25, 0.0, 10.0), WithinAbs(std::exp(-50.0 * bennett_h(0.2)), 1e-15));
    CHECK_THAT(thm2_bennett_tail(100, 1, 0.25, 0.0, 10.0), WithinAbs(0.3909039, 1e-7));
    CHECK(thm2_bennett_tail(100, 3, 0.2, 0.01, 1.0) == 1.0);
    CHECK_THROWS_AS(thm2_bennett_tail(100, 3, 0.2, 0.01, 0.99), std::domain_error);
    CHECK(thm2_bennett_tail(100, 3, 0.0, 0.01, 1.5) == 0.0);
    CHECK(thm2_bennett_tail(100, 3, 0.0, 0.01, 1.0) == 1.0);
}

TEST_CASE("thm2 Bennett tail reduces to the classical Bennett bound") {
    for (std::size_t n : {1u, 10u, 1000u})
        for (double s2 : {0.01, 0.1, 0.25})
            for (double x : {0.0, 0.3, 4.0, 50.0}) {
                const long double v = 2.0L * n * s2;
                const double classical = static_cast<double>(std::exp(-v * h_oracle(x / v)));
                CHECK_THAT(thm2_bennett_tail(n, 1, s2, 0.0, x), WithinAbs(classical, 1e-12));
            }
}

TEST_CASE("Bennett tail is below exp(-x) at the h1-inverse threshold") {
    Xoshiro256pp gen(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + gen() % 5000;
        const std::size_t k = 1 + gen() % 40;
        const double s2 = 1e-4 + to_unit(gen()) * 0.25;
        const double d = to_unit(gen()) * 0.01;
        const double x = to_unit(gen()) * 30.0;
        const double a = 2.0 * static_cast<double>(n) * s2;
        const double kd = static_cast<double>(k);
        const double t = static_cast<double>(n) * d + a / kd * h1_inverse(kd * kd * x / a);
        REQUIRE(thm2_bennett_tail(n, k, s2, d, t) <= std::exp(-x) * (1.0 + 1e-12));
    }
}

TEST_CASE("varest bound") {
    const DependenceProfile zero(std::vector<double>(10, 0.0), ProfileKind::phi_type);
    CHECK(varest_bound(0.07, 0.2, zero, 7) == 0.07);
    const auto doubling = doubling_map_profile(64);
    const double expected = 1.0 / 12.0 + 0.5 * (4.0 / 9.0) * (0.5 + 0.125 + 1.0 / 24.0 + 1.0 / 64.0);
    CHECK_THAT(varest_bound(1.0 / 12.0, 0.25, doubling, 5), WithinAbs(expected, 1e-15));
    CHECK_THAT(varest_bound(1.0 / 12.0, 0.25, doubling, 5), WithinAbs(0.23495, 1e-5));
    CHECK(varest_bound(0.05, 0.25, doubling, 1) == 0.05);
    CHECK_THROWS_AS(varest_bound(0.05, 0.25, doubling, 65), std::out_of_range);
    CHECK_THROWS(varest_bound(0.05, 0.6, doubling, 2));
}

TEST_CASE("log-MGF diagnostics") {
    const double e = std::exp(1.0);
    CHECK(log_mgf_bound_thm1(0.0, 50, 50, 0.2, 0.1) == 0.0);
    CHECK_THAT(log_mgf_bound_thm1(0.1, 100, 10, 0.2, 0.0), WithinAbs(4.0 * 100 * 0.01 * 2.0 * (e - 2.0) * 0.2, 1e-12));
    CHECK_THAT(log_mgf_bound_thm1(0.1, 100, 10, 0.2, 0.0), WithinAbs(1.14925, 1e-5));
    CHECK_THAT(log_mgf_bound_thm1(1.0, 10, 1, 0.0, 0.5), WithinAbs(54.3656, 1e-4));
    CHECK_THROWS(log_mgf_bound_thm1(1.5, 10, 1, 0.0, 0.5));
    CHECK_THROWS(log_mgf_bound_thm1(0.1, 100, 9, 0.2, 0.0));
    CHECK(mgf_block_length(0.1, 100) == 10);
    CHECK(mgf_block_length(0.001, 100) == 100);
    CHECK(mgf_block_length(0.3, 100) == 3);

    CHECK(log_mgf_bound_thm2(0.0, 100, 2, 0.1, 0.01) == 0.0);
    CHECK_THAT(log_mgf_bound_thm2(0.5, 100, 2, 0.1, 0.0), WithinAbs(5.0 * (e - 2.0), 1e-12));
    CHECK_THAT(log_mgf_bound_thm2(2.0, 100, 3, 0.0, 0.01), WithinAbs(2.0, 1e-12));
    // small kt: series branch agrees with the direct formula
    CHECK_THAT(log_mgf_bound_thm2(1e-3, 100, 2, 0.1, 0.0), WithinRel(5.0 * (std::expm1(2e-3) - 2e-3), 1e-10));
}
