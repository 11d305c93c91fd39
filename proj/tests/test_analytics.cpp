#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "accumbias/analytics.hpp"
#include "oracles.hpp"

using namespace accumbias;
using Catch::Approx;

namespace {
const GoldRushParams defaults{};
}

TEST_CASE("normal primitives", "[analytics]") {
    CHECK(normal_cdf(1.959964) == Approx(0.975).margin(1e-7));
    CHECK(std::abs(normal_cdf(1.959964) - oracle::Phi(1.959964)) < 1e-12);
    CHECK(std::abs(two_sided_critical(0.05) - oracle::critical_005) < 1e-12);
    for (double z = -8.0; z <= 8.0; z += 0.25) {
        CHECK(std::abs(normal_cdf(z) - oracle::Phi(z)) < 1e-12);
        CHECK(std::abs(normal_pdf(z) - oracle::phi(z)) < 1e-15);
        CHECK(normal_cdf(z) + normal_sf(z) == Approx(1.0).epsilon(1e-14));
    }
    for (double p : {1e-8, 0.01, 0.3, 0.5, 0.9, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("tail expectation", "[analytics]") {
    CHECK(tail_expectation(1.959964) == Approx(oracle::tail_at_1959964).epsilon(1e-12));
    CHECK(tail_expectation(1.959964) == Approx(2.338).margin(1e-3));
    CHECK(std::abs(tail_expectation(-30.0)) < 1e-12);
    CHECK(tail_expectation(0.0) == Approx(oracle::tail_mean(0.0)).epsilon(1e-10));
    CHECK(tail_expectation(0.0) == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
    CHECK(tail_expectation(2.5) == Approx(oracle::tail_mean(2.5)).epsilon(1e-10));
    // The continued-fraction branch joins the direct formula without a jump;
    // the slope near 30 is about 1, so a 1e-9 step moves the value by about 1e-9.
    CHECK(tail_expectation(30.0 + 1e-9) - tail_expectation(30.0) == Approx(1e-9).margin(1e-11));
    CHECK(tail_expectation(8.0) == Approx(oracle::tail_mean(8.0)).epsilon(1e-9));
    CHECK(tail_expectation(40.0) > 40.0);
    CHECK(tail_expectation(40.0) == Approx(40.0 + 1.0 / 40.0).epsilon(1e-6));
}

TEST_CASE("tail expectation times tail mass is phi", "[analytics][property]") {
    for (double c = -5.0; c <= 5.0; c += 0.05) {
        CHECK(std::abs(tail_expectation(c) * normal_sf(c) - normal_pdf(c)) < 1e-10);
    }
}

TEST_CASE("truncated moments match quadrature", "[analytics]") {
    const double c = oracle::critical_005;
    for (auto [lo, hi] : {std::pair{-c, c}, std::pair{c, c + 30.0}, std::pair{-1.0, 2.5}}) {
        const auto m = truncated_normal_moments(lo, hi);
        const double mass = oracle::simpson(oracle::phi, lo, hi);
        const double mean = oracle::simpson([](double z) { return z * oracle::phi(z); }, lo, hi) / mass;
        const double second = oracle::simpson([](double z) { return z * z * oracle::phi(z); }, lo, hi) / mass;
        CHECK(m.mass == Approx(mass).epsilon(1e-10));
        CHECK(m.mean == Approx(mean).margin(1e-10));
        CHECK(m.variance == Approx(second - mean * mean).epsilon(1e-9));
    }
    CHECK_THROWS_AS(truncated_normal_moments(1.0, 1.0), invalid_input_error);
}

TEST_CASE("conditional expectations of single studies", "[analytics]") {
    CHECK(expected_pilot_given_next(defaults) == Approx(oracle::e_pilot).epsilon(1e-12));
    CHECK(expected_pilot_given_next(defaults) == Approx(0.487).margin(1e-3));
    CHECK(expected_later_given_next(defaults) == Approx(oracle::e_mid).epsilon(1e-12));
    CHECK(expected_later_given_next(defaults) == Approx(1.328).margin(1e-3));

    GoldRushParams no_sig = defaults;
    no_sig.omega_s1 = 0.0;
    CHECK(expected_pilot_given_next(no_sig) == 0.0);

    GoldRushParams stuck = defaults;
    stuck.omega_s1 = stuck.omega_ns1 = stuck.omega_x1 = 0.0;
    CHECK_THROWS_AS(expected_pilot_given_next(stuck), degenerate_policy_error);

    const auto a = make_gold_rush_analytics(defaults);
    CHECK(a.e_pilot_given_next >= 0.0);
    CHECK(a.e_mid_given_next >= a.e_pilot_given_next);
}

TEST_CASE("expected cumulative z", "[analytics]") {
    CHECK(expected_meta_z(1, defaults) == 0.0);
    for (int t = 2; t <= 6; ++t) {
        CHECK(expected_meta_z(t, defaults) == Approx(oracle::e_meta_z[t]).epsilon(1e-12));
    }
    CHECK(expected_meta_z(2, defaults) == Approx(0.344).margin(1e-3));
    CHECK(expected_meta_z(3, defaults) == Approx(1.048).margin(1e-3));
    GoldRushParams no_sig = defaults;
    no_sig.omega_s1 = 0.0;
    CHECK(expected_meta_z(2, no_sig) == 0.0);

    // Equal sizes through the size-vector overload give the same answer.
    for (int t = 2; t <= 6; ++t) {
        const std::vector<std::int64_t> sizes(static_cast<std::size_t>(t), 16);
        CHECK(expected_meta_z(sizes, defaults) == Approx(expected_meta_z(t, defaults)).epsilon(1e-14));
    }
    // Unequal sizes: sqrt(n_i)-weighted, last study unbiased.
    const std::vector<std::int64_t> sizes{4, 9, 100};
    const double want = (2.0 * oracle::e_pilot + 3.0 * oracle::e_mid) / std::sqrt(113.0);
    CHECK(expected_meta_z(sizes, defaults) == Approx(want).epsilon(1e-12));
}

TEST_CASE("analysis-time probabilities", "[analytics]") {
    CHECK(abar0(1, defaults) == 1.0);
    CHECK(abar0(2, defaults) == Approx(0.12).epsilon(1e-15));
    CHECK(std::abs(abar0(2, defaults) - 0.12) < 1e-15);
    CHECK(abar0(3, defaults) == Approx(0.00528).epsilon(1e-13));
    CHECK_THROWS_AS(abar0(0, defaults), invalid_input_error);
}

TEST_CASE("bias-only type-I rate", "[analytics]") {
    CHECK(bias_only_type1(1, defaults) == Approx(0.05).epsilon(1e-12));
    for (int t = 2; t <= 5; ++t) {
        CHECK(bias_only_type1(t, defaults) == Approx(oracle::bias_only[t]).epsilon(1e-10));
        CHECK(bias_only_type1(t, defaults) > 0.05);
    }
    CHECK(bias_only_type1(3, defaults) == Approx(0.182).margin(1e-3));
    CHECK(bias_only_type1_from_shift(40.0, 0.05) == Approx(1.0));
}

TEST_CASE("long-run significant fraction", "[analytics]") {
    CHECK(long_run_significant_fraction(defaults) == Approx(2.5 / 4.4).epsilon(1e-13));
    CHECK(long_run_significant_fraction(defaults) == Approx(0.568).margin(1e-3));
}

TEST_CASE("category enumeration", "[analytics]") {
    const auto e1 = enumerate_categories(1, defaults);
    const auto p1 = e1.paths(1);
    REQUIRE(p1.size() == 3);
    CHECK(p1[0].mass == Approx(0.025));
    CHECK(p1[1].mass == Approx(0.95));
    CHECK(p1[2].mass == Approx(0.025));

    const auto e2 = enumerate_categories(2, defaults);
    CHECK(e2.surviving_mass(2) == Approx(0.12).epsilon(1e-14));
    bool found = false;
    for (const auto& path : e2.paths(2)) {
        if (path.at(0) == Category::significant_positive && path.at(1) == Category::significant_positive) {
            CHECK(path.mass == Approx(0.000625).epsilon(1e-13));
            found = true;
        }
    }
    CHECK(found);
    CHECK_THROWS_AS(enumerate_categories(21, defaults), resource_error);
    CHECK_THROWS_AS(enumerate_categories(0, defaults), invalid_input_error);
}

TEST_CASE("enumeration reproduces the closed forms", "[analytics][property]") {
    const auto e = enumerate_categories(8, defaults);
    for (int t = 1; t <= 8; ++t) {
        CHECK(std::abs(e.surviving_mass(t) - abar0(t, defaults)) < 1e-12);
    }
    for (int t = 2; t <= 6; ++t) {
        CHECK(std::abs(e.conditional_mean_meta_z(t) - expected_meta_z(t, defaults)) < 1e-9);
    }
    // A parameterization with all three branches open.
    const GoldRushParams open{0.8, 0.3, 0.4, 0.9, 0.2, 0.1, 0.1};
    const auto eo = enumerate_categories(6, open);
    for (int t = 1; t <= 6; ++t) {
        CHECK(std::abs(eo.surviving_mass(t) - abar0(t, open)) < 1e-12);
    }
    for (int t = 2; t <= 6; ++t) {
        CHECK(std::abs(eo.conditional_mean_meta_z(t) - expected_meta_z(t, open)) < 1e-9);
    }
}

TEST_CASE("bias-only rate is above alpha at every t", "[analytics][property]") {
    for (int t = 2; t <= 30; ++t) CHECK(bias_only_type1(t, defaults) > defaults.alpha);
}

TEST_CASE("mixture variance decomposition", "[analytics]") {
    const auto one = mixture_variance_decomposition(std::vector{0.0}, std::vector{1.0}, std::vector{3.0});
    CHECK(one.mixture_var == Approx(1.0));
    CHECK(one.avg_component_var == Approx(1.0));
    const auto two = mixture_variance_decomposition(std::vector{-1.0, 1.0}, std::vector{0.0, 0.0},
                                                    std::vector{0.5, 0.5});
    CHECK(two.mixture_var == Approx(1.0));
    CHECK(two.avg_component_var == 0.0);
    CHECK_THROWS_AS(mixture_variance_decomposition(std::vector{0.0}, std::vector{1.0}, std::vector{0.0}),
                    invalid_input_error);
    CHECK_THROWS_AS(mixture_variance_decomposition(std::vector{0.0}, std::vector{1.0}, std::vector{-1.0}),
                    invalid_input_error);

    const auto comps = enumerate_categories(1, defaults).meta_z2_components();
    REQUIRE(comps.size() == 2);
    std::vector<double> m, v, w;
    for (const auto& c : comps) {
        m.push_back(c.mean);
        v.push_back(c.variance);
        w.push_back(c.weight);
    }
    CHECK(v[0] == Approx(oracle::z2_component_var_significant).epsilon(1e-10));
    CHECK(v[1] == Approx(oracle::z2_component_var_nonsignificant).epsilon(1e-10));
    const auto mix = mixture_variance_decomposition(m, v, w);
    CHECK(mix.mixture_var == Approx(oracle::z2_mixture_var).epsilon(1e-10));
    CHECK(mix.mixture_var > mix.avg_component_var);
    CHECK(mix.mixture_var > std::max(v[0], v[1]));
}

TEST_CASE("exact density of Z^(2) given T >= 2", "[analytics]") {
    const double mass = oracle::simpson([](double z) { return meta_z2_density(z, defaults); }, -12, 12);
    CHECK(mass == Approx(1.0).epsilon(1e-9));
    const double mean =
        oracle::simpson([](double z) { return z * meta_z2_density(z, defaults); }, -12, 12);
    CHECK(mean == Approx(oracle::e_meta_z[2]).epsilon(1e-9));
    const double second =
        oracle::simpson([](double z) { return z * z * meta_z2_density(z, defaults); }, -12, 12);
    CHECK(second - mean * mean == Approx(oracle::z2_mixture_var).epsilon(1e-8));
    CHECK(meta_z2_type1(defaults) == Approx(oracle::exact_type1_t2).epsilon(1e-10));
    const double c = two_sided_critical(0.05);
    CHECK(meta_z2_type1(defaults) ==
          Approx(oracle::gold_rush_type1_t2(c, 1.0, 0.1)).epsilon(1e-9));
    // The exact rate exceeds the shifted-normal approximation.
    CHECK(meta_z2_type1(defaults) > bias_only_type1(2, defaults));
}
