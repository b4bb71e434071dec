#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smartseq/posterior.hpp"
#include "smartseq/rng.hpp"
#include "smartseq/thresholds.hpp"
#include "test_util.hpp"

using namespace smartseq;

TEST_CASE("approximate thresholds match the closed forms") {
    SUBCASE("pi = 0.01") {
        const ThresholdPair pair = approx_thresholds(ErrorBudget(0.05, 0.05), 0.01);
        CHECK(pair.t_l == 0.05);
        CHECK(pair.t_u == doctest::Approx(0.99 / 0.9905).epsilon(1e-12));
        CHECK(pair.lr_upper == doctest::Approx(1881.0).epsilon(1e-12));
    }
    SUBCASE("pi = 0.05") {
        const ThresholdPair pair = approx_thresholds(ErrorBudget(0.05, 0.05), 0.05);
        CHECK(pair.t_u == doctest::Approx(0.95 / 0.9525).epsilon(1e-12));
    }
    SUBCASE("gamma near 1 pushes t_u toward 1 - pi") {
        const ThresholdPair pair = approx_thresholds(ErrorBudget(0.05, 0.999999), 0.3);
        CHECK(std::fabs(pair.t_u - 0.7) < 1e-5);
    }
}

TEST_CASE("threshold pair invariants and round trip") {
    const RandomStream rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const RandomStream t = rng.child(trial);
        const double pi = 0.01 + 0.98 * t.uniform(0);
        double t_l = t.uniform(1), t_u = t.uniform(2);
        if (t_l > t_u) std::swap(t_l, t_u);
        t_l = std::max(t_l, 1e-6);
        t_u = std::min(std::max(t_u, t_l + 1e-6), 1.0 - 1e-9);
        const ThresholdPair pair = make_threshold_pair(t_l, t_u, pi);
        REQUIRE(pair.lr_lower < pair.lr_upper);
        // Back from the likelihood-ratio scale.
        const double t_l_back = t_or_from_lr(std::log(pair.lr_upper), pi);
        const double t_u_back = t_or_from_lr(std::log(pair.lr_lower), pi);
        REQUIRE(std::fabs(t_l_back - t_l) <= 1e-12);
        REQUIRE(std::fabs(t_u_back - t_u) <= 1e-12);
    }
}

TEST_CASE("the stringent upper threshold dominates the unstringent form") {
    const RandomStream rng(32);
    int checked = 0;
    for (int trial = 0; checked < 1000; ++trial) {
        const RandomStream t = rng.child(trial);
        const double pi = 0.01 + 0.98 * t.uniform(0);
        const double alpha = 0.01 + 0.98 * t.uniform(1);
        const double gamma = 0.01 + 0.98 * t.uniform(2);
        // The unstringent formula is only meaningful where its denominator is
        // positive (alpha below the share of nulls), and the pair itself
        // needs alpha below the upper cutoff.
        if (pi * gamma + 1.0 - pi - alpha <= 1e-9) continue;
        if (alpha >= (1.0 - pi) / (pi * gamma + 1.0 - pi) - 1e-9) continue;
        const ErrorBudget budget(alpha, gamma);
        REQUIRE(approx_thresholds(budget, pi).t_u > unstringent_upper_threshold(budget, pi));
        ++checked;
    }
}

TEST_CASE("Wald boundaries") {
    const WaldBoundaries sym = wald_boundaries(0.05, 0.05);
    CHECK(sym.a_tilde == doctest::Approx(-2.944439).epsilon(1e-6));
    CHECK(sym.b_tilde == doctest::Approx(2.944439).epsilon(1e-6));

    const WaldBoundaries degenerate = wald_boundaries(0.5, 0.5);
    CHECK(degenerate.a_tilde == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(degenerate.b_tilde == doctest::Approx(0.0).epsilon(1e-15));

    const WaldBoundaries asym = wald_boundaries(0.01, 0.2);
    CHECK(asym.a_tilde == doctest::Approx(std::log(0.2 / 0.99)).epsilon(1e-12));
    CHECK(asym.b_tilde == doctest::Approx(std::log(0.8 / 0.01)).epsilon(1e-12));
}

TEST_CASE("Gaussian KL divergence") {
    const KlDivergence equal_sd = kl_divergence_normal(0.0, 1.0, 3.0, 1.0);
    CHECK(equal_sd.d01 == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(equal_sd.d10 == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(equal_sd.d_kl == doctest::Approx(4.5).epsilon(1e-12));

    const KlDivergence same = kl_divergence_normal(1.3, 0.7, 1.3, 0.7);
    CHECK(same.d_kl == doctest::Approx(0.0).epsilon(1e-15));

    // Quadrature oracle for the asymmetric case.
    const auto directed_numeric = [](double m0, double s0, double m1, double s1) {
        return testutil::simpson(
            [&](double x) {
                const double g = std::exp(-0.5 * (x - m0) * (x - m0) / (s0 * s0)) /
                                 (s0 * std::sqrt(2.0 * kPi));
                const double lg = -0.5 * (x - m0) * (x - m0) / (s0 * s0) - std::log(s0);
                const double lh = -0.5 * (x - m1) * (x - m1) / (s1 * s1) - std::log(s1);
                return g * (lg - lh);
            },
            -60.0, 60.0, 40000);
    };
    const KlDivergence asym = kl_divergence_normal(0.0, 1.0, 0.0, 2.0);
    CHECK(asym.d01 == doctest::Approx(directed_numeric(0.0, 1.0, 0.0, 2.0)).epsilon(1e-6));
    CHECK(asym.d10 == doctest::Approx(directed_numeric(0.0, 2.0, 0.0, 1.0)).epsilon(1e-6));
    CHECK(asym.d01 != asym.d10);
    CHECK(asym.d_kl == std::max(asym.d01, asym.d10));
}

TEST_CASE("sample-size limit bounds") {
    KlDivergence kl{4.5, 4.5, 4.5};
    const LimitBounds b1 = limit_bounds(0.05, kl, 0.01, std::exp(1.0), 0.1);
    REQUIRE(b1.lower_tau.has_value());
    CHECK(*b1.lower_tau == doctest::Approx(std::log(25.0) / 4.5).epsilon(1e-12));
    CHECK(*b1.lower_tau == doctest::Approx(0.71531).epsilon(1e-4));
    CHECK(b1.upper_tau == doctest::Approx(1.1 / 4.5).epsilon(1e-12));

    const LimitBounds b2 = limit_bounds(0.05, kl, 0.25, 2.0, 0.1);
    CHECK(*b2.lower_tau == doctest::Approx(0.0).epsilon(1e-15));

    const LimitBounds b3 = limit_bounds(0.4, kl, 0.01, 2.0, 0.1);
    CHECK_FALSE(b3.lower_tau.has_value());

    KlDivergence asym{2.0, 5.0, 5.0};
    CHECK(limit_bounds(0.05, asym, 0.01, 2.0, 0.1).upper_tau ==
          doctest::Approx(1.1 * std::log(2.0) / 2.0).epsilon(1e-12));

    CHECK_THROWS_AS(limit_bounds(0.05, kl, 0.6, 2.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(limit_bounds(0.05, kl, 0.01, 0.9, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(limit_bounds(0.05, kl, 0.01, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("budget validation") {
    CHECK_THROWS_AS(ErrorBudget(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ErrorBudget(0.5, 1.0), std::invalid_argument);
    CHECK_NOTHROW(ErrorBudget(1e-9, 0.5));
}

namespace {

MixtureModel small_setting2(int p = 2000) {
    return MixtureModel(p, 0.05, 0.0, 1.0, AltMeans::constant(3.0));
}

CalibrationConfig small_mc() {
    CalibrationConfig mc;
    mc.p = 2000;
    mc.replications = 20;
    mc.tolerance = 0.01;
    mc.seed = 7442;
    return mc;
}

}  // namespace

TEST_CASE("common-random-number error surfaces are monotone") {
    ThresholdMonteCarlo mc(small_setting2(), small_mc(), 2);
    const double t_u = 0.99;
    double prev = -1.0;
    for (const double t_l : {0.01, 0.03, 0.05}) {
        const double fpr = mc.evaluate(t_l, t_u).fpr;
        CHECK(fpr >= prev);
        prev = fpr;
    }
    double prev_mdr = 2.0;
    for (const double t_u_grid : {0.90, 0.95, 0.99}) {
        const double mdr = mc.evaluate(0.05, t_u_grid).mdr;
        CHECK(mdr <= prev_mdr);
        prev_mdr = mdr;
    }
}

TEST_CASE("calibration lands inside the budget at the Monte Carlo resolution") {
    const ErrorBudget budget(0.05, 0.05);
    const CalibrationResult result =
        calibrate_oracle_thresholds(small_setting2(), budget, small_mc(), 2);
    CHECK(result.achieved_fpr <= budget.alpha + small_mc().tolerance);
    CHECK(result.achieved_mdr <= budget.gamma + small_mc().tolerance);
    CHECK(result.thresholds.t_l >= budget.alpha - 0.003);
    CHECK(result.thresholds.t_l < result.thresholds.t_u);

    // Fresh-seed check at a looser Monte Carlo tolerance.
    CalibrationConfig fresh = small_mc();
    fresh.seed = 99121;
    ThresholdMonteCarlo validator(small_setting2(), fresh, 2);
    const auto rates = validator.evaluate(result.thresholds.t_l, result.thresholds.t_u);
    CHECK(rates.fpr == doctest::Approx(0.05).epsilon(0.35));
    CHECK(rates.mdr == doctest::Approx(0.05).epsilon(0.35));
}

TEST_CASE("a vanishing alpha request returns a tiny lower threshold") {
    const CalibrationResult result = calibrate_oracle_thresholds(
        small_setting2(), ErrorBudget(1e-9, 0.5), small_mc(), 2);
    CHECK(result.achieved_fpr == 0.0);
    CHECK(result.thresholds.t_l <= 0.01);
}

TEST_CASE("infeasible budgets are rejected with the binding constraint") {
    SUBCASE("alpha above the reject-all ceiling") {
        try {
            calibrate_oracle_thresholds(small_setting2(), ErrorBudget(0.97, 0.5), small_mc(), 2);
            FAIL("expected InfeasibleBudgetError");
        } catch (const InfeasibleBudgetError& e) {
            CHECK(e.binding_constraint == "alpha");
        }
    }
    SUBCASE("gamma unattainable under a tight stage cap") {
        CalibrationConfig mc = small_mc();
        mc.cap = 1;
        const MixtureModel weak(2000, 0.05, 0.0, 1.0, AltMeans::constant(0.3),
                                /*alt_prior_sd=*/0.1);
        try {
            calibrate_oracle_thresholds(weak, ErrorBudget(0.05, 0.001), mc, 2);
            FAIL("expected InfeasibleBudgetError");
        } catch (const InfeasibleBudgetError& e) {
            CHECK(e.binding_constraint == "gamma");
        }
    }
}

TEST_CASE("calibration requires a constant signal-mean law") {
    const MixtureModel uniform_model(500, 0.1, 0.0, 1.0, AltMeans::uniform(2.0, 4.0));
    CHECK_THROWS_AS(ThresholdMonteCarlo(uniform_model, small_mc(), 1), std::invalid_argument);
}
