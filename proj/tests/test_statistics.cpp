#include <doctest.h>

#include <cmath>
#include <vector>

#include "pvar/errors.hpp"
#include "pvar/rng.hpp"
#include "pvar/simulate.hpp"
#include "pvar/statistics.hpp"

using namespace pvar;

TEST_CASE("statistics: backward differences by hand") {
  const std::vector<double> x = {1.0, 3.0, 6.0, 10.0, 15.0};
  CHECK(increments(x, 1) == std::vector<double>{2.0, 3.0, 4.0, 5.0});
  CHECK(increments(x, 2) == std::vector<double>{1.0, 1.0, 1.0});
  // Quadratic data: third differences vanish identically.
  CHECK(increments(x, 3) == std::vector<double>{0.0, 0.0});

  CHECK_THROWS_AS(increments(x, 0), domain_error);
  CHECK_THROWS_AS(increments(x, 9), domain_error);
  CHECK_THROWS_AS(increments({1.0, 2.0}, 2), domain_error);
}

TEST_CASE("statistics: raw power variation by hand") {
  const std::vector<double> x = {0.0, 2.0, 1.0, 3.0};
  // First differences 2, -1, 2 at p = 1.5.
  CHECK(power_variation(x, 1.5, 1) ==
        doctest::Approx(1.0 + 4.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(power_variation(x, 1.0, 1) == 5.0);
  CHECK_THROWS_AS(power_variation(x, 0.0, 1), domain_error);
  CHECK_THROWS_AS(power_variation(x, -1.0, 1), domain_error);
}

TEST_CASE("statistics: normalization exponents per regime") {
  CHECK(scale_exponent(LimitRegime::kJump, 0.3, 0.0, 2.0, 1) ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK(scale_exponent(LimitRegime::kErgodic, 0.25, 1.5, 1.0, 1) ==
        doctest::Approx(-1.0 / 12.0).epsilon(1e-13));
  CHECK(scale_exponent(LimitRegime::kSmooth, 1.5, 1.8, 2.0, 2) ==
        doctest::Approx(3.0).epsilon(1e-15));

  CHECK(to_string(LimitRegime::kJump) == "jump");
  CHECK(regime_from_string("ergodic") == LimitRegime::kErgodic);
  CHECK(regime_from_string("smooth") == LimitRegime::kSmooth);
  CHECK_THROWS_AS(regime_from_string("turbulent"), config_error);
}

TEST_CASE("statistics: regime witnesses name the violated inequality") {
  // Valid corners of each regime.
  CHECK_NOTHROW(check_regime(LimitRegime::kJump, 0.3, 0.0, 2.0, 1));
  CHECK_NOTHROW(check_regime(LimitRegime::kJump, 0.3, 1.5, 2.0, 1));
  CHECK_NOTHROW(check_regime(LimitRegime::kErgodic, 0.25, 1.5, 1.0, 1));
  CHECK_NOTHROW(check_regime(LimitRegime::kSmooth, 0.8, 1.8, 2.0, 1));

  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kJump, 0.8, 0.0, 2.0, 1),
                       doctest::Contains("alpha < k - 1/p"), domain_error);
  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kJump, 0.3, 1.8, 1.5, 1),
                       doctest::Contains("needs p > beta"), domain_error);
  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kErgodic, 0.25, 0.0, 1.0, 1),
                       doctest::Contains("needs a stable driver"),
                       domain_error);
  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kErgodic, 0.25, 1.5, 2.0, 1),
                       doctest::Contains("needs p < beta"), domain_error);
  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kErgodic, 0.5, 1.5, 1.0, 1),
                       doctest::Contains("alpha < k - 1/beta"), domain_error);
  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kSmooth, 0.8, 1.8, 0.5, 1),
                       doctest::Contains("needs p >= 1"), domain_error);
  CHECK_THROWS_WITH_AS(check_regime(LimitRegime::kSmooth, 0.4, 1.8, 2.0, 1),
                       doctest::Contains("alpha > k - 1/max(beta,p)"),
                       domain_error);
}

TEST_CASE("statistics: scaled statistic assembles its parts") {
  const std::vector<double> x = {0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
  PowerVariationResult r =
      scale_statistic(x, 0.6, 1, LimitRegime::kErgodic, 0.2, 1.8);
  CHECK(r.n == 8);
  CHECK(r.raw == doctest::Approx(8.0).epsilon(1e-15));
  const double e = 0.6 * (0.2 + 1.0 / 1.8) - 1.0;
  CHECK(r.exponent == doctest::Approx(e).epsilon(1e-13));
  CHECK(r.scaled == doctest::Approx(std::pow(8.0, e) * 8.0).epsilon(1e-13));
  // The witness check runs first.
  CHECK_THROWS_AS(
      scale_statistic(x, 2.5, 1, LimitRegime::kErgodic, 0.2, 1.8),
      domain_error);
}

TEST_CASE("statistics: fluctuation rate exponents") {
  // First differences: rate 1 - 1/rho with rho = (1-alpha) beta.
  const double rho = (1.0 - 0.25) * 1.8;
  CHECK(second_order_rate_exponent(0.25, 1.8, 1) ==
        doctest::Approx(1.0 - 1.0 / rho).epsilon(1e-14));
  CHECK(second_order_rate_exponent(0.2, 1.8, 2) == 0.5);

  CHECK_THROWS_WITH_AS(second_order_rate_exponent(0.6, 1.8, 1),
                       doctest::Contains("(1-alpha)*beta in (1,2)"),
                       domain_error);  // rho = 0.72
  CHECK_THROWS_WITH_AS(second_order_rate_exponent(0.0, 2.0, 1),
                       doctest::Contains("(1-alpha)*beta in (1,2)"),
                       domain_error);  // rho = 2: boundary excluded
  CHECK_THROWS_WITH_AS(second_order_rate_exponent(0.9, 1.8, 2),
                       doctest::Contains("alpha < k - 2/beta"), domain_error);
}

TEST_CASE("statistics: centered fluctuation statistic") {
  CHECK_THROWS_WITH_AS(
      second_order_statistic({0.0, 1.0, 0.0, 1.0, 0.0}, 1.0, 1, 0.25, 1.8,
                             1.0),
      doctest::Contains("p < beta/2"), domain_error);

  const std::vector<double> x = {0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
  const double p = 0.6, alpha = 0.2, beta = 1.8, limit = 1.0;
  const double gamma = 1.0 - 1.0 / ((1.0 - alpha) * beta);
  const double scaled = std::pow(8.0, p * (alpha + 1.0 / beta) - 1.0) * 8.0;
  CHECK(second_order_statistic(x, p, 1, alpha, beta, limit) ==
        doctest::Approx(std::pow(8.0, gamma) * (scaled - limit))
            .epsilon(1e-12));
}

TEST_CASE("statistics: dyadic ratio estimator") {
  // Linear path: both resolutions see constant increments, so the estimator
  // returns the pure scaling answer H = 1 for every p.
  std::vector<double> lin;
  for (int i = 0; i <= 8; ++i) lin.push_back(i / 8.0);
  RatioEstimate r = ratio_estimator(lin, 0.7);
  CHECK(r.H_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.v_fine == doctest::Approx(8.0 * std::pow(0.125, 0.7)).epsilon(1e-13));
  CHECK(r.v_coarse ==
        doctest::Approx(4.0 * std::pow(0.25, 0.7)).epsilon(1e-13));

  CHECK_THROWS_AS(ratio_estimator({0.0, 1.0, 2.0}, 1.0), domain_error);
  CHECK_THROWS_AS(ratio_estimator({0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 1.0),
                  domain_error);  // odd n = 5
  // Alternating path: the coarse grid sees a constant path, degenerate.
  CHECK_THROWS_AS(ratio_estimator({0.0, 1.0, 0.0, 1.0, 0.0}, 1.0),
                  domain_error);
}

TEST_CASE("statistics: ratio estimator recovers self-similarity") {
  // Gaussian fractional path with H = alpha + 1/2 = 0.8.
  SamplePath path =
      simulate_tangent_lfsm(0.3, 2.0, 1.0, 1.0, 4096, SeedStream{3, 5});
  RatioEstimate r = ratio_estimator(path.values, 1.0);
  CHECK(std::abs(r.H_hat - 0.8) < 0.1);
  // Frozen spot value: deterministic given the stream.
  CHECK(r.H_hat == doctest::Approx(0.7674).epsilon(2e-3));
}

TEST_CASE("statistics: scaling-law regression identifies both branches") {
  SamplePath path =
      simulate_tangent_lfsm(0.25, 1.5, 1.0, 1.0, 8192, SeedStream{21, 3});
  const std::vector<double> powers = {0.5, 1.0, 2.0, 3.0};
  const std::vector<int> grid = {128, 512, 2048, 8192};
  PowerLawFit fit = log_power_regression(path.values, powers, 1, grid);

  CHECK(fit.powers == powers);
  CHECK(fit.augmented == false);
  CHECK(fit.conclusive == true);
  for (double r2 : fit.r_squared) CHECK(r2 >= 0.9);
  CHECK(fit.split_index == 2);
  // True H = alpha + 1/beta = 0.9167, a = alpha, crossing at beta.
  CHECK(std::abs(fit.H_hat - 0.9167) <= 0.07);
  CHECK(std::abs(fit.alpha_hat - 0.25) <= 0.08);
  CHECK(std::abs(fit.beta_hat - 1.5) <= 0.25);
  // Frozen spot values for the pinned stream.
  CHECK(fit.H_hat == doctest::Approx(0.9414).epsilon(2e-3));
  CHECK(fit.alpha_hat == doctest::Approx(0.2437).epsilon(1e-2));
  CHECK(fit.beta_hat == doctest::Approx(1.4333).epsilon(5e-3));

  // A single caller power cannot straddle the crossing: the fit must say it
  // extended the list.
  PowerLawFit one = log_power_regression(path.values, {1.0}, 1, grid);
  CHECK(one.augmented == true);
}

TEST_CASE("statistics: scaling-law regression rejects bad grids") {
  std::vector<double> flat(129, 1.0);
  std::vector<double> ramp;
  for (int i = 0; i <= 128; ++i) ramp.push_back(i);

  CHECK_THROWS_WITH_AS(
      log_power_regression(ramp, {1.0}, 1, {32, 128}),
      doctest::Contains("at least 3 grid sizes"), domain_error);
  CHECK_THROWS_WITH_AS(
      log_power_regression(ramp, {1.0}, 1, {8, 24, 128}),
      doctest::Contains("must divide"), domain_error);
  CHECK_THROWS_WITH_AS(
      log_power_regression(ramp, {1.0}, 1, {32, 32, 128}),
      doctest::Contains("strictly increasing"), domain_error);
  CHECK_THROWS_WITH_AS(
      log_power_regression(flat, {1.0}, 1, {8, 32, 128}),
      doctest::Contains("degenerate"), domain_error);
}
