#include <cmath>
#include <random>

#include "doctest.h"

#include "dare/dose_response.hpp"
#include "dare/error.hpp"

using namespace dare;

TEST_CASE("exponential kernel values") {
  const auto spec = DoseResponseSpec::exponential();
  CHECK(response_prob(spec, std::nullopt, 0.0) == 0.0);
  CHECK(response_prob(spec, std::nullopt, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(response_prob_partials(spec, std::nullopt, 0.0).d_dose == 1.0);
}

TEST_CASE("beta-Poisson kernel values") {
  const auto spec = DoseResponseSpec::beta_poisson();
  CHECK(response_prob(spec, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(response_prob(spec, 2.0, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(response_prob(spec, 2.0, 0.0) == 0.0);
  CHECK(response_prob_partials(spec, 1.0, 1.0).d_dose == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("argument errors") {
  CHECK_THROWS_AS(response_prob(DoseResponseSpec::exponential(), std::nullopt, -1.0), Error);
  CHECK_THROWS_AS(response_prob(DoseResponseSpec::beta_poisson(), 0.0, 1.0), Error);
  CHECK_THROWS_AS(response_prob(DoseResponseSpec::beta_poisson(), std::nullopt, 1.0), Error);
  CHECK_THROWS_AS(response_prob(DoseResponseSpec::exponential(), 1.0, 1.0), Error);
}

TEST_CASE("probabilities are bounded, monotone and saturate") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> theta(0.5, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double t1 = theta(rng);
    for (auto spec : {DoseResponseSpec::exponential(), DoseResponseSpec::beta_poisson()}) {
      const std::optional<double> th = spec.kernel == Kernel::BetaPoisson ? std::optional(t1) : std::nullopt;
      double prev = 0.0;
      for (double d = 0.0; d < 200.0; d = d * 1.7 + 1e-6) {
        const double p = response_prob(spec, th, d);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p >= prev);
        prev = p;
      }
      // The beta-Poisson tail is (1 + D)^-theta_1, so 1e8 only reaches 1 - 1e-6 once theta_1 > 0.75.
      const double big = spec.kernel == Kernel::BetaPoisson && t1 < 0.75 ? 1e14 : 1e8;
      CHECK(response_prob(spec, th, big) > 1.0 - 1e-6);
    }
  }
}

TEST_CASE("small doses keep full relative precision") {
  // 1 - (1 + D)^-theta ~= theta D for tiny D
  const double d = 1e-14;
  CHECK(response_prob(DoseResponseSpec::beta_poisson(), 2.0, d) == doctest::Approx(2.0 * d).epsilon(1e-10));
  CHECK(response_prob(DoseResponseSpec::exponential(), std::nullopt, d) == doctest::Approx(d).epsilon(1e-10));
}

TEST_CASE("beta-Poisson approaches the exponential model for large theta_1") {
  // test-only construction: theta_2 = theta_1 / r, so 1 - (1 + r D / theta_1)^-theta_1 -> 1 - e^{-r D}
  const double r = 1.0, d = 1.0;
  const double exp_limit = 1.0 - std::exp(-r * d);
  double prev_gap = 1.0;
  for (double t1 : {1.0, 10.0, 1e3, 1e6}) {
    const double bp = -std::expm1(-t1 * std::log1p(r * d / t1));
    const double gap = std::abs(bp - exp_limit);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-4);
}

// Central differences with step h carry roundoff of order eps/h ~ 1e-10.
static bool fd_close(double analytic, double fd) { return std::abs(analytic - fd) <= 1e-6 * std::abs(fd) + 1e-9; }

TEST_CASE("partials match central finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> theta(0.1, 10.0), dose(0.0, 100.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const double t1 = theta(rng);
    const double d = std::max(dose(rng), 2 * h);
    const auto bp = DoseResponseSpec::beta_poisson();
    const auto ex = DoseResponseSpec::exponential();

    const auto pb = response_prob_partials(bp, t1, d);
    const double fd_dose = (response_prob(bp, t1, d + h) - response_prob(bp, t1, d - h)) / (2 * h);
    const double fd_theta = (response_prob(bp, t1 + h, d) - response_prob(bp, t1 - h, d)) / (2 * h);
    CHECK(fd_close(pb.d_dose, fd_dose));
    CHECK(fd_close(*pb.d_theta1, fd_theta));

    const auto pe = response_prob_partials(ex, std::nullopt, d);
    const double fd_exp = (response_prob(ex, std::nullopt, d + h) - response_prob(ex, std::nullopt, d - h)) / (2 * h);
    CHECK(fd_close(pe.d_dose, fd_exp));
    CHECK(!pe.d_theta1);
  }
}

TEST_CASE("log-dose evaluation stays finite for extreme doses") {
  for (double log_dose : {-800.0, -50.0, 0.0, 50.0, 800.0}) {
    const KernelPoint e = ExponentialKernel{}.at_log_dose(log_dose);
    const KernelPoint b = BetaPoissonKernel{2.0}.at_log_dose(log_dose);
    for (const auto& k : {e, b}) {
      CHECK(std::isfinite(k.prob));
      CHECK(std::isfinite(k.survival));
      CHECK(std::isfinite(k.d_log_dose));
      CHECK(std::isfinite(k.d_theta1));
      CHECK(k.prob + k.survival == doctest::Approx(1.0));
    }
  }
}
