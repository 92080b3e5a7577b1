#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "test_util.hpp"
#include "xdiff/diffusion.hpp"
#include "xdiff/rng.hpp"
#include "xdiff/schedule.hpp"

using namespace xdiff;

TEST_SUITE_BEGIN("schedule");

TEST_CASE("linear_schedule endpoints and hand product") {
  const NoiseSchedule one = linear_schedule(1, 0.2, 0.2);
  CHECK(one.beta == std::vector<double>{0.2});

  const NoiseSchedule two = linear_schedule(2, 0.1, 0.3);
  CHECK(two.beta[0] == doctest::Approx(0.1));
  CHECK(two.beta[1] == doctest::Approx(0.3));
  CHECK(two.alpha_bar[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(two.alpha_bar[1] == doctest::Approx(0.63).epsilon(1e-12));

  CHECK_THROWS_AS(linear_schedule(0, 0.1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(10, 0.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(10, 0.3, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(10, 0.3, 1.0), std::invalid_argument);
}

TEST_CASE("alpha_bar is a strictly decreasing running product") {
  const NoiseSchedule s = linear_schedule(1000, 1e-4, 2e-2);
  double prod = 1.0;
  for (int t = 1; t <= s.T(); ++t) {
    prod *= 1.0 - s.beta_at(t);
    CHECK(std::abs(s.alpha_bar_at(t) - prod) <= 1e-12);
    if (t > 1) CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
  }
  CHECK(s.alpha_bar_at(0) == 1.0);
  CHECK_THROWS_AS(s.alpha_bar_at(1001), std::out_of_range);
}

TEST_CASE("forward_noise closed form") {
  const Slice z0 = testutil::random_slice(6, 41);
  const Slice eps = testutil::random_slice(6, 42, -1.0, 1.0);
  const NoiseSchedule s = linear_schedule(10, 1e-4, 2e-2);

  SUBCASE("zero signal leaves only scaled noise") {
    const Slice zeros = constant_slice(6, 0.0);
    const Slice zt = forward_noise(zeros, 5, eps, s);
    const double b = std::sqrt(1.0 - s.alpha_bar_at(5));
    for (std::size_t i = 0; i < zt.data.size(); ++i) {
      CHECK(zt.data[i] == doctest::Approx(b * eps.data[i]).epsilon(1e-15));
    }
  }
  SUBCASE("near-degenerate schedule keeps the signal") {
    // With alpha_bar ~ 1 the noised slice is the input up to sqrt(1-ab).
    const NoiseSchedule tiny = linear_schedule(1, 1e-12, 1e-12);
    const Slice zt = forward_noise(z0, 1, constant_slice(6, 0.0), tiny);
    for (std::size_t i = 0; i < zt.data.size(); ++i) {
      CHECK(zt.data[i] == doctest::Approx(z0.data[i]).epsilon(1e-9));
    }
  }
  SUBCASE("t bounds") {
    CHECK_THROWS_AS(forward_noise(z0, 0, eps, s), std::out_of_range);
    CHECK_THROWS_AS(forward_noise(z0, 11, eps, s), std::out_of_range);
  }
}

TEST_CASE("forward_noise matches its Monte Carlo moments") {
  const NoiseSchedule s = linear_schedule(100, 1e-3, 2e-2);
  const int side = 8;
  const Slice z0 = testutil::random_slice(side, 43);
  Rng rng(44);
  const int draws = 4000;
  const int t = 50;
  const double ab = s.alpha_bar_at(t);

  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  for (int k = 0; k < draws; ++k) {
    std::vector<double> eps(static_cast<std::size_t>(side) * side);
    for (double& e : eps) e = rng.normal();
    const Slice zt = forward_noise(z0, t, Slice(side, eps), s);
    for (std::size_t i = 0; i < zt.data.size(); ++i) {
      const double centered = zt.data[i] - std::sqrt(ab) * z0.data[i];
      sum += centered;
      sumsq += centered * centered;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - mean * mean;
  const double want_var = 1.0 - ab;
  const double se_mean = std::sqrt(want_var / static_cast<double>(n));
  const double se_var = want_var * std::sqrt(2.0 / (static_cast<double>(n) - 1.0));
  CHECK(std::abs(mean) <= 3.0 * se_mean);
  CHECK(std::abs(var - want_var) <= 3.0 * se_var);
}

TEST_SUITE_END();
