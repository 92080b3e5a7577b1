#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "../common/fd_check.hpp"
#include "test_util.hpp"
#include "xdiff/denoiser.hpp"
#include "xdiff/diffusion.hpp"

using namespace xdiff;

TEST_SUITE_BEGIN("denoiser");

namespace {

Condition simple_condition(int side, std::uint64_t seed) {
  return Condition{testutil::random_slice(side, seed), embed_pose(2, side, 45.0, 10.0)};
}

std::vector<ConvLayerShape> small_arch() {
  return {{4, 9, 3, 3}, {4, 4, 3, 3}, {1, 4, 3, 3}};
}

std::size_t arch_params(const std::vector<ConvLayerShape>& arch) {
  std::size_t total = 0;
  for (const auto& sh : arch) total += sh.param_count();
  return total;
}

}  // namespace

TEST_CASE("zero parameters predict the zero clean slice") {
  const auto arch = small_arch();
  const ConvDenoiser net(arch, std::vector<double>(arch_params(arch), 0.0));
  const NoiseSchedule sched = linear_schedule(10, 1e-3, 2e-2);
  const Slice z = testutil::random_slice(8, 81);
  const int t = 3;
  const Slice out = net.apply(z, t, sched, simple_condition(8, 82));
  // With every parameter zero the clean-slice estimate is identically zero,
  // so the noise estimate collapses to the rescaled input.
  const double ab = sched.alpha_bar_at(t);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    CHECK(out.data[i] == doctest::Approx(z.data[i] / std::sqrt(1.0 - ab)).epsilon(1e-15));
    CHECK(z.data[i] - std::sqrt(1.0 - ab) * out.data[i] == doctest::Approx(0.0));  // implied x0
  }
}

TEST_CASE("apply is deterministic and validates shapes") {
  const ConvDenoiser net = ConvDenoiser::make(6, 3, 2, 123);
  const NoiseSchedule sched = linear_schedule(10, 1e-3, 2e-2);
  const Slice z = testutil::random_slice(8, 83, -1.0, 1.0);
  const Condition cond = simple_condition(8, 84);
  const Slice a = net.apply(z, 5, sched, cond);
  const Slice b = net.apply(z, 5, sched, cond);
  CHECK(a.data == b.data);
  for (double v : a.data) CHECK(std::isfinite(v));

  CHECK_THROWS_AS(net.apply(z, 5, sched, Condition{testutil::random_slice(9, 1), cond.pose}),
                  std::invalid_argument);
  CHECK_THROWS_AS(net.apply(z, 0, sched, cond), std::out_of_range);
  CHECK_THROWS_AS(net.apply(z, 11, sched, cond), std::out_of_range);
}

TEST_CASE("architecture validation") {
  auto params_for = [](const std::vector<ConvLayerShape>& arch) {
    return std::vector<double>(arch_params(arch), 0.0);
  };
  // Single layer is not enough.
  std::vector<ConvLayerShape> single{{1, 9, 3, 3}};
  CHECK_THROWS_AS(ConvDenoiser(single, params_for(single)), std::invalid_argument);
  // Wrong input channel count.
  std::vector<ConvLayerShape> bad_in{{4, 8, 3, 3}, {1, 4, 3, 3}};
  CHECK_THROWS_AS(ConvDenoiser(bad_in, params_for(bad_in)), std::invalid_argument);
  // Even kernel.
  std::vector<ConvLayerShape> even{{4, 9, 4, 4}, {1, 4, 3, 3}};
  CHECK_THROWS_AS(ConvDenoiser(even, params_for(even)), std::invalid_argument);
  // Middle layer must be square.
  std::vector<ConvLayerShape> rect{{4, 9, 3, 3}, {6, 4, 3, 3}, {1, 6, 3, 3}};
  CHECK_THROWS_AS(ConvDenoiser(rect, params_for(rect)), std::invalid_argument);
  // Parameter length mismatch.
  const auto arch = small_arch();
  CHECK_THROWS_AS(ConvDenoiser(arch, std::vector<double>(arch_params(arch) + 1, 0.0)),
                  std::invalid_argument);
  // Valid.
  CHECK_NOTHROW(ConvDenoiser(arch, params_for(arch)));
}

TEST_CASE("output perturbation is bounded by the stacked layer norms") {
  const ConvDenoiser net = ConvDenoiser::make(5, 3, 2, 321);
  const NoiseSchedule sched = linear_schedule(10, 1e-3, 2e-2);
  const int side = 8;
  const Condition cond = simple_condition(side, 85);
  const Slice z = testutil::random_slice(side, 86, -1.0, 1.0);
  const int t = 4;

  // Induced infinity-norm bound per conv layer: max over output channels of
  // the absolute weight sum; relu is 1-Lipschitz, a residual adds 1. The
  // analytic head adds the rescaled passthrough of the noisy slice.
  double trunk_bound = 1.0;
  std::size_t off = 0;
  const auto& arch = net.arch();
  for (std::size_t li = 0; li < arch.size(); ++li) {
    const ConvLayerShape& sh = arch[li];
    double layer_norm = 0.0;
    for (std::uint32_t co = 0; co < sh.out_ch; ++co) {
      double row = 0.0;
      const std::size_t wbase = off + static_cast<std::size_t>(co) * sh.in_ch * sh.kh * sh.kw;
      for (std::size_t k = 0; k < static_cast<std::size_t>(sh.in_ch) * sh.kh * sh.kw; ++k) {
        row += std::abs(net.params()[wbase + k]);
      }
      layer_norm = std::max(layer_norm, row);
    }
    const bool middle = li > 0 && li + 1 < arch.size();
    trunk_bound *= middle ? layer_norm + 1.0 : layer_norm;
    off += sh.param_count();
  }
  const double ab = sched.alpha_bar_at(t);
  const double bound =
      1.0 / std::sqrt(1.0 - ab) + std::sqrt(ab / (1.0 - ab)) * trunk_bound;

  Rng rng(87);
  for (int trial = 0; trial < 5; ++trial) {
    Slice z2 = z;
    double dmax = 0.0;
    for (double& v : z2.data) {
      const double dv = rng.uniform(-0.1, 0.1);
      v += dv;
      dmax = std::max(dmax, std::abs(dv));
    }
    const Slice a = net.apply(z, t, sched, cond);
    const Slice b = net.apply(z2, t, sched, cond);
    double omax = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      omax = std::max(omax, std::abs(a.data[i] - b.data[i]));
    }
    CHECK(omax <= bound * dmax + 1e-12);
  }
}

TEST_CASE("loss vanishes when the prediction equals the true noise") {
  // A zero network predicts x0 = 0; feed a batch whose clean slice is zero so
  // the analytic head returns the injected noise exactly.
  const auto arch = small_arch();
  const ConvDenoiser net(arch, std::vector<double>(arch_params(arch), 0.0));

  const int side = 6;
  const NoiseSchedule sched = linear_schedule(10, 1e-3, 2e-2);
  const Slice z0 = constant_slice(side, 0.0);
  const Slice eps = testutil::random_slice(side, 88, -1.0, 1.0);
  const int t = 4;
  std::vector<TrainSample> batch;
  batch.push_back(TrainSample{forward_noise(z0, t, eps, sched), t,
                              simple_condition(side, 89), eps});
  const LossGrad lg = loss_and_grad(net, sched, batch);
  CHECK(lg.loss <= 1e-25);
  for (double g : lg.grad) CHECK(std::abs(g) <= 1e-10);

  CHECK_THROWS_AS(loss_and_grad(net, sched, {}), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
  auto setup = testutil::make_gradcheck_setup(8, 2, 3, 2024, 2);
  REQUIRE(setup.net.param_count() <= 1000);
  const LossGrad lg = loss_and_grad(setup.net, setup.sched, setup.batch);
  const std::vector<double> fd =
      testutil::finite_difference_grad(setup.net, setup.sched, setup.batch, 1e-5);
  const double worst = testutil::max_rel_error(lg.grad, fd);
  CHECK(worst < 1e-4);
}

TEST_SUITE_END();
