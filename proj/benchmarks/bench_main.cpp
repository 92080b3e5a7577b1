#include <benchmark/benchmark.h>

#include "xdiff/condition.hpp"
#include "xdiff/diffusion.hpp"
#include "xdiff/rng.hpp"
#include "xdiff/synthdata.hpp"
#include "xdiff/volume.hpp"

using namespace xdiff;

namespace {

Volume bench_volume(int side) { return gen_dataset(1, side, 7).front(); }

Slice bench_slice(int side, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(static_cast<std::size_t>(side) * side);
  for (double& v : data) v = rng.normal();
  return Slice(side, std::move(data));
}

void RotateVolume(benchmark::State& state) {
  const Volume v = bench_volume(static_cast<int>(state.range(0)));
  const Rotation r = Rotation::from_azim_elev(33.0, -21.0);
  for (auto _ : state) {
    Volume out = rotate_volume(v, r);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(RotateVolume)->Arg(32)->Arg(64);

void DenoiserForward(benchmark::State& state) {
  const int side = 32;
  const NoiseSchedule sched = linear_schedule(1000, 1e-4, 2e-2);
  const ConvDenoiser net = ConvDenoiser::make(static_cast<int>(state.range(0)), 5, 3, 1);
  const Slice z = bench_slice(side, 2);
  const Condition cond{bench_slice(side, 3), embed_pose(4, side, 45.0, 10.0)};
  for (auto _ : state) {
    Slice out = net.apply(z, 500, sched, cond);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(DenoiserForward)->Arg(8)->Arg(16)->Arg(24);

void LossAndGrad(benchmark::State& state) {
  const int side = 32;
  const NoiseSchedule sched = linear_schedule(1000, 1e-4, 2e-2);
  const ConvDenoiser net = ConvDenoiser::make(16, 5, 3, 1);
  std::vector<TrainSample> batch;
  for (int b = 0; b < state.range(0); ++b) {
    batch.push_back(TrainSample{bench_slice(side, 10 + b), 100 * (b + 1),
                                Condition{bench_slice(side, 20 + b), embed_pose(1 + b, side, 0, 0)},
                                bench_slice(side, 30 + b)});
  }
  for (auto _ : state) {
    LossGrad lg = loss_and_grad(net, sched, batch);
    benchmark::DoNotOptimize(lg.grad.data());
  }
}
BENCHMARK(LossAndGrad)->Arg(1)->Arg(8);

void DdimStep(benchmark::State& state) {
  const int side = 32;
  const NoiseSchedule sched = linear_schedule(1000, 1e-4, 2e-2);
  const Slice z = bench_slice(side, 4);
  const Slice eps = bench_slice(side, 5);
  const Slice noise = bench_slice(side, 6);
  for (auto _ : state) {
    Slice out = ddim_step(z, eps, 800, 780, 1.0, noise, sched);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(DdimStep);

void ReduceSlices(benchmark::State& state) {
  std::vector<Slice> slices;
  for (int i = 0; i < 10; ++i) slices.push_back(bench_slice(64, 40 + i));
  for (auto _ : state) {
    Slice out = reduce_slices(slices);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(ReduceSlices);

void FourierLowpass(benchmark::State& state) {
  const Volume v = bench_volume(32);
  for (auto _ : state) {
    Volume out = fourier_lowpass(v, 0.5);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(FourierLowpass);

}  // namespace

BENCHMARK_MAIN();
