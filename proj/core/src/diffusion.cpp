#include "xdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xdiff/rng.hpp"

namespace xdiff {

const Codec& identity_codec() {
  static const IdentityCodec codec;
  return codec;
}

Slice forward_noise(const Slice& z0, int t, const Slice& eps, const NoiseSchedule& sched) {
  if (eps.side != z0.side) throw std::invalid_argument("forward_noise: slice sides differ");
  if (t < 1 || t > sched.T()) throw std::out_of_range("forward_noise: t out of range");
  const double ab = sched.alpha_bar_at(t);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  std::vector<double> out(z0.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0.data[i] + b * eps.data[i];
  return Slice(z0.side, std::move(out));
}

LossGrad loss_and_grad(const ConvDenoiser& net, const NoiseSchedule& sched,
                       const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  LossGrad lg;
  lg.grad.assign(net.param_count(), 0.0);
  const int side = batch.front().z_t.side;
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  const double inv_n = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(plane));

  ForwardCache cache;
  std::vector<double> dloss(plane);
  for (const TrainSample& s : batch) {
    if (s.z_t.side != side || s.eps.side != side) {
      throw std::invalid_argument("loss_and_grad: inconsistent slice sides in batch");
    }
    const std::vector<double> out = net.forward(s.z_t, s.t, sched, s.cond, &cache);
    for (std::size_t i = 0; i < plane; ++i) {
      const double diff = s.eps.data[i] - out[i];
      lg.loss += diff * diff * inv_n;
      dloss[i] = -2.0 * diff * inv_n;
    }
    net.backward(cache, dloss, lg.grad);
  }
  return lg;
}

namespace {

// Draw k distinct depth indices in [1, side], returned sorted ascending.
std::vector<int> draw_depths(Rng& rng, int side, int k) {
  std::vector<int> depths;
  depths.reserve(k);
  while (static_cast<int>(depths.size()) < k) {
    const int d = static_cast<int>(rng.uniform_int(1, side));
    if (std::find(depths.begin(), depths.end(), d) == depths.end()) depths.push_back(d);
  }
  std::sort(depths.begin(), depths.end());
  return depths;
}

Slice normal_slice(Rng& rng, int side) {
  std::vector<double> data(static_cast<std::size_t>(side) * side);
  for (double& v : data) v = rng.normal();
  return Slice(side, std::move(data));
}

}  // namespace

ConvDenoiser train(const std::vector<Volume>& dataset, const TrainConfig& cfg,
                   const NoiseSchedule& sched, const TrainLogFn& log) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (cfg.k_slices < 1) throw std::invalid_argument("train: k_slices must be >= 1");
  for (const Volume& v : dataset) {
    if (v.side != cfg.side) throw std::invalid_argument("train: dataset side mismatch");
  }
  if (sched.T() != cfg.t_count) throw std::invalid_argument("train: schedule length mismatch");

  ConvDenoiser net = ConvDenoiser::make(cfg.channels, cfg.kernel, cfg.hidden_layers, cfg.seed);
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const Codec& codec = identity_codec();

  std::vector<double> m(net.param_count(), 0.0), v(net.param_count(), 0.0);
  std::vector<TrainSample> batch;
  batch.reserve(cfg.batch_size);

  for (int step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Volume& vol = dataset[rng.uniform_int(0, static_cast<int>(dataset.size()) - 1)];
      const double azim = rng.uniform(0.0, 360.0);
      const double elev = rng.uniform(-90.0, 90.0);
      const int d_target = static_cast<int>(rng.uniform_int(1, cfg.side));
      const int t = static_cast<int>(rng.uniform_int(1, sched.T()));

      int k = 1;
      if (cfg.k_slices > 1 && rng.uniform01() >= 0.5) {
        static constexpr int kChoices[3] = {2, 3, 5};
        k = kChoices[rng.uniform_int(0, 2)];
      }
      const std::vector<int> depths = draw_depths(rng, cfg.side, k);
      std::vector<Slice> inputs;
      inputs.reserve(k);
      for (int d : depths) inputs.push_back(extract_slice(vol, d));

      const Rotation rot = Rotation::from_azim_elev(azim, elev);
      const Slice target = codec.encode(rotated_slice(vol, rot, d_target));
      const Slice eps = normal_slice(rng, cfg.side);

      TrainSample s{forward_noise(target, t, eps, sched), t,
                    make_condition(inputs, d_target, cfg.side, azim, elev), eps};
      batch.push_back(std::move(s));
    }

    const LossGrad lg = loss_and_grad(net, sched, batch);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    std::vector<double>& p = net.mutable_params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * lg.grad[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * lg.grad[i] * lg.grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
    if (log) log(step, lg.loss);
  }
  return net;
}

Slice ddim_step(const Slice& z_t, const Slice& eps_hat, int t, int t_prev, double eta,
                const Slice& noise, const NoiseSchedule& sched) {
  if (t_prev < 0 || t <= t_prev) {
    throw std::invalid_argument("ddim_step: need t > t_prev >= 0");
  }
  if (eps_hat.side != z_t.side || noise.side != z_t.side) {
    throw std::invalid_argument("ddim_step: slice sides differ");
  }
  const double ab_t = sched.alpha_bar_at(t);
  const double ab_p = sched.alpha_bar_at(t_prev);
  const double sigma = eta * std::sqrt((1.0 - ab_p) / (1.0 - ab_t)) *
                       std::sqrt(1.0 - ab_t / ab_p);
  const double sigma2 = sigma * sigma;
  if (sigma2 > 1.0 - ab_p + 1e-12) {
    throw std::invalid_argument("ddim_step: step variance exceeds 1 - alpha_bar_prev");
  }
  const double inv_sqrt_ab_t = 1.0 / std::sqrt(ab_t);
  const double sq_one_minus_ab_t = std::sqrt(1.0 - ab_t);
  const double sq_ab_p = std::sqrt(ab_p);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_p - sigma2));

  std::vector<double> out(z_t.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x0_hat = (z_t.data[i] - sq_one_minus_ab_t * eps_hat.data[i]) * inv_sqrt_ab_t;
    out[i] = sq_ab_p * x0_hat + dir * eps_hat.data[i] + sigma * noise.data[i];
  }
  return Slice(z_t.side, std::move(out));
}

std::vector<int> sample_ladder(int t_count, int n_steps) {
  if (n_steps < 1 || n_steps > t_count) {
    throw std::invalid_argument("sample_ladder: need 1 <= n_steps <= T");
  }
  std::vector<int> ts;
  ts.reserve(n_steps + 1);
  for (int k = n_steps; k >= 0; --k) {
    ts.push_back(static_cast<int>(std::llround(
        static_cast<double>(t_count) * k / static_cast<double>(n_steps))));
  }
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;  // descending, starts at T, ends at 0
}

Slice sample_slice(const Denoiser& net, const Condition& cond, const NoiseSchedule& sched,
                   double eta, int n_steps, std::uint64_t seed, const Codec& codec) {
  const int side = cond.cond_slice.side;
  Rng rng(seed);
  Slice z = normal_slice(rng, side);
  const Slice zero = constant_slice(side, 0.0);
  const std::vector<int> ladder = sample_ladder(sched.T(), n_steps);
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
    const int t = ladder[i], t_prev = ladder[i + 1];
    const Slice eps_hat = net.apply(z, t, sched, cond);
    if (eta > 0.0) {
      const Slice noise = normal_slice(rng, side);
      z = ddim_step(z, eps_hat, t, t_prev, eta, noise, sched);
    } else {
      z = ddim_step(z, eps_hat, t, t_prev, eta, zero, sched);
    }
  }
  return codec.decode(z);
}

Volume generate_view_volume(const Denoiser& net, const std::vector<Slice>& input_slices,
                            const std::vector<int>& input_depths, double azim_deg,
                            double elev_deg, int side, const NoiseSchedule& sched, double eta,
                            int n_steps, std::uint64_t seed,
                            const std::array<double, 3>& spacing, const Codec& codec) {
  if (input_slices.empty()) {
    throw std::invalid_argument("generate_view_volume: no input slices");
  }
  if (input_depths.size() != input_slices.size()) {
    throw std::invalid_argument("generate_view_volume: depth index count mismatch");
  }
  for (int d : input_depths) {
    if (d < 1 || d > side) {
      throw std::out_of_range("generate_view_volume: input depth out of range");
    }
  }
  const Slice reduced = reduce_slices(input_slices);
  std::vector<Slice> planes;
  planes.reserve(side);
  for (int d = 1; d <= side; ++d) {
    const Condition cond{reduced, embed_pose(d, side, azim_deg, elev_deg)};
    const std::uint64_t slice_seed = seed ^ static_cast<std::uint64_t>(d);
    planes.push_back(sample_slice(net, cond, sched, eta, n_steps, slice_seed, codec));
  }
  return stack_slices(planes, spacing);
}

Volume reconstruct(const Denoiser& net, const std::vector<Slice>& input_slices,
                   const std::vector<int>& input_depths, int n_views, int side,
                   const NoiseSchedule& sched, double eta, int n_steps, std::uint64_t seed,
                   Aggregator aggregator, const std::array<double, 3>& spacing,
                   const Codec& codec) {
  if (n_views < 1) throw std::invalid_argument("reconstruct: n_views must be >= 1");
  const std::vector<double> angles = ring_angles(n_views);
  const std::vector<Rotation> ring = azimuth_ring(n_views);
  std::vector<Volume> views;
  views.reserve(n_views);
  for (int i = 0; i < n_views; ++i) {
    const std::uint64_t view_seed = seed ^ (static_cast<std::uint64_t>(i + 1) << 32);
    Volume v = generate_view_volume(net, input_slices, input_depths, angles[i], 0.0, side,
                                    sched, eta, n_steps, view_seed, spacing, codec);
    views.push_back(unrotate(v, ring[i]));
  }
  return aggregator == Aggregator::kMean ? average_volumes(views) : maxpool_volumes(views);
}

}  // namespace xdiff
