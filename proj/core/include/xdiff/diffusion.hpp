#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "xdiff/condition.hpp"
#include "xdiff/denoiser.hpp"
#include "xdiff/schedule.hpp"
#include "xdiff/volume.hpp"

namespace xdiff {

/// Latent codec boundary. Desk-scale runs use the identity; a learned
/// encoder/decoder can be slotted in behind the same interface.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual Slice encode(const Slice& s) const = 0;
  virtual Slice decode(const Slice& s) const = 0;
};

class IdentityCodec : public Codec {
 public:
  Slice encode(const Slice& s) const override { return s; }
  Slice decode(const Slice& s) const override { return s; }
};

const Codec& identity_codec();

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps, elementwise.
Slice forward_noise(const Slice& z0, int t, const Slice& eps, const NoiseSchedule& sched);

struct TrainSample {
  Slice z_t;
  int t;
  Condition cond;
  Slice eps;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Batch-mean per-pixel MSE between eps and the noise estimate, with the
/// exact gradient with respect to every network parameter.
LossGrad loss_and_grad(const ConvDenoiser& net, const NoiseSchedule& sched,
                       const std::vector<TrainSample>& batch);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int steps = 1000;
  std::uint64_t seed = 0;
  int side = 32;
  int t_count = 1000;
  /// 1 trains pure single-slice conditioning; larger values mix a single
  /// random slice (p = 1/2) with K in {2,3,5} random same-axis slices.
  int k_slices = 1;
  // Denoiser architecture.
  int channels = 16;
  int kernel = 5;
  int hidden_layers = 3;
  // Adam moments.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

using TrainLogFn = std::function<void(int step, double loss)>;

/// Single-threaded training loop; bit-deterministic for a fixed seed. Each
/// step draws (volume, pose, depth, input slices, t, eps) per batch element,
/// targets the rotated-volume depth slice, and takes one Adam step.
ConvDenoiser train(const std::vector<Volume>& dataset, const TrainConfig& cfg,
                   const NoiseSchedule& sched, const TrainLogFn& log = {});

/// One DDIM update from timestep t to t_prev (t > t_prev >= 0); eta blends
/// deterministic and ancestral sampling, noise is ignored when the step
/// variance is zero.
Slice ddim_step(const Slice& z_t, const Slice& eps_hat, int t, int t_prev, double eta,
                const Slice& noise, const NoiseSchedule& sched);

/// Descending timestep ladder T = t_n > ... > t_0 = 0 with n_steps rungs.
std::vector<int> sample_ladder(int t_count, int n_steps);

/// Full reverse pass from z_T ~ N(0,1); deterministic for a fixed seed.
Slice sample_slice(const Denoiser& net, const Condition& cond, const NoiseSchedule& sched,
                   double eta, int n_steps, std::uint64_t seed,
                   const Codec& codec = identity_codec());

/// Volume generated while the object is held at the given view pose: one
/// sampled slice per depth (seed xor d per slice), stacked depth-first.
Volume generate_view_volume(const Denoiser& net, const std::vector<Slice>& input_slices,
                            const std::vector<int>& input_depths, double azim_deg,
                            double elev_deg, int side, const NoiseSchedule& sched, double eta,
                            int n_steps, std::uint64_t seed,
                            const std::array<double, 3>& spacing = {1.0, 1.0, 1.0},
                            const Codec& codec = identity_codec());

enum class Aggregator { kMean, kMax };

/// Multi-view reconstruction: generate a view volume per azimuth-ring pose,
/// rotate each back to the canonical frame, and aggregate.
Volume reconstruct(const Denoiser& net, const std::vector<Slice>& input_slices,
                   const std::vector<int>& input_depths, int n_views, int side,
                   const NoiseSchedule& sched, double eta, int n_steps, std::uint64_t seed,
                   Aggregator aggregator = Aggregator::kMean,
                   const std::array<double, 3>& spacing = {1.0, 1.0, 1.0},
                   const Codec& codec = identity_codec());

}  // namespace xdiff
