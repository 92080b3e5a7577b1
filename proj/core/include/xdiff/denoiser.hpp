#pragma once

#include <cstdint>
#include <vector>

#include "xdiff/condition.hpp"
#include "xdiff/schedule.hpp"
#include "xdiff/volume.hpp"

namespace xdiff {

/// Noise-prediction network interface; t is 1-based against the schedule.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Slice apply(const Slice& z_t, int t, const NoiseSchedule& sched,
                      const Condition& cond) const = 0;
};

struct ConvLayerShape {
  std::uint32_t out_ch = 0, in_ch = 0, kh = 0, kw = 0;
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_ch) * in_ch * kh * kw;
  }
  std::size_t param_count() const { return weight_count() + out_ch; }
};

/// Padded per-layer activations kept around for the backward pass.
struct ForwardCache {
  int side = 0;
  std::vector<std::vector<double>> padded;  // [0] = input planes, then activations
  std::vector<double> trunk_out;            // clean-slice estimate, one plane
  double head_gain = 0.0;                   // -sqrt(ab_t) / sqrt(1 - ab_t)
};

/// Small convolutional residual network over stacked condition planes.
///
/// The trunk input is nine planes: the noisy slice, the reduced conditioning
/// slice, five broadcast pose scalars, and a two-plane sinusoidal timestep
/// embedding. Layer 0 is conv+relu, every middle layer is a residual conv
/// (conv output added to its input, then relu), and the trunk ends in a bare
/// conv down to one plane: the clean-slice estimate x0_hat. The noise
/// estimate is derived analytically,
///
///   eps_hat = (z_t - sqrt(alpha_bar_t) * x0_hat) / sqrt(1 - alpha_bar_t),
///
/// so the clean-slice estimate a sampler recovers from eps_hat is the
/// bounded trunk output itself. A free-form noise head would instead have to
/// match the z_t passthrough coefficient to within ~sqrt(alpha_bar_T), and
/// its residual error, divided by sqrt(alpha_bar_t), throws reverse
/// trajectories off the data manifold at this model scale.
class ConvDenoiser : public Denoiser {
 public:
  static constexpr int kInputChannels = 9;

  ConvDenoiser(std::vector<ConvLayerShape> arch, std::vector<double> params);

  /// Fresh network: `hidden_layers` residual middle convs of the given
  /// width. Weights are scaled-normal initialized from `init_seed`; the head
  /// starts at zero, so the initial clean-slice estimate is the zero slice.
  static ConvDenoiser make(int channels, int kernel, int hidden_layers,
                           std::uint64_t init_seed);

  Slice apply(const Slice& z_t, int t, const NoiseSchedule& sched,
              const Condition& cond) const override;

  const std::vector<ConvLayerShape>& arch() const { return arch_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Assemble the nine trunk input planes for one (z_t, t, cond) triple.
  static std::vector<double> stack_input_planes(const Slice& z_t, int t, int t_count,
                                                const Condition& cond);

  /// Full forward pass (trunk plus gain stage); fills `cache` when non-null
  /// so backward() can run.
  std::vector<double> forward(const Slice& z_t, int t, const NoiseSchedule& sched,
                              const Condition& cond, ForwardCache* cache) const;

  /// Exact dL/dparams for the cached forward pass, accumulated into grad
  /// (which must have param_count() entries).
  void backward(const ForwardCache& cache, const std::vector<double>& dloss_dout,
                std::vector<double>& grad) const;

 private:
  std::vector<double> trunk_forward(const std::vector<double>& input_planes, int side,
                                    ForwardCache* cache) const;
  void trunk_backward(const ForwardCache& cache, const std::vector<double>& dloss_dr,
                      std::vector<double>& grad) const;

  std::vector<ConvLayerShape> arch_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;  // param offset per layer
};

}  // namespace xdiff
