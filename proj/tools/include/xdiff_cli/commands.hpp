#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "xdiff/checkpoint.hpp"
#include "xdiff/diffusion.hpp"
#include "xdiff_cli/run_config.hpp"

namespace xdiff::cli {

struct SynthArgs {
  int n = 10;
  int side = 32;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct ReconstructArgs {
  std::string checkpoint;
  std::string input_volume;
  std::vector<int> slice_indices;
  int n_views = 1;
  double eta = 0.0;
  int steps = 50;
  std::string aggregator = "mean";
  std::uint64_t seed = 0;
  std::string out;
};

struct EvaluateArgs {
  std::vector<std::string> generated;
  std::vector<std::string> reference;
  std::string mask_gen;
  std::string mask_ref;
  std::vector<int> class_ids;
  std::vector<std::string> centerline_gen;
  std::vector<std::string> centerline_ref;
};

struct SweepArgs {
  std::string mode;  // slices | views | timesteps | distance
  std::vector<int> values;
  std::string test_dir;
  std::string checkpoint;
  std::string out_csv;
  int k_slices = 1;
  int n_views = 1;
  double eta = 0.0;
  int steps = 50;
  std::uint64_t seed = 0;
};

struct TtaArgs {
  std::string checkpoint;
  std::string input_volume;
  std::vector<int> slice_indices;
  std::vector<std::string> transforms;  // identity, flips, rot90, scale
  int n_views = 1;
  double eta = 0.0;
  int steps = 50;
  std::uint64_t seed = 0;
  std::string out;
};

struct ActiveSelectArgs {
  std::string checkpoint;
  std::string target_volume;
  int budget = 1;
  int candidate_stride = 1;
  int n_views = 1;
  double eta = 0.0;
  int steps = 50;
  std::uint64_t seed = 0;
  std::string out_csv;
};

void cmd_synth(const SynthArgs& args, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& diag);
void cmd_reconstruct(const ReconstructArgs& args);
void cmd_evaluate(const EvaluateArgs& args, std::ostream& out);
void cmd_sweep(const SweepArgs& args, std::ostream& diag);
void cmd_tta(const TtaArgs& args);
std::vector<int> cmd_active_select(const ActiveSelectArgs& args, std::ostream& out);

/// In-plane test-time transform of conditioning slices; flips and quarter
/// turns are exact index permutations, scaling is center-crop-then-resize.
struct SliceTransform {
  enum class Kind { kIdentity, kHFlip, kVFlip, kRot90, kRot180, kRot270, kScale };
  Kind kind = Kind::kIdentity;
  int scale = 1;

  Slice apply(const Slice& s) const;
  /// Undo the transform on one generated plane; returns the plane and a
  /// coverage mask (scaling only restores the central crop box).
  std::pair<Slice, Slice> invert(const Slice& s) const;
};

std::vector<SliceTransform> expand_transform_tokens(const std::vector<std::string>& tokens,
                                                    int side);

/// Greedy forward selection over candidate depths; reusable core of the
/// active-select command.
std::vector<int> active_select_greedy(const Denoiser& net, const NoiseSchedule& sched,
                                      const Volume& target, int budget, int candidate_stride,
                                      int n_views, double eta, int steps, std::uint64_t seed,
                                      std::vector<std::pair<int, double>>* round_log);

/// TTA reconstruction shared by cmd_tta and tests: reconstruct once per
/// transform, invert in-plane, and take the coverage-weighted mean.
Volume tta_reconstruct(const Denoiser& net, const NoiseSchedule& sched, const Volume& input,
                       const std::vector<int>& slice_indices,
                       const std::vector<SliceTransform>& transforms, int n_views, double eta,
                       int steps, std::uint64_t seed);

int run_cli(int argc, const char* const* argv);

}  // namespace xdiff::cli
