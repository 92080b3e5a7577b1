#pragma once

#include <vector>

#include "xdiff/volume.hpp"

namespace xdiff {

/// Target pose scalars fed to the denoiser: normalized depth plus sin/cos
/// pairs for the azimuth and elevation angles.
struct PoseEmbedding {
  double depth_frac = 0.0;
  double azim_sin = 0.0, azim_cos = 1.0;
  double elev_sin = 0.0, elev_cos = 1.0;
};

/// Conditioning signal: the reduced input slice plus the target pose.
struct Condition {
  Slice cond_slice;
  PoseEmbedding pose;
};

/// Collapse K input slices to one. K = 1 passes the slice through; K >= 2
/// returns the elementwise mean of the K-1 consecutive elementwise products.
Slice reduce_slices(const std::vector<Slice>& slices);

std::vector<Slice> repeat_slice(const Slice& s, int k);

PoseEmbedding embed_pose(int d, int depth_count, double azim_deg, double elev_deg);

Condition make_condition(const std::vector<Slice>& slices, int d, int depth_count,
                         double azim_deg, double elev_deg);

}  // namespace xdiff
