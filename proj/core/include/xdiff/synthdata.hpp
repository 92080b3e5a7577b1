#pragma once

#include <cstdint>
#include <vector>

#include "xdiff/volume.hpp"

namespace xdiff {

/// Solid cone in voxel coordinates: apex point, unit axis toward the base,
/// height and base radius in voxels. Values ramp from intensity to zero over
/// a band of edge_softness voxels around the surface (hard edge when 0).
struct ConeSpec {
  Vec3 apex;
  Vec3 axis_dir;
  double height = 0.0;
  double base_radius = 0.0;
  double intensity = 1.0;
  double edge_softness = 0.0;
};

Volume gen_cone(int side, const ConeSpec& spec);

/// n random cones: base_radius in [0.15, 0.3]*side, height in [0.4, 0.8]*side,
/// axis uniform on the sphere, intensity in [0.5, 1], centered in the cube.
std::vector<Volume> gen_dataset(int n, int side, std::uint64_t seed);

/// Zero every DFT coefficient whose per-axis centered frequency index exceeds
/// keep_fraction * (side/2), then inverse transform (real part).
Volume fourier_lowpass(const Volume& v, double keep_fraction);

}  // namespace xdiff
