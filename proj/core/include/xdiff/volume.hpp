#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace xdiff {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// Proper rotation in SO(3), stored row-major. Construction validates
/// orthonormality (1e-9 elementwise) and det = +1.
class Rotation {
 public:
  static Rotation identity();

  /// R = R_elev(elev) * R_azim(azim). Azimuth turns about the vertical
  /// axis (0,1,0), elevation about (1,0,0); angles in degrees.
  static Rotation from_azim_elev(double azim_deg, double elev_deg);

  static Rotation from_matrix(const std::array<double, 9>& m);

  const std::array<double, 9>& m() const { return m_; }
  double at(int r, int c) const { return m_[3 * r + c]; }

  Rotation transposed() const;
  Vec3 apply(const Vec3& v) const;
  Vec3 apply_transposed(const Vec3& v) const;

 private:
  Rotation() = default;
  std::array<double, 9> m_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

/// Angles i*360/N for i = 1..N, reduced mod 360 so the last entry is 0.
std::vector<double> ring_angles(int n_views);

/// N azimuth rotations equally spaced over the full turn; the last is the
/// exact identity.
std::vector<Rotation> azimuth_ring(int n_views);

/// 2D scalar grid, row-major (index = h*side + w).
struct Slice {
  Slice(int side_, std::vector<double> data_);

  double at(int h, int w) const { return data[static_cast<std::size_t>(h) * side + w]; }
  double& at(int h, int w) { return data[static_cast<std::size_t>(h) * side + w]; }

  int side;
  std::vector<double> data;
};

Slice constant_slice(int side, double value);

/// Cubic 3D scalar grid with per-axis voxel spacing in mm. Depth-major
/// storage: index = d*side^2 + h*side + w.
struct Volume {
  Volume(int side_, const std::array<double, 3>& spacing_, std::vector<double> data_);

  double at(int d, int h, int w) const {
    return data[(static_cast<std::size_t>(d) * side + h) * side + w];
  }
  double& at(int d, int h, int w) {
    return data[(static_cast<std::size_t>(d) * side + h) * side + w];
  }
  std::size_t voxels() const { return data.size(); }

  int side;
  std::array<double, 3> spacing;
  std::vector<double> data;
};

/// Validating constructor wrapper; side >= 2, data length side^3.
Volume new_volume(int side, const std::array<double, 3>& spacing, std::vector<double> data);

/// Embed a dims[0] x dims[1] x dims[2] block (depth-major) into a cube of
/// side max(dims), centered with offset floor((S - dim)/2) per axis.
Volume pad_to_cube(const std::array<int, 3>& dims, std::span<const double> data,
                   const std::array<double, 3>& spacing);

/// Resample under rotation r: output voxel p reads the input at
/// r^T (p - c) + c, trilinear with zero padding; c = (side-1)/2 per axis.
Volume rotate_volume(const Volume& v, const Rotation& r);

/// rotate_volume(v, r^T).
Volume unrotate(const Volume& v, const Rotation& r);

/// Depth plane d (1-based, d in [1, side]).
Slice extract_slice(const Volume& v, int d);

/// Single plane of rotate_volume(v, r); bit-identical to
/// extract_slice(rotate_volume(v, r), d) without building the full volume.
Slice rotated_slice(const Volume& v, const Rotation& r, int d);

/// Rebuild a volume from its side depth planes (plane i -> depth i).
Volume stack_slices(const std::vector<Slice>& slices,
                    const std::array<double, 3>& spacing = {1.0, 1.0, 1.0});

/// Elementwise mean. The per-voxel accumulation is value-sorted, so the
/// result is bit-exactly invariant to the order of the input list.
Volume average_volumes(const std::vector<Volume>& vs);

/// Elementwise maximum.
Volume maxpool_volumes(const std::vector<Volume>& vs);

/// Keep every factor-th plane along an axis (starting at plane 0), scale
/// that axis' spacing by factor, and re-center into a cube via pad_to_cube.
Volume downsample_axis(const Volume& v, int axis, int factor);

}  // namespace xdiff
