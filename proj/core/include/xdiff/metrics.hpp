#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xdiff/volume.hpp"

namespace xdiff {

/// PSNR in dB; the peak is the maximum of the reference volume x. Identical
/// volumes return +infinity.
double psnr3d(const Volume& x, const Volume& xhat);

/// Whole-slice SSIM from global means, variances and covariance (no sliding
/// window); L is the dynamic range, constants (0.01*L)^2 and (0.03*L)^2.
double ssim2d(const Slice& x, const Slice& xhat, double dynamic_range);

enum class Plane { kAxial, kCoronal, kSagittal };

/// Mean ssim2d over the side slices along the named axis (axial = depth).
double ssim_plane_mean(const Volume& x, const Volume& xhat, Plane plane, double dynamic_range);

/// Voxel label grid (0 = background).
struct SegMask {
  SegMask(int side_, std::vector<int> labels_);
  int side;
  std::vector<int> labels;
};

/// Mean over depth slices of per-slice Dice overlap for one class; slices
/// where both masks are empty are skipped.
double dice(const SegMask& y, const SegMask& yhat, int class_id);

/// Count of strictly positive voxels times the voxel volume in mm^3.
double brain_volume(const Volume& v);

struct CurvatureResult {
  std::vector<double> kappa;
  double kappa_max_abs = 0.0;
};

/// Plane-curve curvature series for an ordered polyline; the parameter is
/// normalized to [0,1] by point count and derivatives use central finite
/// differences (second-order one-sided at the ends).
CurvatureResult curvature(const std::vector<std::array<double, 2>>& points);

enum class Scoliosis { kNone, kMild, kModerate, kSevere };

Scoliosis classify_scoliosis(double kappa);
std::string scoliosis_name(Scoliosis s);

double pearson(std::span<const double> xs, std::span<const double> ys);

/// Per-depth-plane mean squared error series (length side).
std::vector<double> mse_by_slice(const Volume& x, const Volume& xhat);

/// Split-conformal radius: the ceil((m+1)(1-alpha))/m empirical quantile of
/// the pooled per-voxel absolute errors over all (generated, target) pairs.
double conformal_calibrate(const std::vector<std::pair<Volume, Volume>>& pairs, double alpha);

/// Fraction of voxels with |generated - target| <= q.
double conformal_coverage(const std::vector<std::pair<Volume, Volume>>& pairs, double q);

/// Flat key/value metric bundle; serializes one sorted "key = value" line at
/// a time for diff-friendly golden files.
struct MetricsReport {
  void set(const std::string& key, double value);
  std::string to_text() const;

  std::map<std::string, double> values;
};

}  // namespace xdiff
