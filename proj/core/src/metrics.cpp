#include "xdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace xdiff {

namespace {

void check_same_side(int a, int b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": sides differ");
}

}  // namespace

double psnr3d(const Volume& x, const Volume& xhat) {
  check_same_side(x.side, xhat.side, "psnr3d");
  double peak = 0.0;
  for (double v : x.data) peak = std::max(peak, v);
  if (!(peak > 0.0)) throw std::invalid_argument("psnr3d: reference volume has no positive voxel");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double e = x.data[i] - xhat.data[i];
    mse += e * e;
  }
  mse /= static_cast<double>(x.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim2d(const Slice& x, const Slice& xhat, double dynamic_range) {
  check_same_side(x.side, xhat.side, "ssim2d");
  if (!(dynamic_range > 0.0)) throw std::invalid_argument("ssim2d: dynamic range must be > 0");
  const std::size_t n = x.data.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x.data[i];
    my += xhat.data[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x.data[i] - mx, dy = xhat.data[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= static_cast<double>(n);
  vy /= static_cast<double>(n);
  cov /= static_cast<double>(n);
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  return ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

namespace {

Slice plane_slice(const Volume& v, Plane plane, int idx) {
  const int S = v.side;
  std::vector<double> out(static_cast<std::size_t>(S) * S);
  std::size_t k = 0;
  switch (plane) {
    case Plane::kAxial:
      for (int h = 0; h < S; ++h)
        for (int w = 0; w < S; ++w) out[k++] = v.at(idx, h, w);
      break;
    case Plane::kCoronal:
      for (int d = 0; d < S; ++d)
        for (int w = 0; w < S; ++w) out[k++] = v.at(d, idx, w);
      break;
    case Plane::kSagittal:
      for (int d = 0; d < S; ++d)
        for (int h = 0; h < S; ++h) out[k++] = v.at(d, h, idx);
      break;
  }
  return Slice(S, std::move(out));
}

}  // namespace

double ssim_plane_mean(const Volume& x, const Volume& xhat, Plane plane, double dynamic_range) {
  check_same_side(x.side, xhat.side, "ssim_plane_mean");
  double acc = 0.0;
  for (int i = 0; i < x.side; ++i) {
    acc += ssim2d(plane_slice(x, plane, i), plane_slice(xhat, plane, i), dynamic_range);
  }
  return acc / static_cast<double>(x.side);
}

SegMask::SegMask(int side_, std::vector<int> labels_) : side(side_), labels(std::move(labels_)) {
  if (side < 1) throw std::invalid_argument("SegMask: side must be positive");
  if (labels.size() != static_cast<std::size_t>(side) * side * side) {
    throw std::invalid_argument("SegMask: label count does not equal side^3");
  }
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("SegMask: negative label");
  }
}

double dice(const SegMask& y, const SegMask& yhat, int class_id) {
  check_same_side(y.side, yhat.side, "dice");
  const int S = y.side;
  const std::size_t plane = static_cast<std::size_t>(S) * S;
  double acc = 0.0;
  int counted = 0;
  for (int d = 0; d < S; ++d) {
    std::size_t inter = 0, ny = 0, nyh = 0;
    const std::size_t off = static_cast<std::size_t>(d) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const bool a = y.labels[off + i] == class_id;
      const bool b = yhat.labels[off + i] == class_id;
      ny += a;
      nyh += b;
      inter += a && b;
    }
    if (ny + nyh == 0) continue;
    acc += 2.0 * static_cast<double>(inter) / static_cast<double>(ny + nyh);
    ++counted;
  }
  return counted == 0 ? 1.0 : acc / counted;
}

double brain_volume(const Volume& v) {
  std::size_t count = 0;
  for (double x : v.data) count += x > 0.0;
  return static_cast<double>(count) * v.spacing[0] * v.spacing[1] * v.spacing[2];
}

CurvatureResult curvature(const std::vector<std::array<double, 2>>& points) {
  const std::size_t n = points.size();
  if (n < 5) throw std::invalid_argument("curvature: need at least 5 points");
  const double h = 1.0 / static_cast<double>(n - 1);

  auto d1 = [&](auto get, std::size_t i) {
    if (i == 0) return (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h);
    return (get(i + 1) - get(i - 1)) / (2.0 * h);
  };
  auto d2 = [&](auto get, std::size_t i) {
    if (i == 0) return (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / (h * h);
    if (i == n - 1) {
      return (2.0 * get(n - 1) - 5.0 * get(n - 2) + 4.0 * get(n - 3) - get(n - 4)) / (h * h);
    }
    return (get(i + 1) - 2.0 * get(i) + get(i - 1)) / (h * h);
  };
  auto gx = [&](std::size_t i) { return points[i][0]; };
  auto gy = [&](std::size_t i) { return points[i][1]; };

  CurvatureResult res;
  res.kappa.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xp = d1(gx, i), yp = d1(gy, i);
    const double xpp = d2(gx, i), ypp = d2(gy, i);
    const double denom = std::pow(xp * xp + yp * yp, 1.5);
    res.kappa[i] = denom > 0.0 ? (ypp * xp - xpp * yp) / denom : 0.0;
    res.kappa_max_abs = std::max(res.kappa_max_abs, std::abs(res.kappa[i]));
  }
  return res;
}

Scoliosis classify_scoliosis(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("classify_scoliosis: kappa must be >= 0");
  if (kappa >= 0.15) return Scoliosis::kSevere;
  if (kappa >= 0.12) return Scoliosis::kModerate;
  if (kappa > 0.06) return Scoliosis::kMild;
  return Scoliosis::kNone;
}

std::string scoliosis_name(Scoliosis s) {
  switch (s) {
    case Scoliosis::kNone: return "none";
    case Scoliosis::kMild: return "mild";
    case Scoliosis::kModerate: return "moderate";
    case Scoliosis::kSevere: return "severe";
  }
  return "none";
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("pearson: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: constant series");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

std::vector<double> mse_by_slice(const Volume& x, const Volume& xhat) {
  check_same_side(x.side, xhat.side, "mse_by_slice");
  const int S = x.side;
  const std::size_t plane = static_cast<std::size_t>(S) * S;
  std::vector<double> out(S, 0.0);
  for (int d = 0; d < S; ++d) {
    const std::size_t off = static_cast<std::size_t>(d) * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double e = x.data[off + i] - xhat.data[off + i];
      acc += e * e;
    }
    out[d] = acc / static_cast<double>(plane);
  }
  return out;
}

double conformal_calibrate(const std::vector<std::pair<Volume, Volume>>& pairs, double alpha) {
  if (pairs.empty()) throw std::invalid_argument("conformal_calibrate: empty calibration set");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("conformal_calibrate: alpha must lie in (0, 1)");
  }
  std::vector<double> errs;
  for (const auto& [gen, tgt] : pairs) {
    check_same_side(gen.side, tgt.side, "conformal_calibrate");
    errs.reserve(errs.size() + gen.data.size());
    for (std::size_t i = 0; i < gen.data.size(); ++i) {
      errs.push_back(std::abs(gen.data[i] - tgt.data[i]));
    }
  }
  const std::size_t m = errs.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil((static_cast<double>(m) + 1.0) * (1.0 - alpha)));
  rank = std::min(rank, m);
  std::nth_element(errs.begin(), errs.begin() + (rank - 1), errs.end());
  return errs[rank - 1];
}

double conformal_coverage(const std::vector<std::pair<Volume, Volume>>& pairs, double q) {
  if (q < 0.0) throw std::invalid_argument("conformal_coverage: q must be >= 0");
  std::size_t covered = 0, total = 0;
  for (const auto& [gen, tgt] : pairs) {
    check_same_side(gen.side, tgt.side, "conformal_coverage");
    for (std::size_t i = 0; i < gen.data.size(); ++i) {
      covered += std::abs(gen.data[i] - tgt.data[i]) <= q;
    }
    total += gen.data.size();
  }
  if (total == 0) return 1.0;
  return static_cast<double>(covered) / static_cast<double>(total);
}

void MetricsReport::set(const std::string& key, double value) {
  if (key.rfind("ssim_", 0) == 0 && (value < -1.0 - 1e-12 || value > 1.0 + 1e-12)) {
    throw std::invalid_argument("MetricsReport: ssim value outside [-1, 1]");
  }
  if (key.rfind("dice", 0) == 0 && (value < -1e-12 || value > 1.0 + 1e-12)) {
    throw std::invalid_argument("MetricsReport: dice value outside [0, 1]");
  }
  if (key.rfind("brain_volume", 0) == 0 && value < 0.0) {
    throw std::invalid_argument("MetricsReport: negative volume");
  }
  values[key] = value;
}

std::string MetricsReport::to_text() const {
  std::string out;
  char buf[64];
  for (const auto& [k, v] : values) {
    if (std::isinf(v)) {
      std::snprintf(buf, sizeof buf, "%s", v > 0 ? "inf" : "-inf");
    } else {
      std::snprintf(buf, sizeof buf, "%.6f", v);
    }
    out += k;
    out += " = ";
    out += buf;
    out += "\n";
  }
  return out;
}

}  // namespace xdiff
