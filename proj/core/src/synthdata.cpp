#include "xdiff/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "xdiff/rng.hpp"

namespace xdiff {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

// Signed distance to the capped cone boundary in the (t, s) half-plane,
// t along the axis from the apex, s the radial distance; negative inside.
double cone_signed_distance(const ConeSpec& c, const Vec3& p) {
  const Vec3 d{p.x - c.apex.x, p.y - c.apex.y, p.z - c.apex.z};
  const double t = d.x * c.axis_dir.x + d.y * c.axis_dir.y + d.z * c.axis_dir.z;
  const double s2 = std::max(0.0, d.x * d.x + d.y * d.y + d.z * d.z - t * t);
  const double s = std::sqrt(s2);

  auto seg_dist = [](double px, double py, double ax, double ay, double bx, double by) {
    const double abx = bx - ax, aby = by - ay;
    const double len2 = abx * abx + aby * aby;
    double u = len2 > 0.0 ? ((px - ax) * abx + (py - ay) * aby) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const double dx = px - (ax + u * abx), dy = py - (ay + u * aby);
    return std::sqrt(dx * dx + dy * dy);
  };

  const double slant = seg_dist(t, s, 0.0, 0.0, c.height, c.base_radius);
  const double base = seg_dist(t, s, c.height, 0.0, c.height, c.base_radius);
  const double dist = std::min(slant, base);
  const bool inside = t >= 0.0 && t <= c.height && s <= c.base_radius * (t / c.height);
  return inside ? -dist : dist;
}

void check_cone_fits(int side, const ConeSpec& c) {
  const double margin = 1.0 + c.edge_softness / 2.0;
  const double lo = margin, hi = side - 1 - margin;
  const Vec3 base{c.apex.x + c.axis_dir.x * c.height, c.apex.y + c.axis_dir.y * c.height,
                  c.apex.z + c.axis_dir.z * c.height};
  const double axes_apex[3] = {c.apex.x, c.apex.y, c.apex.z};
  const double axes_base[3] = {base.x, base.y, base.z};
  const double axes_dir[3] = {c.axis_dir.x, c.axis_dir.y, c.axis_dir.z};
  for (int i = 0; i < 3; ++i) {
    // The base rim extreme along axis i is base_center_i +- r*sqrt(1 - u_i^2).
    const double rim = c.base_radius * std::sqrt(std::max(0.0, 1.0 - axes_dir[i] * axes_dir[i]));
    const double mn = std::min(axes_apex[i], axes_base[i] - rim);
    const double mx = std::max(axes_apex[i], axes_base[i] + rim);
    if (mn < lo || mx > hi) {
      throw std::invalid_argument("gen_cone: cone geometry does not fit inside the cube");
    }
  }
}

}  // namespace

Volume gen_cone(int side, const ConeSpec& spec) {
  if (side < 2) throw std::invalid_argument("gen_cone: side must be >= 2");
  if (!(spec.height > 0.0) || !(spec.base_radius > 0.0)) {
    throw std::invalid_argument("gen_cone: height and base_radius must be positive");
  }
  if (!(spec.intensity > 0.0 && spec.intensity <= 1.0)) {
    throw std::invalid_argument("gen_cone: intensity must lie in (0, 1]");
  }
  if (spec.edge_softness < 0.0) {
    throw std::invalid_argument("gen_cone: edge_softness must be >= 0");
  }
  if (std::abs(norm3(spec.axis_dir) - 1.0) > 1e-9) {
    throw std::invalid_argument("gen_cone: axis_dir must be unit length");
  }
  check_cone_fits(side, spec);

  std::vector<double> data(static_cast<std::size_t>(side) * side * side, 0.0);
  std::size_t idx = 0;
  for (int d = 0; d < side; ++d) {
    for (int h = 0; h < side; ++h) {
      for (int w = 0; w < side; ++w, ++idx) {
        const Vec3 p{static_cast<double>(w), static_cast<double>(h), static_cast<double>(d)};
        const double sd = cone_signed_distance(spec, p);
        double v;
        if (spec.edge_softness == 0.0) {
          v = sd <= 0.0 ? 1.0 : 0.0;
        } else {
          const double u = std::clamp(0.5 - sd / spec.edge_softness, 0.0, 1.0);
          v = u * u * (3.0 - 2.0 * u);
        }
        data[idx] = spec.intensity * v;
      }
    }
  }
  return Volume(side, {1.0, 1.0, 1.0}, std::move(data));
}

std::vector<Volume> gen_dataset(int n, int side, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_dataset: n must be >= 1");
  Rng rng(seed);
  const double c = (side - 1) / 2.0;
  std::vector<Volume> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    ConeSpec spec;
    spec.edge_softness = 1.0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw std::runtime_error("gen_dataset: could not place cone");
      spec.base_radius = rng.uniform(0.15, 0.30) * side;
      spec.height = rng.uniform(0.40, 0.80) * side;
      spec.intensity = rng.uniform(0.5, 1.0);
      // Uniform direction on the sphere.
      const double z = rng.uniform(-1.0, 1.0);
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      spec.axis_dir = {r * std::cos(phi), r * std::sin(phi), z};
      spec.apex = {c - spec.axis_dir.x * spec.height / 2.0,
                   c - spec.axis_dir.y * spec.height / 2.0,
                   c - spec.axis_dir.z * spec.height / 2.0};
      try {
        check_cone_fits(side, spec);
        break;
      } catch (const std::invalid_argument&) {
        continue;
      }
    }
    out.push_back(gen_cone(side, spec));
  }
  return out;
}

namespace {

// 1D DFT (forward: sign = -1; inverse: sign = +1, unscaled) applied along one
// axis of a complex cube via a precomputed twiddle table.
void dft_axis(std::vector<std::complex<double>>& a, int side, int axis, int sign) {
  const std::size_t S = static_cast<std::size_t>(side);
  std::vector<std::complex<double>> tw(S * S);
  for (std::size_t k = 0; k < S; ++k) {
    for (std::size_t j = 0; j < S; ++j) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k * j % S) /
                         static_cast<double>(side);
      tw[k * S + j] = {std::cos(ang), std::sin(ang)};
    }
  }
  const std::size_t strides[3] = {S * S, S, 1};
  const std::size_t stride = strides[axis];
  std::vector<std::complex<double>> line(S), res(S);
  // Iterate over all lines along `axis`.
  for (std::size_t d = 0; d < S; ++d) {
    for (std::size_t h = 0; h < S; ++h) {
      std::size_t base;
      switch (axis) {
        case 0: base = d * S + h; break;            // vary first index
        case 1: base = d * S * S + h; break;        // vary second index
        default: base = d * S * S + h * S; break;   // vary third index
      }
      for (std::size_t j = 0; j < S; ++j) line[j] = a[base + j * stride];
      for (std::size_t k = 0; k < S; ++k) {
        std::complex<double> acc{0.0, 0.0};
        const std::complex<double>* t = &tw[k * S];
        for (std::size_t j = 0; j < S; ++j) acc += t[j] * line[j];
        res[k] = acc;
      }
      for (std::size_t k = 0; k < S; ++k) a[base + k * stride] = res[k];
    }
  }
}

}  // namespace

Volume fourier_lowpass(const Volume& v, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("fourier_lowpass: keep_fraction must lie in (0, 1]");
  }
  const int S = v.side;
  std::vector<std::complex<double>> spec(v.voxels());
  for (std::size_t i = 0; i < v.voxels(); ++i) spec[i] = {v.data[i], 0.0};
  for (int axis = 0; axis < 3; ++axis) dft_axis(spec, S, axis, -1);

  const double cutoff = keep_fraction * (S / 2.0);
  auto centered = [S](int k) { return k <= S / 2 ? k : k - S; };
  std::size_t idx = 0;
  for (int d = 0; d < S; ++d) {
    const bool kill_d = std::abs(centered(d)) > cutoff;
    for (int h = 0; h < S; ++h) {
      const bool kill_h = kill_d || std::abs(centered(h)) > cutoff;
      for (int w = 0; w < S; ++w, ++idx) {
        if (kill_h || std::abs(centered(w)) > cutoff) spec[idx] = {0.0, 0.0};
      }
    }
  }

  for (int axis = 0; axis < 3; ++axis) dft_axis(spec, S, axis, +1);
  const double scale = 1.0 / static_cast<double>(v.voxels());
  std::vector<double> out(v.voxels());
  for (std::size_t i = 0; i < v.voxels(); ++i) out[i] = spec[i].real() * scale;
  return Volume(S, v.spacing, std::move(out));
}

}  // namespace xdiff
