#include "xdiff/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace xdiff {

namespace {

constexpr double kOrthoTol = 1e-9;

void check_finite(std::span<const double> data, const char* what) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
  }
}

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Rotation Rotation::identity() { return Rotation(); }

Rotation Rotation::from_azim_elev(double azim_deg, double elev_deg) {
  const double ca = std::cos(deg2rad(azim_deg)), sa = std::sin(deg2rad(azim_deg));
  const double ce = std::cos(deg2rad(elev_deg)), se = std::sin(deg2rad(elev_deg));
  // R_azim about (0,1,0): [[ca,0,sa],[0,1,0],[-sa,0,ca]]
  // R_elev about (1,0,0): [[1,0,0],[0,ce,-se],[0,se,ce]]
  Rotation r;
  r.m_ = {ca,       0.0, sa,        //
          se * sa,  ce,  -se * ca,  //
          -ce * sa, se,  ce * ca};
  return r;
}

Rotation Rotation::from_matrix(const std::array<double, 9>& m) {
  // m^T m = I within 1e-9 elementwise.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += m[3 * k + i] * m[3 * k + j];
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(dot - want) > kOrthoTol) {
        throw std::invalid_argument("Rotation: matrix is not orthonormal");
      }
    }
  }
  const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                     m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
  if (std::abs(det - 1.0) > kOrthoTol) {
    throw std::invalid_argument("Rotation: determinant is not +1");
  }
  Rotation r;
  r.m_ = m;
  return r;
}

Rotation Rotation::transposed() const {
  Rotation r;
  r.m_ = {m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]};
  return r;
}

Vec3 Rotation::apply(const Vec3& v) const {
  return {m_[0] * v.x + m_[1] * v.y + m_[2] * v.z,
          m_[3] * v.x + m_[4] * v.y + m_[5] * v.z,
          m_[6] * v.x + m_[7] * v.y + m_[8] * v.z};
}

Vec3 Rotation::apply_transposed(const Vec3& v) const {
  return {m_[0] * v.x + m_[3] * v.y + m_[6] * v.z,
          m_[1] * v.x + m_[4] * v.y + m_[7] * v.z,
          m_[2] * v.x + m_[5] * v.y + m_[8] * v.z};
}

std::vector<double> ring_angles(int n_views) {
  if (n_views < 1) throw std::invalid_argument("ring_angles: n_views must be >= 1");
  std::vector<double> angles(n_views);
  for (int i = 1; i <= n_views; ++i) {
    angles[i - 1] = std::fmod(360.0 * i / n_views, 360.0);
  }
  return angles;
}

std::vector<Rotation> azimuth_ring(int n_views) {
  std::vector<Rotation> ring;
  ring.reserve(n_views);
  for (double a : ring_angles(n_views)) {
    ring.push_back(a == 0.0 ? Rotation::identity() : Rotation::from_azim_elev(a, 0.0));
  }
  return ring;
}

Slice::Slice(int side_, std::vector<double> data_) : side(side_), data(std::move(data_)) {
  if (side < 1) throw std::invalid_argument("Slice: side must be positive");
  if (data.size() != static_cast<std::size_t>(side) * side) {
    throw std::invalid_argument("Slice: data length does not equal side^2");
  }
  check_finite(data, "Slice");
}

Slice constant_slice(int side, double value) {
  return Slice(side, std::vector<double>(static_cast<std::size_t>(side) * side, value));
}

Volume::Volume(int side_, const std::array<double, 3>& spacing_, std::vector<double> data_)
    : side(side_), spacing(spacing_), data(std::move(data_)) {
  if (side < 2) throw std::invalid_argument("Volume: side must be >= 2");
  const std::size_t want = static_cast<std::size_t>(side) * side * side;
  if (data.size() != want) {
    throw std::invalid_argument("Volume: data length does not equal side^3");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("Volume: spacing must be strictly positive");
    }
  }
  check_finite(data, "Volume");
}

Volume new_volume(int side, const std::array<double, 3>& spacing, std::vector<double> data) {
  return Volume(side, spacing, std::move(data));
}

Volume pad_to_cube(const std::array<int, 3>& dims, std::span<const double> data,
                   const std::array<double, 3>& spacing) {
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("pad_to_cube: dims must be positive");
  }
  const std::size_t want = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (data.size() != want) {
    throw std::invalid_argument("pad_to_cube: data length does not match dims");
  }
  const int side = std::max({dims[0], dims[1], dims[2]});
  const int off_d = (side - dims[0]) / 2;
  const int off_h = (side - dims[1]) / 2;
  const int off_w = (side - dims[2]) / 2;
  std::vector<double> out(static_cast<std::size_t>(side) * side * side, 0.0);
  for (int d = 0; d < dims[0]; ++d) {
    for (int h = 0; h < dims[1]; ++h) {
      const std::size_t src = (static_cast<std::size_t>(d) * dims[1] + h) * dims[2];
      const std::size_t dst =
          (static_cast<std::size_t>(d + off_d) * side + (h + off_h)) * side + off_w;
      std::copy_n(data.data() + src, dims[2], out.data() + dst);
    }
  }
  return Volume(side, spacing, std::move(out));
}

namespace {

// Trilinear sample with zero extension outside [0, S-1]^3.
double sample_trilinear(const Volume& v, double qd, double qh, double qw) {
  const int S = v.side;
  const double fd = std::floor(qd), fh = std::floor(qh), fw = std::floor(qw);
  const int id = static_cast<int>(fd), ih = static_cast<int>(fh), iw = static_cast<int>(fw);
  const double td = qd - fd, th = qh - fh, tw = qw - fw;
  double acc = 0.0;
  for (int cd = 0; cd < 2; ++cd) {
    const int d = id + cd;
    if (d < 0 || d >= S) continue;
    const double wd = cd ? td : 1.0 - td;
    if (wd == 0.0) continue;
    for (int ch = 0; ch < 2; ++ch) {
      const int h = ih + ch;
      if (h < 0 || h >= S) continue;
      const double wh = ch ? th : 1.0 - th;
      if (wh == 0.0) continue;
      for (int cw = 0; cw < 2; ++cw) {
        const int w = iw + cw;
        if (w < 0 || w >= S) continue;
        const double ww = cw ? tw : 1.0 - tw;
        if (ww == 0.0) continue;
        acc += wd * wh * ww * v.at(d, h, w);
      }
    }
  }
  return acc;
}

// Writes depth plane d0 (0-based) of the rotated volume into out.
void rotated_plane_into(const Volume& v, const Rotation& r, int d0, double* out) {
  const int S = v.side;
  const double c = (S - 1) / 2.0;
  // Grid position (d,h,w) maps to world (x,y,z) = (w,h,d).
  for (int h = 0; h < S; ++h) {
    for (int w = 0; w < S; ++w) {
      const Vec3 p{w - c, h - c, d0 - c};
      const Vec3 q = r.apply_transposed(p);
      out[static_cast<std::size_t>(h) * S + w] =
          sample_trilinear(v, q.z + c, q.y + c, q.x + c);
    }
  }
}

}  // namespace

Volume rotate_volume(const Volume& v, const Rotation& r) {
  const int S = v.side;
  std::vector<double> out(v.voxels());
  for (int d = 0; d < S; ++d) {
    rotated_plane_into(v, r, d, out.data() + static_cast<std::size_t>(d) * S * S);
  }
  return Volume(S, v.spacing, std::move(out));
}

Volume unrotate(const Volume& v, const Rotation& r) {
  return rotate_volume(v, r.transposed());
}

Slice extract_slice(const Volume& v, int d) {
  if (d < 1 || d > v.side) throw std::out_of_range("extract_slice: depth index out of range");
  const std::size_t plane = static_cast<std::size_t>(v.side) * v.side;
  const std::size_t off = static_cast<std::size_t>(d - 1) * plane;
  return Slice(v.side, {v.data.begin() + off, v.data.begin() + off + plane});
}

Slice rotated_slice(const Volume& v, const Rotation& r, int d) {
  if (d < 1 || d > v.side) throw std::out_of_range("rotated_slice: depth index out of range");
  std::vector<double> out(static_cast<std::size_t>(v.side) * v.side);
  rotated_plane_into(v, r, d - 1, out.data());
  return Slice(v.side, std::move(out));
}

Volume stack_slices(const std::vector<Slice>& slices, const std::array<double, 3>& spacing) {
  if (slices.empty()) throw std::invalid_argument("stack_slices: empty slice list");
  const int S = static_cast<int>(slices.size());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(S) * S * S);
  for (const Slice& s : slices) {
    if (s.side != S) {
      throw std::invalid_argument("stack_slices: slice side does not match slice count");
    }
    out.insert(out.end(), s.data.begin(), s.data.end());
  }
  return Volume(S, spacing, std::move(out));
}

namespace {

void check_same_sides(const std::vector<Volume>& vs, const char* what) {
  if (vs.empty()) throw std::invalid_argument(std::string(what) + ": empty volume list");
  for (const Volume& v : vs) {
    if (v.side != vs.front().side) {
      throw std::invalid_argument(std::string(what) + ": volume sides differ");
    }
  }
}

}  // namespace

Volume average_volumes(const std::vector<Volume>& vs) {
  check_same_sides(vs, "average_volumes");
  const std::size_t n = vs.front().voxels();
  const double inv = 1.0 / static_cast<double>(vs.size());
  std::vector<double> out(n);
  std::vector<double> vals(vs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < vs.size(); ++k) vals[k] = vs[k].data[i];
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (double x : vals) sum += x;
    out[i] = sum * inv;
  }
  return Volume(vs.front().side, vs.front().spacing, std::move(out));
}

Volume maxpool_volumes(const std::vector<Volume>& vs) {
  check_same_sides(vs, "maxpool_volumes");
  const std::size_t n = vs.front().voxels();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = vs.front().data[i];
    for (std::size_t k = 1; k < vs.size(); ++k) m = std::max(m, vs[k].data[i]);
    out[i] = m;
  }
  return Volume(vs.front().side, vs.front().spacing, std::move(out));
}

Volume downsample_axis(const Volume& v, int axis, int factor) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("downsample_axis: axis must be 0, 1, or 2");
  if (factor < 2) throw std::invalid_argument("downsample_axis: factor must be >= 2");
  if (v.side % factor != 0) {
    throw std::invalid_argument("downsample_axis: factor does not divide side");
  }
  const int S = v.side;
  const int kept = S / factor;
  std::array<int, 3> dims{S, S, S};
  dims[axis] = kept;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  for (int d = 0; d < dims[0]; ++d) {
    for (int h = 0; h < dims[1]; ++h) {
      for (int w = 0; w < dims[2]; ++w) {
        const int sd = axis == 0 ? d * factor : d;
        const int sh = axis == 1 ? h * factor : h;
        const int sw = axis == 2 ? w * factor : w;
        out.push_back(v.at(sd, sh, sw));
      }
    }
  }
  std::array<double, 3> spacing = v.spacing;
  spacing[axis] *= factor;
  return pad_to_cube(dims, out, spacing);
}

}  // namespace xdiff
