#include "xdiff/condition.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xdiff {

Slice reduce_slices(const std::vector<Slice>& slices) {
  if (slices.empty()) throw std::invalid_argument("reduce_slices: empty slice list");
  const int side = slices.front().side;
  for (const Slice& s : slices) {
    if (s.side != side) throw std::invalid_argument("reduce_slices: slice sides differ");
  }
  if (slices.size() == 1) return slices.front();
  const std::size_t n = slices.front().data.size();
  const double inv = 1.0 / static_cast<double>(slices.size() - 1);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j + 1 < slices.size(); ++j) {
    const std::vector<double>& a = slices[j].data;
    const std::vector<double>& b = slices[j + 1].data;
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
  }
  for (double& x : out) x *= inv;
  return Slice(side, std::move(out));
}

std::vector<Slice> repeat_slice(const Slice& s, int k) {
  if (k < 1) throw std::invalid_argument("repeat_slice: k must be >= 1");
  return std::vector<Slice>(static_cast<std::size_t>(k), s);
}

PoseEmbedding embed_pose(int d, int depth_count, double azim_deg, double elev_deg) {
  if (depth_count < 2) throw std::invalid_argument("embed_pose: depth count must be >= 2");
  if (d < 1 || d > depth_count) throw std::out_of_range("embed_pose: depth index out of range");
  const double azim = azim_deg * std::numbers::pi / 180.0;
  const double elev = elev_deg * std::numbers::pi / 180.0;
  PoseEmbedding p;
  p.depth_frac = static_cast<double>(d - 1) / static_cast<double>(depth_count - 1);
  p.azim_sin = std::sin(azim);
  p.azim_cos = std::cos(azim);
  p.elev_sin = std::sin(elev);
  p.elev_cos = std::cos(elev);
  return p;
}

Condition make_condition(const std::vector<Slice>& slices, int d, int depth_count,
                         double azim_deg, double elev_deg) {
  return Condition{reduce_slices(slices), embed_pose(d, depth_count, azim_deg, elev_deg)};
}

}  // namespace xdiff
