#pragma once

#include <array>
#include <string>
#include <vector>

#include "xdiff/metrics.hpp"
#include "xdiff/volume.hpp"

namespace xdiff::cli {

/// XVOL volume file: magic "XDIFVOL1", u32 version, u32 side, 3 x f32
/// spacing, side^3 f32 voxels depth-major, trailing CRC32. Little-endian;
/// readers reject bad magic or CRC.
void write_xvol(const std::string& path, const Volume& v);
Volume read_xvol(const std::string& path);

/// Binary PGM (P5, maxval 255); values are min-max normalized over [lo, hi]
/// so slices of one volume share a brightness scale.
void write_pgm(const std::string& path, const Slice& s, double lo, double hi);

/// Labels stored as an XVOL with integer-valued voxels.
SegMask read_mask(const std::string& path);

/// Two-column "x y" text, one point per line; '#' starts a comment.
std::vector<std::array<double, 2>> read_centerline(const std::string& path);

}  // namespace xdiff::cli
