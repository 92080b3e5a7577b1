#include "xdiff_cli/formats.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xdiff/serialize.hpp"

namespace xdiff::cli {

namespace {
constexpr char kMagic[8] = {'X', 'D', 'I', 'F', 'V', 'O', 'L', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_xvol(const std::string& path, const Volume& v) {
  std::vector<std::uint8_t> out;
  out.reserve(32 + v.voxels() * 4);
  out.insert(out.end(), kMagic, kMagic + 8);
  bytes::put_u32(out, kVersion);
  bytes::put_u32(out, static_cast<std::uint32_t>(v.side));
  for (double s : v.spacing) bytes::put_f32(out, static_cast<float>(s));
  for (double x : v.data) bytes::put_f32(out, static_cast<float>(x));
  bytes::put_u32(out, crc32_of(out.data(), out.size()));
  write_file_bytes(path, out);
}

Volume read_xvol(const std::string& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  if (raw.size() < 8 + 4 + 4 + 12 + 4) throw IoError("volume file too small: " + path);
  if (std::memcmp(raw.data(), kMagic, 8) != 0) throw IoError("bad volume magic: " + path);
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(raw[raw.size() - 4]) |
      (static_cast<std::uint32_t>(raw[raw.size() - 3]) << 8) |
      (static_cast<std::uint32_t>(raw[raw.size() - 2]) << 16) |
      (static_cast<std::uint32_t>(raw[raw.size() - 1]) << 24);
  if (crc32_of(raw.data(), raw.size() - 4) != stored_crc) {
    throw IoError("volume CRC mismatch: " + path);
  }

  bytes::Reader r(raw.data() + 8, raw.size() - 12);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw IoError("unsupported volume version: " + path);
  const std::uint32_t side = r.u32();
  if (side < 2 || side > 4096) throw IoError("bad volume side: " + path);
  std::array<double, 3> spacing{};
  for (double& s : spacing) s = r.f32();
  const std::size_t voxels = static_cast<std::size_t>(side) * side * side;
  if (r.remaining() != voxels * 4) throw IoError("volume payload size mismatch: " + path);
  std::vector<double> data(voxels);
  for (double& x : data) x = r.f32();
  try {
    return Volume(static_cast<int>(side), spacing, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid volume contents: ") + e.what());
  }
}

void write_pgm(const std::string& path, const Slice& s, double lo, double hi) {
  std::string header = "P5\n" + std::to_string(s.side) + " " + std::to_string(s.side) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const double range = hi - lo;
  for (double v : s.data) {
    double u = range > 0.0 ? (v - lo) / range : 0.0;
    u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
    out.push_back(static_cast<std::uint8_t>(std::lround(u * 255.0)));
  }
  write_file_bytes(path, out);
}

SegMask read_mask(const std::string& path) {
  const Volume v = read_xvol(path);
  std::vector<int> labels(v.voxels());
  for (std::size_t i = 0; i < v.voxels(); ++i) {
    const long l = std::lround(v.data[i]);
    if (l < 0 || std::abs(v.data[i] - static_cast<double>(l)) > 1e-3) {
      throw IoError("mask voxels must be small nonnegative integers: " + path);
    }
    labels[i] = static_cast<int>(l);
  }
  return SegMask(v.side, std::move(labels));
}

std::vector<std::array<double, 2>> read_centerline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open centerline: " + path);
  std::vector<std::array<double, 2>> pts;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double x, y;
    if (ss >> x >> y) pts.push_back({x, y});
  }
  return pts;
}

}  // namespace xdiff::cli
