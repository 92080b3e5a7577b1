#include "xdiff/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "xdiff/serialize.hpp"

namespace xdiff {

namespace {
constexpr char kMagic[8] = {'X', 'D', 'I', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("cannot read file: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write file: " + path);
}

void save_checkpoint(const std::string& path, const ConvDenoiser& net,
                     const NoiseSchedule& sched) {
  std::vector<std::uint8_t> out;
  out.reserve(64 + net.param_count() * 8 + sched.beta.size() * 8);
  out.insert(out.end(), kMagic, kMagic + 8);
  bytes::put_u32(out, kVersion);
  bytes::put_u32(out, static_cast<std::uint32_t>(net.arch().size()));
  for (const ConvLayerShape& sh : net.arch()) {
    bytes::put_u32(out, sh.out_ch);
    bytes::put_u32(out, sh.in_ch);
    bytes::put_u32(out, sh.kh);
    bytes::put_u32(out, sh.kw);
  }
  bytes::put_u64(out, net.param_count());
  for (double p : net.params()) bytes::put_f64(out, p);
  bytes::put_u32(out, static_cast<std::uint32_t>(sched.T()));
  for (double b : sched.beta) bytes::put_f64(out, b);
  bytes::put_u32(out, crc32_of(out.data(), out.size()));
  write_file_bytes(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  if (raw.size() < 8 + 4 + 4 + 8 + 4 + 4) throw IoError("checkpoint too small: " + path);
  if (std::memcmp(raw.data(), kMagic, 8) != 0) {
    throw IoError("bad checkpoint magic: " + path);
  }
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(raw[raw.size() - 4]) |
      (static_cast<std::uint32_t>(raw[raw.size() - 3]) << 8) |
      (static_cast<std::uint32_t>(raw[raw.size() - 2]) << 16) |
      (static_cast<std::uint32_t>(raw[raw.size() - 1]) << 24);
  if (crc32_of(raw.data(), raw.size() - 4) != stored_crc) {
    throw IoError("checkpoint CRC mismatch: " + path);
  }

  bytes::Reader r(raw.data() + 8, raw.size() - 12);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw IoError("unsupported checkpoint version: " + path);
  const std::uint32_t layer_count = r.u32();
  if (layer_count < 2 || layer_count > 1024) throw IoError("bad checkpoint layer count: " + path);
  std::vector<ConvLayerShape> arch(layer_count);
  std::size_t expected_params = 0;
  for (ConvLayerShape& sh : arch) {
    sh.out_ch = r.u32();
    sh.in_ch = r.u32();
    sh.kh = r.u32();
    sh.kw = r.u32();
    expected_params += sh.param_count();
  }
  const std::uint64_t param_count = r.u64();
  if (param_count != expected_params) {
    throw IoError("checkpoint parameter count does not match architecture: " + path);
  }
  std::vector<double> params(param_count);
  for (double& p : params) p = r.f64();
  const std::uint32_t t_count = r.u32();
  if (t_count < 1 || t_count > 1000000) throw IoError("bad checkpoint schedule length: " + path);
  std::vector<double> beta(t_count);
  for (double& b : beta) b = r.f64();
  if (r.remaining() != 0) throw IoError("trailing bytes in checkpoint: " + path);

  try {
    return Checkpoint{ConvDenoiser(std::move(arch), std::move(params)),
                      NoiseSchedule(static_cast<int>(t_count), std::move(beta))};
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid checkpoint contents: ") + e.what());
  }
}

}  // namespace xdiff
