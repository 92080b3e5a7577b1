#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "xdiff/checkpoint.hpp"
#include "xdiff/serialize.hpp"

using namespace xdiff;

TEST_SUITE_BEGIN("checkpoint");

namespace {

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
  const ConvDenoiser net = ConvDenoiser::make(5, 3, 2, 42);
  const NoiseSchedule sched = linear_schedule(64, 1e-4, 2e-2);
  const auto path = temp_path("xdiff_ckpt_roundtrip.bin");
  save_checkpoint(path.string(), net, sched);

  const Checkpoint loaded = load_checkpoint(path.string());
  CHECK(loaded.net.params() == net.params());
  CHECK(loaded.net.arch().size() == net.arch().size());
  CHECK(loaded.schedule.beta == sched.beta);
  CHECK(loaded.schedule.alpha_bar == sched.alpha_bar);

  // Saving the loaded model reproduces the bytes.
  const auto path2 = temp_path("xdiff_ckpt_roundtrip2.bin");
  save_checkpoint(path2.string(), loaded.net, loaded.schedule);
  CHECK(read_file_bytes(path.string()) == read_file_bytes(path2.string()));

  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("corrupted files are rejected") {
  const ConvDenoiser net = ConvDenoiser::make(4, 3, 1, 7);
  const NoiseSchedule sched = linear_schedule(16, 1e-4, 2e-2);
  const auto path = temp_path("xdiff_ckpt_corrupt.bin");
  save_checkpoint(path.string(), net, sched);

  SUBCASE("flipped payload byte breaks the CRC") {
    auto bytes = read_file_bytes(path.string());
    bytes[bytes.size() / 2] ^= 0xFF;
    write_file_bytes(path.string(), bytes);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  SUBCASE("bad magic") {
    auto bytes = read_file_bytes(path.string());
    bytes[0] = 'Y';
    write_file_bytes(path.string(), bytes);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  SUBCASE("truncation") {
    auto bytes = read_file_bytes(path.string());
    bytes.resize(bytes.size() / 2);
    write_file_bytes(path.string(), bytes);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(temp_path("xdiff_no_such_ckpt.bin").string()), IoError);
  }
  std::filesystem::remove(path);
}

TEST_SUITE_END();
