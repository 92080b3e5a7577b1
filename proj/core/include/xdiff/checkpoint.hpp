#pragma once

#include <string>

#include "xdiff/denoiser.hpp"
#include "xdiff/schedule.hpp"

namespace xdiff {

/// Trained model bundle as stored on disk.
struct Checkpoint {
  ConvDenoiser net;
  NoiseSchedule schedule;
};

/// Binary format: magic "XDIFCKPT", u32 version, u32 layer count, per-layer
/// (out_ch, in_ch, kh, kw) u32 quadruples, u64 parameter count, f64 params,
/// u32 T, f64 betas, then a CRC32 of all preceding bytes. Little-endian.
void save_checkpoint(const std::string& path, const ConvDenoiser& net,
                     const NoiseSchedule& sched);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace xdiff
