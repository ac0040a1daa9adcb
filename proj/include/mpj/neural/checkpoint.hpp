#pragma once

#include <cstdint>
#include <filesystem>

#include "mpj/neural/arch.hpp"
#include "mpj/neural/params.hpp"

namespace mpj::neural {

// "MPJN", u32 version, then the architecture:
//   u32 kind, q, nx, ny, horizon, scaled_io, layer count, and per layer
//   u32 kind, units, window[3], activation
// followed by every tensor's float64 values in declaration order.
inline constexpr char kCheckpointMagic[4] = {'M', 'P', 'J', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ArchSpec arch;
  ModelParams params;
};

void write_checkpoint(const std::filesystem::path& path, const ArchSpec& arch, const ModelParams& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace mpj::neural
