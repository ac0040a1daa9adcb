#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpj/forecast_data.hpp"
#include "mpj/hodmd.hpp"
#include "mpj/neural/arch.hpp"
#include "mpj/neural/train.hpp"
#include "mpj/synth.hpp"

namespace mpj::cli {

struct ModelSettings {
  neural::ModelKind kind = neural::ModelKind::Rnn;
  bool scaled = false;
  neural::TrainConfig train;
  // RNN: {lstm, fc1, fc2}; CNN: conv filters per block.
  std::vector<std::size_t> widths;
  std::size_t fc = 80;  // CNN hidden dense width
};

struct RunConfig {
  std::uint64_t seed = 0;

  synth::SynthConfig synth;
  double noise_fraction = 0.0;  // noise std as a fraction of the clean field RMS

  std::optional<std::filesystem::path> snapshots;  // default <out>/flow.mpjf
  std::optional<std::filesystem::path> baseline;   // single-phase field to subtract

  hodmd::HodmdConfig hodmd;
  double strouhal_h = 1.0;
  double strouhal_u = 1.0;
  std::size_t reconstruct_samples = 0;  // 0: same K as the snapshot file

  forecast::SplitSpec split{184, 45, 122};
  std::size_t q = 10;
  std::size_t horizon = 2;  // fixed; not a config key
  std::vector<ModelSettings> models;
  std::size_t predict_window = 0;

  /// Every key with its effective value, in canonical text form.
  std::map<std::string, std::string> resolved;

  neural::ArchSpec arch(const ModelSettings& m) const;
  const ModelSettings* model(neural::ModelKind kind) const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, malformed
/// values and inconsistent combinations raise ConfigError.
RunConfig parse_config(std::string_view text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

std::string format_config(const RunConfig& cfg);

}  // namespace mpj::cli
