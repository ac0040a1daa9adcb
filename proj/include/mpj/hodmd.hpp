#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpj/field.hpp"
#include "mpj/modes.hpp"

namespace mpj::hodmd {

/// Delay window `d` plus the two truncation tolerances: `eps1` acts on
/// singular values, `eps` on normalised mode amplitudes.
struct HodmdConfig {
  std::size_t d = 1;
  double eps1 = 1e-8;
  double eps = 1e-8;
};

/// Named parameter sets for the single- and multiphase jet cases.
struct HodmdPreset {
  std::string_view name;
  HodmdConfig config;
};

std::span<const HodmdPreset> presets();
/// Throws std::invalid_argument for unknown names.
HodmdConfig preset(std::string_view name);

struct HodmdResult {
  std::vector<DmdMode> modes;  // sorted by mode_order
  std::size_t spatial_complexity = 0;
  std::size_t spectral_complexity = 0;
  double t0 = 0.0;
  double dt = 1.0;
  Grid2D grid;
};

/// Higher-order DMD with delay embedding (DMD-d):
///   1. eps1-truncated SVD of the snapshots gives N reduced snapshots;
///   2. the reduced snapshots are stacked d times with unit delay;
///   3. a second eps1-truncated SVD and a least-squares one-step operator;
///   4. eigenvalues mu give growth rate ln|mu|/dt and frequency arg(mu)/dt;
///   5. eigenvectors are lifted back to the grid and scaled to unit RMS;
///   6. complex amplitudes are fitted over all K snapshots;
///   7. modes with a_m / max a < eps are dropped.
/// Throws std::invalid_argument if K <= d + 1 or the config is out of range,
/// EmptySpectrumError for identically zero input.
HodmdResult hodmd_decompose(const SnapshotMatrix& v, const HodmdConfig& cfg);

/// Retained-mode model evaluated at t0 + k dt.
struct Rom {
  HodmdResult result;
};

SnapshotMatrix rom_reconstruct(const Rom& rom, std::span<const std::size_t> t_indices);
/// Reconstruction at indices 0..count-1.
SnapshotMatrix rom_reconstruct(const Rom& rom, std::size_t count);

/// Complex expansion before the real part is taken.
Eigen::MatrixXcd rom_expansion(const Rom& rom, std::span<const std::size_t> t_indices);

/// Largest |Im| of the expansion over the RMS of its real part.
double rom_imag_residue(const Rom& rom, std::size_t count);

/// omega h / (2 pi u)
double strouhal(double omega, double h, double u);

struct ModeRow {
  std::size_t m = 0;  // 1-based
  double amp_norm = 0.0;
  double amplitude = 0.0;
  double delta = 0.0;
  double omega = 0.0;
  double strouhal = 0.0;
  double phase = 0.0;
};

std::vector<ModeRow> mode_table(const HodmdResult& result, double h, double u);
std::vector<ModeRow> mode_table(std::span<const DmdMode> modes, double h, double u);

/// Header `m,amp_norm,amplitude,delta,omega,strouhal,phase`.
void write_mode_table_csv(const std::filesystem::path& path, std::span<const ModeRow> rows);

// ROM checkpoint: "MPJR", u32 version, u32 nx, u32 ny, u32 N, u32 M, f64 dt,
// f64 t0, then per mode f64 amplitude, phase, delta, omega followed by J
// (re, im) pairs.
inline constexpr char kRomMagic[4] = {'M', 'P', 'J', 'R'};
inline constexpr std::uint32_t kRomVersion = 1;

void write_rom(const std::filesystem::path& path, const Rom& rom);
Rom read_rom(const std::filesystem::path& path);

}  // namespace mpj::hodmd
