#include "mpj/hodmd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mpj/errors.hpp"
#include "mpj/linalg.hpp"

namespace mpj {

bool mode_order(const DmdMode& a, const DmdMode& b) {
  if (a.amplitude != b.amplitude) return a.amplitude > b.amplitude;
  if (std::abs(a.frequency) != std::abs(b.frequency)) return std::abs(a.frequency) < std::abs(b.frequency);
  return a.frequency < b.frequency;
}

namespace hodmd {

namespace {

using linalg::Complex;

constexpr std::array kPresets = {
    HodmdPreset{"simple-singlephase", {100, 7e-3, 7e-3}},
    HodmdPreset{"simple-multiphase", {60, 7e-3, 7e-3}},
    HodmdPreset{"modified-singlephase", {60, 2e-3, 2e-3}},
    HodmdPreset{"modified-multiphase", {100, 8e-3, 8e-3}},
    HodmdPreset{"modified-multiphase-surface-tension", {100, 5e-3, 5e-3}},
};

void validate(const HodmdConfig& cfg, std::size_t samples) {
  if (cfg.d < 1) throw std::invalid_argument("hodmd: delay window d must be >= 1");
  if (!(cfg.eps1 > 0.0 && cfg.eps1 < 1.0)) throw std::invalid_argument("hodmd: eps1 must lie in (0,1)");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw std::invalid_argument("hodmd: eps must lie in (0,1)");
  if (samples <= cfg.d + 1) {
    throw std::invalid_argument("hodmd: need K >= d + 2 samples (K = " + std::to_string(samples) +
                                ", d = " + std::to_string(cfg.d) + ")");
  }
}

// Rows [b N, (b+1) N) of the result hold reduced snapshots b .. b + cols - 1.
Eigen::MatrixXd delay_embed(const Eigen::MatrixXd& reduced, std::size_t d) {
  const Eigen::Index n = reduced.rows();
  const Eigen::Index cols = reduced.cols() - static_cast<Eigen::Index>(d) + 1;
  Eigen::MatrixXd out(n * static_cast<Eigen::Index>(d), cols);
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(d); ++b) {
    out.middleRows(b * n, n) = reduced.middleCols(b, cols);
  }
  return out;
}

}  // namespace

std::span<const HodmdPreset> presets() { return kPresets; }

HodmdConfig preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p.config;
  }
  throw std::invalid_argument("unknown HODMD preset '" + std::string(name) + "'");
}

HodmdResult hodmd_decompose(const SnapshotMatrix& v, const HodmdConfig& cfg) {
  validate(cfg, v.samples());
  if (v.data().cwiseAbs().maxCoeff() == 0.0) throw EmptySpectrumError("hodmd: input snapshots are all zero");

  const double dt = v.dt();
  const auto samples = static_cast<Eigen::Index>(v.samples());

  // Spatial reduction.
  const linalg::TruncatedSvd spatial = linalg::truncated_svd(v.data(), cfg.eps1);
  const Eigen::MatrixXd reduced = spatial.s.asDiagonal() * spatial.vt;

  // Delay-embedded reduction and one-step operator on it.
  const Eigen::MatrixXd delayed = delay_embed(reduced, cfg.d);
  const linalg::TruncatedSvd enhanced = linalg::truncated_svd(delayed, cfg.eps1);
  const Eigen::MatrixXd coords = enhanced.s.asDiagonal() * enhanced.vt;
  const Eigen::Index steps = coords.cols() - 1;
  const Eigen::MatrixXd operator_t =
      linalg::lstsq(coords.leftCols(steps).transpose(), coords.rightCols(steps).transpose());
  const linalg::EigenPairs eig = linalg::eig_dense(Eigen::MatrixXd(operator_t.transpose()));

  // Lift eigenvectors to the grid through the first delay block.
  const auto n = static_cast<Eigen::Index>(spatial.rank);
  const Eigen::MatrixXcd lifted = enhanced.u.topRows(n).cast<Complex>() * eig.vectors;

  std::vector<Eigen::Index> kept;
  std::vector<Complex> lambdas;
  std::vector<Eigen::VectorXcd> spatial_modes;
  std::vector<Eigen::VectorXcd> reduced_modes;
  for (Eigen::Index m = 0; m < lifted.cols(); ++m) {
    const Complex mu = eig.values(m);
    if (std::abs(mu) == 0.0) continue;
    const Eigen::VectorXcd full = spatial.u.cast<Complex>() * lifted.col(m);
    const double scale = linalg::rms(full);
    if (!(scale > 0.0)) continue;
    kept.push_back(m);
    lambdas.push_back(std::log(mu) / dt);
    spatial_modes.push_back(full / scale);
    reduced_modes.push_back(lifted.col(m) / scale);
  }
  if (kept.empty()) throw EmptySpectrumError("hodmd: no usable eigenvalues");

  // Amplitude fit of all K snapshots in the reduced spatial basis.
  const auto count = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXcd system(n * samples, count);
  for (Eigen::Index k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * dt;
    for (Eigen::Index m = 0; m < count; ++m) {
      system.block(k * n, m, n, 1) = reduced_modes[static_cast<std::size_t>(m)] *
                                     std::exp(lambdas[static_cast<std::size_t>(m)] * t);
    }
  }
  const Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXd>(reduced.data(), reduced.size()).cast<Complex>();
  const Eigen::VectorXcd amplitudes = linalg::lstsq(system, rhs);

  std::vector<DmdMode> modes;
  double max_amplitude = 0.0;
  for (Eigen::Index m = 0; m < count; ++m) {
    const Complex b = amplitudes(m);
    const Complex lambda = lambdas[static_cast<std::size_t>(m)];
    modes.push_back({std::move(spatial_modes[static_cast<std::size_t>(m)]), std::abs(b), lambda.real(),
                     lambda.imag(), std::arg(b)});
    max_amplitude = std::max(max_amplitude, std::abs(b));
  }
  if (!(max_amplitude > 0.0)) throw EmptySpectrumError("hodmd: every fitted amplitude is zero");

  std::erase_if(modes, [&](const DmdMode& m) { return m.amplitude / max_amplitude < cfg.eps; });
  std::stable_sort(modes.begin(), modes.end(), mode_order);

  HodmdResult result;
  result.spatial_complexity = spatial.rank;
  result.spectral_complexity = modes.size();
  result.modes = std::move(modes);
  result.t0 = 0.0;
  result.dt = dt;
  result.grid = v.grid();
  return result;
}

Eigen::MatrixXcd rom_expansion(const Rom& rom, std::span<const std::size_t> t_indices) {
  const HodmdResult& r = rom.result;
  if (r.modes.empty()) throw std::invalid_argument("rom: no modes retained");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(r.grid.points()),
                                                static_cast<Eigen::Index>(t_indices.size()));
  for (std::size_t c = 0; c < t_indices.size(); ++c) {
    const double t = r.t0 + static_cast<double>(t_indices[c]) * r.dt;
    for (const auto& m : r.modes) {
      out.col(static_cast<Eigen::Index>(c)) += (m.complex_amplitude() * std::exp(m.eigenvalue() * t)) * m.spatial;
    }
  }
  return out;
}

SnapshotMatrix rom_reconstruct(const Rom& rom, std::span<const std::size_t> t_indices) {
  if (t_indices.empty()) throw std::invalid_argument("rom_reconstruct: no time indices requested");
  const Eigen::MatrixXcd expansion = rom_expansion(rom, t_indices);
  return {rom.result.grid, rom.result.dt, expansion.real()};
}

SnapshotMatrix rom_reconstruct(const Rom& rom, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t k = 0; k < count; ++k) idx[k] = k;
  return rom_reconstruct(rom, idx);
}

double rom_imag_residue(const Rom& rom, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t k = 0; k < count; ++k) idx[k] = k;
  const Eigen::MatrixXcd expansion = rom_expansion(rom, idx);
  const double field_rms = std::sqrt(expansion.real().squaredNorm() / static_cast<double>(expansion.size()));
  if (!(field_rms > 0.0)) return 0.0;
  return expansion.imag().cwiseAbs().maxCoeff() / field_rms;
}

double strouhal(double omega, double h, double u) {
  if (u == 0.0) throw std::invalid_argument("strouhal: reference velocity must be non-zero");
  return omega * h / (2.0 * std::numbers::pi * u);
}

std::vector<ModeRow> mode_table(std::span<const DmdMode> modes, double h, double u) {
  if (modes.empty()) throw std::invalid_argument("mode_table: no modes");
  std::vector<const DmdMode*> sorted;
  for (const auto& m : modes) sorted.push_back(&m);
  std::stable_sort(sorted.begin(), sorted.end(), [](const DmdMode* a, const DmdMode* b) { return mode_order(*a, *b); });

  const double amax = sorted.front()->amplitude;
  std::vector<ModeRow> rows;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const DmdMode& m = *sorted[i];
    rows.push_back({i + 1, amax > 0.0 ? m.amplitude / amax : 0.0, m.amplitude, m.growth_rate, m.frequency,
                    strouhal(m.frequency, h, u), m.phase});
  }
  return rows;
}

std::vector<ModeRow> mode_table(const HodmdResult& result, double h, double u) {
  return mode_table(std::span<const DmdMode>(result.modes), h, u);
}

}  // namespace hodmd
}  // namespace mpj
