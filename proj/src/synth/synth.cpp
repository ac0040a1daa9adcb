#include "mpj/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mpj/errors.hpp"
#include "mpj/linalg.hpp"

namespace mpj::synth {

namespace {

using Complex = std::complex<double>;

bool finite(const SpatialPattern& p) {
  return std::isfinite(p.kx) && std::isfinite(p.ky) && std::isfinite(p.phase) && std::isfinite(p.x0) &&
         std::isfinite(p.y0) && std::isfinite(p.width);
}

void validate(const SynthConfig& cfg) {
  if (cfg.grid.nx < 1 || cfg.grid.ny < 1) throw ValidationError("synthetic flow: empty grid");
  if (cfg.samples < 1) throw ValidationError("synthetic flow: need at least one sample");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ValidationError("synthetic flow: dt must be positive");
  if (!(cfg.noise_std >= 0.0) || !std::isfinite(cfg.noise_std)) {
    throw ValidationError("synthetic flow: noise_std must be finite and >= 0");
  }
  if (cfg.modes.empty()) throw ValidationError("synthetic flow: no modes configured");
  for (const auto& m : cfg.modes) {
    if (!std::isfinite(m.amplitude) || !std::isfinite(m.growth_rate) || !std::isfinite(m.frequency) ||
        !std::isfinite(m.phase) || !finite(m.pattern)) {
      throw ValidationError("synthetic flow: non-finite mode parameter");
    }
    if (m.amplitude < 0.0) throw ValidationError("synthetic flow: mode amplitude must be >= 0");
    if (m.pattern.kind == PatternKind::GaussianSinusoid && !(m.pattern.width > 0.0)) {
      throw ValidationError("synthetic flow: Gaussian width must be positive");
    }
  }
}

// splitmix64 finaliser; gives each snapshot an independent noise stream.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Eigen::VectorXcd evaluate_pattern(const SpatialPattern& p, const Grid2D& grid) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Eigen::VectorXcd out(static_cast<Eigen::Index>(grid.points()));
  for (std::size_t j = 0; j < grid.ny; ++j) {
    const double y = static_cast<double>(j) / static_cast<double>(grid.ny);
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(grid.nx);
      Complex value;
      switch (p.kind) {
        case PatternKind::Constant:
          value = 1.0;
          break;
        case PatternKind::Sinusoid:
          value = std::sin(two_pi * p.kx * x + p.phase) * std::cos(two_pi * p.ky * y);
          break;
        case PatternKind::TravelingWave:
          value = std::polar(1.0, two_pi * (p.kx * x + p.ky * y) + p.phase);
          break;
        case PatternKind::GaussianSinusoid: {
          const double r2 = (x - p.x0) * (x - p.x0) + (y - p.y0) * (y - p.y0);
          const double envelope = std::exp(-r2 / (2.0 * p.width * p.width));
          value = envelope * std::sin(two_pi * p.kx * x + p.phase) * std::cos(two_pi * p.ky * y);
          break;
        }
      }
      out(static_cast<Eigen::Index>(grid.index(i, j))) = value;
    }
  }
  return out;
}

GeneratedFlow generate_flow(const SynthConfig& cfg) {
  validate(cfg);

  std::vector<DmdMode> truth;
  for (const auto& spec : cfg.modes) {
    const Eigen::VectorXcd pattern = evaluate_pattern(spec.pattern, cfg.grid);
    if (spec.frequency == 0.0) {
      // Non-oscillating: only the real part of p e^{i phase} survives.
      const Eigen::VectorXcd real_part = (pattern * std::polar(1.0, spec.phase)).real().cast<Complex>();
      const double scale = linalg::rms(real_part);
      if (!(scale > 0.0)) throw ValidationError("synthetic flow: steady mode has a vanishing pattern");
      truth.push_back({real_part / scale, spec.amplitude * scale, spec.growth_rate, 0.0, 0.0});
      continue;
    }
    const double scale = linalg::rms(pattern);
    if (!(scale > 0.0)) throw ValidationError("synthetic flow: mode pattern vanishes on this grid");
    const double half = 0.5 * spec.amplitude * scale;
    truth.push_back({pattern / scale, half, spec.growth_rate, spec.frequency, spec.phase});
    truth.push_back({pattern.conjugate() / scale, half, spec.growth_rate, -spec.frequency, -spec.phase});
  }

  const auto points = static_cast<Eigen::Index>(cfg.grid.points());
  const auto samples = static_cast<Eigen::Index>(cfg.samples);
  Eigen::MatrixXcd expansion = Eigen::MatrixXcd::Zero(points, samples);
  for (Eigen::Index k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    for (const auto& m : truth) {
      expansion.col(k) += m.complex_amplitude() * std::exp(m.eigenvalue() * t) * m.spatial;
    }
  }

  Eigen::MatrixXd data = expansion.real();
  if (cfg.noise_std > 0.0) {
    for (Eigen::Index k = 0; k < samples; ++k) {
      std::mt19937_64 rng(mix(cfg.seed ^ mix(static_cast<std::uint64_t>(k))));
      std::normal_distribution<double> noise(0.0, cfg.noise_std);
      for (Eigen::Index r = 0; r < points; ++r) data(r, k) += noise(rng);
    }
  }

  std::stable_sort(truth.begin(), truth.end(), mode_order);
  return {SnapshotMatrix(cfg.grid, cfg.dt, std::move(data)), std::move(truth), std::move(expansion)};
}

SnapshotMatrix persistence_baseline(const SnapshotMatrix& v, std::size_t q) {
  if (q < 1) throw std::invalid_argument("persistence_baseline: q must be >= 1");
  if (v.samples() < q + 2) {
    throw std::invalid_argument("persistence_baseline: need at least q + 2 samples");
  }
  const std::size_t windows = v.samples() - q - 1;
  Eigen::MatrixXd out(v.data().rows(), static_cast<Eigen::Index>(2 * windows));
  for (std::size_t i = 0; i < windows; ++i) {
    const auto last = v.column(i + q - 1);
    out.col(static_cast<Eigen::Index>(2 * i)) = last;
    out.col(static_cast<Eigen::Index>(2 * i + 1)) = last;
  }
  return {v.grid(), v.dt(), std::move(out)};
}

}  // namespace mpj::synth
