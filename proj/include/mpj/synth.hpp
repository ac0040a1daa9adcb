#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mpj/field.hpp"
#include "mpj/modes.hpp"

namespace mpj::synth {

enum class PatternKind {
  Constant,          // 1 everywhere
  Sinusoid,          // sin(2 pi kx x/nx + phase) * cos(2 pi ky y/ny)
  TravelingWave,     // exp(i (2 pi kx x/nx + 2 pi ky y/ny + phase)), complex
  GaussianSinusoid,  // Gaussian envelope times Sinusoid
};

struct SpatialPattern {
  PatternKind kind = PatternKind::Constant;
  double kx = 0.0;
  double ky = 0.0;
  double phase = 0.0;
  // Gaussian envelope centre and width as fractions of the domain.
  double x0 = 0.5;
  double y0 = 0.5;
  double width = 0.25;
};

/// Evaluates a pattern on every grid point in snapshot order.
Eigen::VectorXcd evaluate_pattern(const SpatialPattern& p, const Grid2D& grid);

/// One physical mode. Oscillatory modes (frequency != 0) contribute
/// amplitude * Re[p e^{i phase} e^{(delta + i omega) t}], which the
/// generator represents as a conjugate pair.
struct ModeSpec {
  double amplitude = 1.0;
  double growth_rate = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  SpatialPattern pattern;
};

struct SynthConfig {
  Grid2D grid{16, 16};
  std::size_t samples = 100;
  double dt = 0.1;
  std::vector<ModeSpec> modes;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratedFlow {
  SnapshotMatrix snapshots;
  std::vector<DmdMode> ground_truth;  // unit-RMS modes, sorted by mode_order
  Eigen::MatrixXcd expansion;         // complex sum before taking the real part
};

/// Throws ValidationError for non-finite or out-of-range parameters.
GeneratedFlow generate_flow(const SynthConfig& cfg);

/// Per-window prediction of the last seen snapshot for both horizons.
/// Column 2i and 2i+1 hold the predictions for window i (targets i+q and
/// i+q+1); both are copies of snapshot i+q-1.
SnapshotMatrix persistence_baseline(const SnapshotMatrix& v, std::size_t q);

}  // namespace mpj::synth
