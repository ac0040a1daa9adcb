#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace mpj {

/// One term a * e^{i phase} * u * e^{(growth_rate + i frequency) t} of a
/// modal expansion. `spatial` has unit RMS.
struct DmdMode {
  Eigen::VectorXcd spatial;
  double amplitude = 0.0;
  double growth_rate = 0.0;
  double frequency = 0.0;  // rad / time
  double phase = 0.0;      // rad

  std::complex<double> eigenvalue() const { return {growth_rate, frequency}; }
  std::complex<double> complex_amplitude() const { return std::polar(amplitude, phase); }
};

/// Descending amplitude; ties by ascending |omega|, then negative omega first.
bool mode_order(const DmdMode& a, const DmdMode& b);

}  // namespace mpj
