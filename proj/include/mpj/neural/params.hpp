#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mpj/neural/arch.hpp"

namespace mpj::neural {

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  bool trainable = true;
  std::vector<double> values;

  bool operator==(const Tensor&) const = default;
};

/// Complete state of one forecaster, tensors in declaration order:
///   Lstm      kernel (in, 4h), recurrent_kernel (h, 4h), bias (4h); gate
///             blocks ordered input, forget, cell, output
///   Dense     kernel (in, out), bias (out)
///   Conv3D    kernel (kd, kh, kw, in, out), bias (out)
///   BatchNorm gamma, beta, moving_mean, moving_variance (last two frozen)
/// Kernels are stored row-major in the listed shape.
struct ModelParams {
  std::vector<Tensor> tensors;

  std::size_t parameter_count() const;
  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;
};

/// Per-tensor gradient buffers aligned with ModelParams::tensors; frozen
/// tensors keep an all-zero buffer.
struct Gradients {
  std::vector<std::vector<double>> tensors;

  static Gradients zeros_like(const ModelParams& p);
  void set_zero();
};

/// Declaration-ordered tensors for `arch`: Glorot-uniform kernels, zero
/// biases (LSTM forget gate bias 1), unit gamma and moving variance.
ModelParams init_params(const ArchSpec& arch, std::uint64_t seed);

/// Same tensor layout with every value zero (moving variance stays 1).
ModelParams zero_params(const ArchSpec& arch);

}  // namespace mpj::neural
