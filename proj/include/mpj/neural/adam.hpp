#pragma once

#include <cstddef>
#include <vector>

#include "mpj/neural/params.hpp"

namespace mpj::neural {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, one buffer per tensor.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState zeros_like(const ModelParams& p);
};

/// Bias-corrected Adam update for step t >= 1 on every trainable tensor:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, std::size_t t, const AdamConfig& cfg);

}  // namespace mpj::neural
