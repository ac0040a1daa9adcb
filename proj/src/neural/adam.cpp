#include "mpj/neural/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "mpj/errors.hpp"

namespace mpj::neural {

AdamState AdamState::zeros_like(const ModelParams& p) {
  AdamState s;
  for (const auto& t : p.tensors) {
    s.m.emplace_back(t.values.size(), 0.0);
    s.v.emplace_back(t.values.size(), 0.0);
  }
  return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, std::size_t t, const AdamConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
  if (grads.tensors.size() != params.tensors.size() || state.m.size() != params.tensors.size() ||
      state.v.size() != params.tensors.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state layouts differ");
  }
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    Tensor& tensor = params.tensors[i];
    if (!tensor.trainable) continue;
    const std::vector<double>& g = grads.tensors[i];
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    if (g.size() != tensor.values.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g[k])) throw NumericOverflowError("adam_step: non-finite gradient in " + tensor.name);
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      tensor.values[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace mpj::neural
