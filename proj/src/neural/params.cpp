#include "mpj/neural/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mpj::neural {

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) {
    if (t.trainable) n += t.values.size();
  }
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Gradients Gradients::zeros_like(const ModelParams& p) {
  Gradients g;
  g.tensors.reserve(p.tensors.size());
  for (const auto& t : p.tensors) g.tensors.emplace_back(t.values.size(), 0.0);
  return g;
}

void Gradients::set_zero() {
  for (auto& t : tensors) std::fill(t.begin(), t.end(), 0.0);
}

namespace {

enum class Fill { Glorot, Zero, One };

struct PendingTensor {
  Tensor tensor;
  Fill fill;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

std::vector<PendingTensor> layout(const ArchSpec& arch) {
  const auto trace = shape_trace(arch);
  std::vector<PendingTensor> out;
  auto add = [&out](std::string name, std::vector<std::size_t> shape, bool trainable, Fill fill, std::size_t fan_in = 0,
                    std::size_t fan_out = 0) {
    Tensor t{std::move(name), std::move(shape), trainable, {}};
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    t.values.assign(n, 0.0);
    out.push_back({std::move(t), fill, fan_in, fan_out});
  };

  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    const Shape& in = trace[i];
    const std::string prefix = std::string(to_string(l.kind)) + "_" + std::to_string(i) + ".";
    switch (l.kind) {
      case LayerKind::Lstm: {
        const std::size_t f = in[1], h = l.units;
        add(prefix + "kernel", {f, 4 * h}, true, Fill::Glorot, f, 4 * h);
        add(prefix + "recurrent_kernel", {h, 4 * h}, true, Fill::Glorot, h, 4 * h);
        add(prefix + "bias", {4 * h}, true, Fill::Zero);
        break;
      }
      case LayerKind::Dense:
        add(prefix + "kernel", {in[0], l.units}, true, Fill::Glorot, in[0], l.units);
        add(prefix + "bias", {l.units}, true, Fill::Zero);
        break;
      case LayerKind::Conv3D: {
        const std::size_t taps = l.window[0] * l.window[1] * l.window[2];
        add(prefix + "kernel", {l.window[0], l.window[1], l.window[2], in[3], l.units}, true, Fill::Glorot,
            taps * in[3], taps * l.units);
        add(prefix + "bias", {l.units}, true, Fill::Zero);
        break;
      }
      case LayerKind::BatchNorm: {
        const std::size_t c = in.back();
        add(prefix + "gamma", {c}, true, Fill::One);
        add(prefix + "beta", {c}, true, Fill::Zero);
        add(prefix + "moving_mean", {c}, false, Fill::Zero);
        add(prefix + "moving_variance", {c}, false, Fill::One);
        break;
      }
      case LayerKind::MaxPool3D:
      case LayerKind::Flatten:
        break;
    }
  }
  return out;
}

}  // namespace

ModelParams init_params(const ArchSpec& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams p;
  for (auto& pending : layout(arch)) {
    Tensor& t = pending.tensor;
    switch (pending.fill) {
      case Fill::Glorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(pending.fan_in + pending.fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : t.values) v = dist(rng);
        break;
      }
      case Fill::One:
        std::fill(t.values.begin(), t.values.end(), 1.0);
        break;
      case Fill::Zero:
        break;
    }
    if (t.name.starts_with("LSTM") && t.name.ends_with(".bias")) {
      const std::size_t h = t.values.size() / 4;
      std::fill(t.values.begin() + static_cast<std::ptrdiff_t>(h), t.values.begin() + static_cast<std::ptrdiff_t>(2 * h),
                1.0);
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

ModelParams zero_params(const ArchSpec& arch) {
  ModelParams p;
  for (auto& pending : layout(arch)) {
    if (pending.tensor.name.ends_with("moving_variance")) {
      std::fill(pending.tensor.values.begin(), pending.tensor.values.end(), 1.0);
    }
    p.tensors.push_back(std::move(pending.tensor));
  }
  return p;
}

}  // namespace mpj::neural
