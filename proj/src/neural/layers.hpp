#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mpj/neural/arch.hpp"
#include "mpj/neural/network.hpp"
#include "mpj/neural/params.hpp"

namespace mpj::neural {

inline Eigen::Map<const Eigen::MatrixXd> as_matrix(const Tensor& t, Eigen::Index rows, Eigen::Index cols) {
  return {t.values.data(), rows, cols};
}
inline Eigen::Map<Eigen::MatrixXd> as_matrix(std::vector<double>& g, Eigen::Index rows, Eigen::Index cols) {
  return {g.data(), rows, cols};
}
inline Eigen::Map<const Eigen::VectorXd> as_vector(const Tensor& t) {
  return {t.values.data(), static_cast<Eigen::Index>(t.values.size())};
}
inline Eigen::Map<Eigen::VectorXd> as_vector(std::vector<double>& g) {
  return {g.data(), static_cast<Eigen::Index>(g.size())};
}

void apply_activation(Activation a, Eigen::Ref<Eigen::MatrixXd> z);
/// dL/dz from dL/dy and the activated output y.
void activation_backward(Activation a, const Eigen::Ref<const Eigen::MatrixXd>& y, Eigen::Ref<Eigen::MatrixXd> grad);

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Eigen::MatrixXd forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) = 0;
  virtual Eigen::MatrixXd backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) = 0;
  virtual void commit(ModelParams&) const {}
};

/// y = act(W x + b); kernel tensor (in, out) row-major is W as an
/// out x in column-major matrix.
class DenseLayer final : public Layer {
 public:
  DenseLayer(std::size_t first_tensor, std::size_t in, std::size_t out, Activation act);
  Eigen::MatrixXd forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) override;
  Eigen::MatrixXd backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) override;

 private:
  std::size_t kernel_, bias_;
  Eigen::Index in_, out_;
  Activation act_;
  Eigen::MatrixXd x_, y_;
};

class LstmLayer final : public Layer {
 public:
  LstmLayer(std::size_t first_tensor, std::size_t steps, std::size_t features, std::size_t hidden);
  Eigen::MatrixXd forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) override;
  Eigen::MatrixXd backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) override;

 private:
  std::size_t kernel_, recurrent_, bias_;
  Eigen::Index steps_, features_, hidden_;
  Eigen::Index batch_ = 0;
  Eigen::MatrixXd inputs_;  // features x (steps * batch), time-major blocks
  std::vector<Eigen::MatrixXd> gates_;  // per step: 4h x batch, activated
  std::vector<Eigen::MatrixXd> cells_;  // per step 0..steps: h x batch, c_{-1} = 0
  std::vector<Eigen::MatrixXd> hidden_states_;
};

/// Valid 3-D convolution, stride 1, channels-last samples.
class Conv3DLayer final : public Layer {
 public:
  Conv3DLayer(std::size_t first_tensor, const Shape& in, const Shape& out, std::array<std::size_t, 3> kernel,
              Activation act);
  Eigen::MatrixXd forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) override;
  Eigen::MatrixXd backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) override;

 private:
  std::size_t kernel_, bias_;
  Shape in_, out_;
  std::array<std::size_t, 3> window_;
  Activation act_;
  Eigen::MatrixXd x_, y_;
};

/// Non-overlapping max pooling, floor division of each extent.
class MaxPool3DLayer final : public Layer {
 public:
  MaxPool3DLayer(const Shape& in, const Shape& out, std::array<std::size_t, 3> window);
  Eigen::MatrixXd forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) override;
  Eigen::MatrixXd backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) override;

 private:
  Shape in_, out_;
  std::array<std::size_t, 3> window_;
  std::vector<Eigen::Index> argmax_;  // per output element and sample
  Eigen::Index batch_ = 0;
};

/// Per-channel normalisation over batch and all positions of the last axis.
class BatchNormLayer final : public Layer {
 public:
  static constexpr double kMomentum = 0.99;
  static constexpr double kEpsilon = 1e-3;

  BatchNormLayer(std::size_t first_tensor, std::size_t size, std::size_t channels);
  Eigen::MatrixXd forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) override;
  Eigen::MatrixXd backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) override;
  void commit(ModelParams& p) const override;

 private:
  std::size_t gamma_, beta_, mean_, var_;
  std::size_t size_, channels_;
  Phase phase_ = Phase::Inference;
  Eigen::MatrixXd xhat_;
  Eigen::VectorXd inv_std_, batch_mean_, batch_var_;
};

class FlattenLayer final : public Layer {
 public:
  Eigen::MatrixXd forward(const ModelParams&, const Eigen::MatrixXd& x, Phase) override { return x; }
  Eigen::MatrixXd backward(const ModelParams&, const Eigen::MatrixXd& dy, Gradients&) override { return dy; }
};

}  // namespace mpj::neural
