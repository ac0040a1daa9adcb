#include <cmath>

#include "layers.hpp"

namespace mpj::neural {

void apply_activation(Activation a, Eigen::Ref<Eigen::MatrixXd> z) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
  }
}

void activation_backward(Activation a, const Eigen::Ref<const Eigen::MatrixXd>& y, Eigen::Ref<Eigen::MatrixXd> grad) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      grad = (y.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::Sigmoid:
      grad.array() *= y.array() * (1.0 - y.array());
      break;
    case Activation::Tanh:
      grad.array() *= 1.0 - y.array().square();
      break;
  }
}

DenseLayer::DenseLayer(std::size_t first_tensor, std::size_t in, std::size_t out, Activation act)
    : kernel_(first_tensor),
      bias_(first_tensor + 1),
      in_(static_cast<Eigen::Index>(in)),
      out_(static_cast<Eigen::Index>(out)),
      act_(act) {}

Eigen::MatrixXd DenseLayer::forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase) {
  x_ = x;
  y_.noalias() = as_matrix(p.tensors[kernel_], out_, in_) * x;
  y_.colwise() += as_vector(p.tensors[bias_]);
  apply_activation(act_, y_);
  return y_;
}

Eigen::MatrixXd DenseLayer::backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) {
  Eigen::MatrixXd dz = dy;
  activation_backward(act_, y_, dz);
  as_matrix(g.tensors[kernel_], out_, in_).noalias() += dz * x_.transpose();
  as_vector(g.tensors[bias_]) += dz.rowwise().sum();
  return as_matrix(p.tensors[kernel_], out_, in_).transpose() * dz;
}

}  // namespace mpj::neural
