#include <cmath>

#include "layers.hpp"

namespace mpj::neural {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

LstmLayer::LstmLayer(std::size_t first_tensor, std::size_t steps, std::size_t features, std::size_t hidden)
    : kernel_(first_tensor),
      recurrent_(first_tensor + 1),
      bias_(first_tensor + 2),
      steps_(static_cast<Eigen::Index>(steps)),
      features_(static_cast<Eigen::Index>(features)),
      hidden_(static_cast<Eigen::Index>(hidden)) {}

Eigen::MatrixXd LstmLayer::forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase) {
  const Eigen::Index h = hidden_;
  batch_ = x.cols();
  inputs_.resize(features_, steps_ * batch_);
  for (Eigen::Index t = 0; t < steps_; ++t) {
    inputs_.middleCols(t * batch_, batch_) = x.middleRows(t * features_, features_);
  }

  const auto kernel = as_matrix(p.tensors[kernel_], 4 * h, features_);
  const auto recurrent = as_matrix(p.tensors[recurrent_], 4 * h, h);
  const auto bias = as_vector(p.tensors[bias_]);

  Eigen::MatrixXd projected = kernel * inputs_;
  gates_.assign(static_cast<std::size_t>(steps_), Eigen::MatrixXd());
  cells_.assign(static_cast<std::size_t>(steps_ + 1), Eigen::MatrixXd::Zero(h, batch_));
  hidden_states_.assign(static_cast<std::size_t>(steps_ + 1), Eigen::MatrixXd::Zero(h, batch_));

  for (Eigen::Index t = 0; t < steps_; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    Eigen::MatrixXd& z = gates_[ti];
    z = projected.middleCols(t * batch_, batch_);
    z.noalias() += recurrent * hidden_states_[ti];
    z.colwise() += bias;
    z.topRows(2 * h) = z.topRows(2 * h).unaryExpr(&sigmoid);
    z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
    z.bottomRows(h) = z.bottomRows(h).unaryExpr(&sigmoid);

    cells_[ti + 1] = z.middleRows(h, h).cwiseProduct(cells_[ti]) + z.topRows(h).cwiseProduct(z.middleRows(2 * h, h));
    hidden_states_[ti + 1] = z.bottomRows(h).cwiseProduct(cells_[ti + 1].array().tanh().matrix());
  }
  return hidden_states_.back();
}

Eigen::MatrixXd LstmLayer::backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) {
  const Eigen::Index h = hidden_;
  const auto kernel = as_matrix(p.tensors[kernel_], 4 * h, features_);
  const auto recurrent = as_matrix(p.tensors[recurrent_], 4 * h, h);

  Eigen::MatrixXd dz_all(4 * h, steps_ * batch_);
  Eigen::MatrixXd dh = dy;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, batch_);
  auto d_recurrent = as_matrix(g.tensors[recurrent_], 4 * h, h);
  auto d_bias = as_vector(g.tensors[bias_]);

  for (Eigen::Index t = steps_ - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const Eigen::MatrixXd& z = gates_[ti];
    const auto in_gate = z.topRows(h).array();
    const auto forget = z.middleRows(h, h).array();
    const auto cell_in = z.middleRows(2 * h, h).array();
    const auto out_gate = z.bottomRows(h).array();
    const Eigen::ArrayXXd tanh_c = cells_[ti + 1].array().tanh();

    dc.array() += dh.array() * out_gate * (1.0 - tanh_c.square());

    auto dz = dz_all.middleCols(t * batch_, batch_);
    dz.topRows(h).array() = dc.array() * cell_in * in_gate * (1.0 - in_gate);
    dz.middleRows(h, h).array() = dc.array() * cells_[ti].array() * forget * (1.0 - forget);
    dz.middleRows(2 * h, h).array() = dc.array() * in_gate * (1.0 - cell_in.square());
    dz.bottomRows(h).array() = dh.array() * tanh_c * out_gate * (1.0 - out_gate);

    d_recurrent.noalias() += dz * hidden_states_[ti].transpose();
    d_bias += dz.rowwise().sum();
    dh.noalias() = recurrent.transpose() * dz;
    dc.array() *= forget;
  }

  as_matrix(g.tensors[kernel_], 4 * h, features_).noalias() += dz_all * inputs_.transpose();
  const Eigen::MatrixXd d_inputs = kernel.transpose() * dz_all;
  Eigen::MatrixXd dx(steps_ * features_, batch_);
  for (Eigen::Index t = 0; t < steps_; ++t) {
    dx.middleRows(t * features_, features_) = d_inputs.middleCols(t * batch_, batch_);
  }
  return dx;
}

}  // namespace mpj::neural
