#include <cmath>

#include "layers.hpp"

namespace mpj::neural {

// Samples are channels-last, so channel c occupies rows c, c + C, c + 2C, ...
// of each column.

BatchNormLayer::BatchNormLayer(std::size_t first_tensor, std::size_t size, std::size_t channels)
    : gamma_(first_tensor),
      beta_(first_tensor + 1),
      mean_(first_tensor + 2),
      var_(first_tensor + 3),
      size_(size),
      channels_(channels) {}

Eigen::MatrixXd BatchNormLayer::forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase phase) {
  phase_ = phase;
  const auto c_count = static_cast<Eigen::Index>(channels_);
  const Eigen::Index positions = x.rows() / c_count;
  const Eigen::Index batch = x.cols();
  const double count = static_cast<double>(positions * batch);

  Eigen::VectorXd mean(c_count), var(c_count);
  if (phase == Phase::Training) {
    mean.setZero();
    for (Eigen::Index b = 0; b < batch; ++b) {
      Eigen::Map<const Eigen::MatrixXd> xs(x.col(b).data(), c_count, positions);
      mean += xs.rowwise().sum();
    }
    mean /= count;
    var.setZero();
    for (Eigen::Index b = 0; b < batch; ++b) {
      Eigen::Map<const Eigen::MatrixXd> xs(x.col(b).data(), c_count, positions);
      var += (xs.colwise() - mean).rowwise().squaredNorm();
    }
    var /= count;
    batch_mean_ = mean;
    batch_var_ = var;
  } else {
    batch_mean_.resize(0);
    batch_var_.resize(0);
    mean = as_vector(p.tensors[mean_]);
    var = as_vector(p.tensors[var_]);
  }

  inv_std_ = (var.array() + kEpsilon).rsqrt().matrix();
  const auto gamma = as_vector(p.tensors[gamma_]);
  const auto beta = as_vector(p.tensors[beta_]);

  xhat_.resize(x.rows(), batch);
  Eigen::MatrixXd y(x.rows(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::Map<const Eigen::MatrixXd> xs(x.col(b).data(), c_count, positions);
    Eigen::Map<Eigen::MatrixXd> xh(xhat_.col(b).data(), c_count, positions);
    Eigen::Map<Eigen::MatrixXd> ys(y.col(b).data(), c_count, positions);
    xh = (xs.colwise() - mean).array().colwise() * inv_std_.array();
    ys = (xh.array().colwise() * gamma.array()).colwise() + beta.array();
  }
  return y;
}

Eigen::MatrixXd BatchNormLayer::backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) {
  const auto c_count = static_cast<Eigen::Index>(channels_);
  const Eigen::Index positions = dy.rows() / c_count;
  const Eigen::Index batch = dy.cols();
  const double count = static_cast<double>(positions * batch);
  const auto gamma = as_vector(p.tensors[gamma_]);

  Eigen::VectorXd sum_dy = Eigen::VectorXd::Zero(c_count);
  Eigen::VectorXd sum_dy_xhat = Eigen::VectorXd::Zero(c_count);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::Map<const Eigen::MatrixXd> gs(dy.col(b).data(), c_count, positions);
    Eigen::Map<const Eigen::MatrixXd> xh(xhat_.col(b).data(), c_count, positions);
    sum_dy += gs.rowwise().sum();
    sum_dy_xhat += gs.cwiseProduct(xh).rowwise().sum();
  }
  as_vector(g.tensors[gamma_]) += sum_dy_xhat;
  as_vector(g.tensors[beta_]) += sum_dy;

  Eigen::MatrixXd dx(dy.rows(), batch);
  const Eigen::ArrayXd scale = gamma.array() * inv_std_.array();
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::Map<const Eigen::MatrixXd> gs(dy.col(b).data(), c_count, positions);
    Eigen::Map<const Eigen::MatrixXd> xh(xhat_.col(b).data(), c_count, positions);
    Eigen::Map<Eigen::MatrixXd> dxs(dx.col(b).data(), c_count, positions);
    if (phase_ == Phase::Training) {
      const Eigen::ArrayXXd centred =
          (gs.array().colwise() - sum_dy.array() / count) - xh.array().colwise() * (sum_dy_xhat.array() / count);
      dxs = (centred.colwise() * scale).matrix();
    } else {
      dxs = (gs.array().colwise() * scale).matrix();
    }
  }
  return dx;
}

void BatchNormLayer::commit(ModelParams& p) const {
  if (batch_mean_.size() == 0) return;
  as_matrix(p.tensors[mean_].values, batch_mean_.size(), 1) =
      kMomentum * as_vector(p.tensors[mean_]) + (1.0 - kMomentum) * batch_mean_;
  as_matrix(p.tensors[var_].values, batch_var_.size(), 1) =
      kMomentum * as_vector(p.tensors[var_]) + (1.0 - kMomentum) * batch_var_;
}

}  // namespace mpj::neural
