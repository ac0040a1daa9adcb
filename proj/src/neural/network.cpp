#include "mpj/neural/network.hpp"

#include <stdexcept>
#include <string>

#include "layers.hpp"
#include "mpj/errors.hpp"

namespace mpj::neural {

Network::Network(ArchSpec arch) : arch_(std::move(arch)), shapes_(shape_trace(arch_)) {
  std::size_t tensor = 0;
  for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
    const LayerSpec& l = arch_.layers[i];
    const Shape& in = shapes_[i];
    const Shape& out = shapes_[i + 1];
    switch (l.kind) {
      case LayerKind::Lstm:
        layers_.push_back(std::make_unique<LstmLayer>(tensor, in[0], in[1], l.units));
        tensor += 3;
        break;
      case LayerKind::Dense:
        layers_.push_back(std::make_unique<DenseLayer>(tensor, in[0], l.units, l.activation));
        tensor += 2;
        break;
      case LayerKind::Conv3D:
        layers_.push_back(std::make_unique<Conv3DLayer>(tensor, in, out, l.window, l.activation));
        tensor += 2;
        break;
      case LayerKind::MaxPool3D:
        layers_.push_back(std::make_unique<MaxPool3DLayer>(in, out, l.window));
        break;
      case LayerKind::BatchNorm:
        layers_.push_back(std::make_unique<BatchNormLayer>(tensor, element_count(in), in.back()));
        tensor += 4;
        break;
      case LayerKind::Flatten:
        layers_.push_back(std::make_unique<FlattenLayer>());
        break;
    }
  }
}

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

Eigen::MatrixXd Network::forward(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                                 Phase phase) {
  if (static_cast<std::size_t>(x.rows()) != arch_.input_size()) {
    throw std::invalid_argument("network input has " + std::to_string(x.rows()) + " rows, architecture expects " +
                                std::to_string(arch_.input_size()));
  }
  Eigen::MatrixXd a = x;
  for (auto& layer : layers_) a = layer->forward(params, a, phase);
  if (!a.allFinite()) throw NumericOverflowError("network produced non-finite activations");
  return a;
}

Eigen::MatrixXd Network::backward(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& grad_out,
                                  Gradients& grads) {
  if (static_cast<std::size_t>(grad_out.rows()) != arch_.output_size()) {
    throw std::invalid_argument("output gradient has the wrong row count");
  }
  Eigen::MatrixXd g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(params, g, grads);
  return g;
}

void Network::commit_running_stats(ModelParams& params) const {
  for (const auto& layer : layers_) layer->commit(params);
}

double forecast_loss(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& target,
                     std::size_t horizon) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("forecast_loss: shape mismatch");
  }
  const auto m = static_cast<double>(pred.cols());
  return (pred - target).squaredNorm() / (m * static_cast<double>(horizon));
}

Eigen::MatrixXd forecast_loss_grad(const Eigen::Ref<const Eigen::MatrixXd>& pred,
                                   const Eigen::Ref<const Eigen::MatrixXd>& target, std::size_t horizon) {
  const auto m = static_cast<double>(pred.cols());
  return (2.0 / (m * static_cast<double>(horizon))) * (pred - target);
}

Eigen::MatrixXd forward(const ArchSpec& arch, const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        Phase phase) {
  Network net(arch);
  return net.forward(params, x, phase);
}

LossAndGradients backward(const ArchSpec& arch, const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::MatrixXd>& target) {
  Network net(arch);
  const Eigen::MatrixXd pred = net.forward(params, x, Phase::Training);
  LossAndGradients out{forecast_loss(pred, target, arch.horizon), Gradients::zeros_like(params)};
  net.backward(params, forecast_loss_grad(pred, target, arch.horizon), out.grads);
  return out;
}

}  // namespace mpj::neural
