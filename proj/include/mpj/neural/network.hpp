#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mpj/neural/arch.hpp"
#include "mpj/neural/params.hpp"

namespace mpj::neural {

/// Training mode normalises with batch statistics; inference mode with the
/// stored moving statistics.
enum class Phase { Training, Inference };

class Layer;

/// Stateful evaluator for one architecture. Batches are matrices with one
/// sample per column, each sample flattened outermost-axis-first (for the
/// forecasters: snapshot-major, streamwise index fastest). A forward call
/// caches what the following backward call needs.
class Network {
 public:
  explicit Network(ArchSpec arch);
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  const ArchSpec& arch() const noexcept { return arch_; }
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }

  /// Throws std::invalid_argument on a row-count mismatch and
  /// NumericOverflowError if any output is non-finite.
  Eigen::MatrixXd forward(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x, Phase phase);

  /// Backpropagates dL/d(output) through the last forward call, adding
  /// parameter gradients into `grads`. Returns dL/d(input).
  Eigen::MatrixXd backward(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& grad_out,
                           Gradients& grads);

  /// Folds the batch statistics of the last training forward into the
  /// moving averages.
  void commit_running_stats(ModelParams& params) const;

 private:
  ArchSpec arch_;
  std::vector<Shape> shapes_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Mean over the horizon snapshots of (1/m)||pred - target||^2.
double forecast_loss(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& target,
                     std::size_t horizon);
/// d forecast_loss / d pred.
Eigen::MatrixXd forecast_loss_grad(const Eigen::Ref<const Eigen::MatrixXd>& pred,
                                   const Eigen::Ref<const Eigen::MatrixXd>& target, std::size_t horizon);

/// Stateless inference on a batch of windows (q*J rows).
Eigen::MatrixXd forward(const ArchSpec& arch, const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        Phase phase = Phase::Inference);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// Training-mode loss and gradients of every tensor for one batch.
LossAndGradients backward(const ArchSpec& arch, const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::MatrixXd>& target);

}  // namespace mpj::neural
