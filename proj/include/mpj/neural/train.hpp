#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mpj/field.hpp"
#include "mpj/forecast_data.hpp"
#include "mpj/neural/adam.hpp"
#include "mpj/neural/arch.hpp"
#include "mpj/neural/params.hpp"

namespace mpj::neural {

struct TrainConfig {
  std::size_t batch_size = 5;
  std::size_t epochs = 140;
  std::size_t patience = 10;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool early_stopping = true;

  /// 140 epochs for the RNN, 70 for the CNN; everything else default.
  static TrainConfig defaults_for(ModelKind kind);
};

/// Stops once the validation loss has failed to improve on its best value
/// for `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records one epoch; returns true when training should stop.
  bool observe(std::size_t epoch, double val_loss);
  bool improved() const noexcept { return improved_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_;
  std::size_t wait_ = 0;
  bool improved_ = false;
};

enum class StopReason { MaxEpochs, EarlyStop };

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t stopping_epoch = 0;
  std::size_t best_epoch = 0;
  StopReason reason = StopReason::MaxEpochs;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // from the best validation epoch
  TrainReport report;
};

/// Seeded mini-batch training with Adam. Datasets must already live in the
/// model's input domain (scaled for the CNN). Validation loss is evaluated
/// in inference mode at the end of every epoch.
/// Throws std::invalid_argument for empty splits and TrainingDivergedError
/// when a loss becomes non-finite.
TrainResult train(const ArchSpec& arch, const forecast::WindowedDataset& train_set,
                  const forecast::WindowedDataset& val_set, const TrainConfig& cfg);

/// Mean per-window forecast loss of `params` over `data` in inference mode.
double evaluate_loss(const ArchSpec& arch, const ModelParams& params, const forecast::WindowedDataset& data);

/// Stacks windows [first, first+count) into a (q*J) x count input matrix.
Eigen::MatrixXd gather_inputs(const forecast::WindowedDataset& data, std::span<const std::size_t> windows);
Eigen::MatrixXd gather_targets(const forecast::WindowedDataset& data, std::span<const std::size_t> windows);

/// Forecast of the `horizon` snapshots after a J x q window, in physical
/// units. Scaling is applied to the input and inverted on the output; the
/// baseline (J x horizon) is then added back. Throws ConfigError when
/// scaling presence disagrees with the architecture.
Eigen::MatrixXd predict_two_ahead(const ArchSpec& arch, const ModelParams& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& window,
                                  const std::optional<ScalingParams>& scaling,
                                  const std::optional<Eigen::MatrixXd>& baseline);

/// `epoch,train_loss,val_loss`
void write_train_report_csv(const std::filesystem::path& path, const TrainReport& report);

}  // namespace mpj::neural
