#include "mpj/neural/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"
#include "mpj/metrics.hpp"
#include "mpj/neural/network.hpp"

namespace mpj::neural {

TrainConfig TrainConfig::defaults_for(ModelKind kind) {
  TrainConfig cfg;
  cfg.epochs = kind == ModelKind::Rnn ? 140 : 70;
  return cfg;
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience_ < 1) throw std::invalid_argument("early stopping patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double val_loss) {
  improved_ = val_loss < best_loss_;
  if (improved_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    wait_ = 0;
    return false;
  }
  ++wait_;
  return wait_ >= patience_;
}

Eigen::MatrixXd gather_inputs(const forecast::WindowedDataset& data, std::span<const std::size_t> windows) {
  const Eigen::Index rows = static_cast<Eigen::Index>(data.q() * data.source().points());
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t c = 0; c < windows.size(); ++c) {
    const auto block = data.inputs(windows[c]);
    x.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(block.data(), rows);
  }
  return x;
}

Eigen::MatrixXd gather_targets(const forecast::WindowedDataset& data, std::span<const std::size_t> windows) {
  const Eigen::Index rows = static_cast<Eigen::Index>(data.horizon() * data.source().points());
  Eigen::MatrixXd y(rows, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t c = 0; c < windows.size(); ++c) {
    const auto block = data.targets(windows[c]);
    y.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(block.data(), rows);
  }
  return y;
}

namespace {

void check_dataset(const ArchSpec& arch, const forecast::WindowedDataset& d, const char* which) {
  if (d.empty()) throw std::invalid_argument(std::string(which) + " split has no windows");
  if (d.q() != arch.q || d.horizon() != arch.horizon || !(d.source().grid() == arch.grid)) {
    throw std::invalid_argument(std::string(which) + " windows do not match the architecture input");
  }
}

constexpr std::size_t kEvalBatch = 32;

}  // namespace

double evaluate_loss(const ArchSpec& arch, const ModelParams& params, const forecast::WindowedDataset& data) {
  Network net(arch);
  std::vector<double> locals;
  locals.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < data.size(); first += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, data.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    const Eigen::MatrixXd pred = net.forward(params, gather_inputs(data, idx), Phase::Inference);
    const Eigen::MatrixXd target = gather_targets(data, idx);
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      locals.push_back(forecast_loss(pred.col(c), target.col(c), arch.horizon));
    }
  }
  return metrics::mse_global(locals);
}

TrainResult train(const ArchSpec& arch, const forecast::WindowedDataset& train_set,
                  const forecast::WindowedDataset& val_set, const TrainConfig& cfg) {
  check_dataset(arch, train_set, "training");
  check_dataset(arch, val_set, "validation");
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw std::invalid_argument("batch size and epochs must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  Network net(arch);
  ModelParams params = init_params(arch, cfg.seed);
  Gradients grads = Gradients::zeros_like(params);
  AdamState adam = AdamState::zeros_like(params);
  std::mt19937_64 shuffler(cfg.seed ^ 0x5DEECE66Dull);
  EarlyStopping stopper(cfg.patience);

  TrainResult result{params, {}};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    std::vector<double> batch_losses;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - first);
      const std::span<const std::size_t> batch(order.data() + first, count);
      const Eigen::MatrixXd x = gather_inputs(train_set, batch);
      const Eigen::MatrixXd target = gather_targets(train_set, batch);

      Eigen::MatrixXd pred;
      try {
        pred = net.forward(params, x, Phase::Training);
      } catch (const NumericOverflowError& e) {
        throw TrainingDivergedError(epoch, "training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
      }
      const double loss = forecast_loss(pred, target, arch.horizon);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError(epoch, "training loss became non-finite in epoch " + std::to_string(epoch));
      }
      batch_losses.push_back(loss);

      grads.set_zero();
      net.backward(params, forecast_loss_grad(pred, target, arch.horizon), grads);
      try {
        adam_step(params, grads, adam, ++step, cfg.adam);
      } catch (const NumericOverflowError& e) {
        throw TrainingDivergedError(epoch, "training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
      }
      net.commit_running_stats(params);
    }

    double val_loss = 0.0;
    try {
      val_loss = evaluate_loss(arch, params, val_set);
    } catch (const NumericOverflowError& e) {
      throw TrainingDivergedError(epoch, "validation diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(val_loss)) {
      throw TrainingDivergedError(epoch, "validation loss became non-finite in epoch " + std::to_string(epoch));
    }
    result.report.epochs.push_back({epoch, metrics::mse_global(batch_losses), val_loss});
    result.report.stopping_epoch = epoch;

    const bool stop = stopper.observe(epoch, val_loss);
    if (stopper.improved()) result.params = params;
    if (cfg.early_stopping && stop) {
      result.report.reason = StopReason::EarlyStop;
      break;
    }
  }

  result.report.best_epoch = stopper.best_epoch();
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Eigen::MatrixXd predict_two_ahead(const ArchSpec& arch, const ModelParams& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& window,
                                  const std::optional<ScalingParams>& scaling,
                                  const std::optional<Eigen::MatrixXd>& baseline) {
  const auto j = static_cast<Eigen::Index>(arch.grid.points());
  if (window.rows() != j || window.cols() != static_cast<Eigen::Index>(arch.q)) {
    throw std::invalid_argument("predict: window must be J x q");
  }
  if (arch.scaled_io && !scaling) throw ConfigError("predict: model was trained on scaled data but no scaling given");
  if (!arch.scaled_io && scaling) throw ConfigError("predict: model consumes unscaled data but scaling was given");

  Eigen::MatrixXd x = window;
  if (scaling) apply_minmax_inplace(x, *scaling);
  Eigen::MatrixXd out = forward(arch, params, Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
  if (scaling) invert_minmax_inplace(out, *scaling);

  Eigen::MatrixXd snapshots = Eigen::Map<const Eigen::MatrixXd>(out.data(), j, static_cast<Eigen::Index>(arch.horizon));
  if (baseline) {
    if (baseline->rows() != j || baseline->cols() != static_cast<Eigen::Index>(arch.horizon)) {
      throw std::invalid_argument("predict: baseline must be J x horizon");
    }
    snapshots += *baseline;
  }
  return snapshots;
}

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n";
  for (const auto& e : report.epochs) {
    os << e.epoch << ',' << io::format_double(e.train_loss) << ',' << io::format_double(e.val_loss) << '\n';
  }
  io::write_text_atomic(path, os.str());
}

}  // namespace mpj::neural
