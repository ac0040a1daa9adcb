#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mpj::metrics {

/// ||pred - truth|| / ||truth|| over all elements. Throws
/// UndefinedRelativeError when truth is identically zero.
double rrmse(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth);

/// (1/m) ||pred - truth||^2 for a batch of m samples.
double mse_local(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth,
                 std::size_t m);

/// Mean of per-prediction local losses.
double mse_global(std::span<const double> locals);

struct ErrorSeries {
  std::vector<double> values;
  double mean = 0.0;
};

ErrorSeries make_series(std::vector<double> values);

/// `t,rrmse` rows followed by a `mean,<value>` row.
void write_error_csv(const std::filesystem::path& path, const ErrorSeries& series);

}  // namespace mpj::metrics
