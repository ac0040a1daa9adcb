#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace mpj {

/// Cell counts of a structured 2-D grid. `nx` runs along the streamwise
/// axis and is the fastest-varying index of a flattened snapshot.
struct Grid2D {
  std::size_t nx = 1;
  std::size_t ny = 1;

  std::size_t points() const noexcept { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
  bool operator==(const Grid2D&) const = default;
};

/// J x K matrix of time-equidistant snapshots. Column k is snapshot k
/// flattened row-major with the streamwise index fastest.
class SnapshotMatrix {
 public:
  /// Throws std::invalid_argument on shape errors and ValidationError on
  /// non-finite data.
  SnapshotMatrix(Grid2D grid, double dt, Eigen::MatrixXd data);

  const Grid2D& grid() const noexcept { return grid_; }
  double dt() const noexcept { return dt_; }
  std::size_t points() const noexcept { return grid_.points(); }
  std::size_t samples() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  const Eigen::MatrixXd& data() const noexcept { return data_; }

  auto column(std::size_t k) const { return data_.col(static_cast<Eigen::Index>(k)); }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_(static_cast<Eigen::Index>(grid_.index(i, j)), static_cast<Eigen::Index>(k));
  }

  /// Columns [first, first + count) as a new matrix with the same grid and dt.
  SnapshotMatrix columns(std::size_t first, std::size_t count) const;

  bool same_layout(const SnapshotMatrix& other) const noexcept {
    return grid_ == other.grid_ && samples() == other.samples() && dt_ == other.dt_;
  }

 private:
  Grid2D grid_;
  double dt_;
  Eigen::MatrixXd data_;
};

struct ScalingParams {
  double min = 0.0;
  double max = 1.0;
};

SnapshotMatrix downsample_columns(const SnapshotMatrix& v, std::size_t step);

SnapshotMatrix subtract_baseline(const SnapshotMatrix& multi, const SnapshotMatrix& single);
SnapshotMatrix add_baseline(const SnapshotMatrix& pred, const SnapshotMatrix& single);

/// Global min/max of `v`. Callers pass the training portion only.
ScalingParams fit_minmax(const SnapshotMatrix& v);
SnapshotMatrix apply_minmax(const SnapshotMatrix& v, const ScalingParams& p);
SnapshotMatrix invert_minmax(const SnapshotMatrix& v, const ScalingParams& p);

// Elementwise forms used by the forecasters on raw network tensors.
void apply_minmax_inplace(Eigen::Ref<Eigen::MatrixXd> values, const ScalingParams& p);
void invert_minmax_inplace(Eigen::Ref<Eigen::MatrixXd> values, const ScalingParams& p);

// Binary snapshot file: "MPJF", u32 version, u32 nx, u32 ny, u32 K, f64 dt,
// then J*K little-endian float64 values snapshot by snapshot.
inline constexpr char kSnapshotMagic[4] = {'M', 'P', 'J', 'F'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

SnapshotMatrix read_snapshots(const std::filesystem::path& path);
void write_snapshots(const std::filesystem::path& path, const SnapshotMatrix& v);

struct SnapshotHeader {
  Grid2D grid;
  std::size_t samples = 0;
  double dt = 0.0;
};

/// Reads and validates only the header; used for config checks before compute.
SnapshotHeader read_snapshot_header(const std::filesystem::path& path);

/// CSV with header `t,i,j,value`, one row per grid point and snapshot.
void write_snapshots_csv(const std::filesystem::path& path, const SnapshotMatrix& v);

}  // namespace mpj
