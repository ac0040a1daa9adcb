#pragma once

#include <cstddef>
#include <memory>

#include "mpj/field.hpp"

namespace mpj::forecast {

struct SplitSpec {
  std::size_t training = 0;
  std::size_t validation = 0;
  std::size_t test = 0;

  std::size_t total() const noexcept { return training + validation + test; }
};

/// Proportional split of K samples with the same ratios as `reference`;
/// validation and test absorb the rounding.
SplitSpec scale_split(const SplitSpec& reference, std::size_t samples);

struct Splits {
  SnapshotMatrix train;
  SnapshotMatrix validation;
  SnapshotMatrix test;
};

/// Consecutive, order-preserving partition. Empty segments are not
/// representable as SnapshotMatrix, so every count must be >= 1.
Splits split(const SnapshotMatrix& v, const SplitSpec& spec);

enum class SplitRange { Training, Validation, Test, Whole };

/// Rolling windows over one split with unit offset: window i reads
/// snapshots [i, i+q) and targets [i+q, i+q+horizon). Windows are views
/// into the shared source matrix.
class WindowedDataset {
 public:
  WindowedDataset(std::shared_ptr<const SnapshotMatrix> source, std::size_t q, std::size_t horizon,
                  SplitRange range = SplitRange::Whole);

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  std::size_t q() const noexcept { return q_; }
  std::size_t horizon() const noexcept { return horizon_; }
  SplitRange range() const noexcept { return range_; }
  const SnapshotMatrix& source() const noexcept { return *source_; }

  std::size_t input_begin(std::size_t i) const noexcept { return i; }
  std::size_t target_begin(std::size_t i) const noexcept { return i + q_; }

  /// J x q block of input snapshots.
  auto inputs(std::size_t i) const {
    return source_->data().middleCols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q_));
  }
  /// J x horizon block of target snapshots.
  auto targets(std::size_t i) const {
    return source_->data().middleCols(static_cast<Eigen::Index>(i + q_), static_cast<Eigen::Index>(horizon_));
  }

 private:
  std::shared_ptr<const SnapshotMatrix> source_;
  std::size_t q_;
  std::size_t horizon_;
  SplitRange range_;
  std::size_t count_;
};

WindowedDataset rolling_windows(std::shared_ptr<const SnapshotMatrix> v, std::size_t q, std::size_t horizon = 2,
                                SplitRange range = SplitRange::Whole);

/// Number of windows for a segment of `samples` snapshots.
constexpr std::size_t window_count(std::size_t samples, std::size_t q, std::size_t horizon) noexcept {
  return samples >= q + horizon ? samples - q - horizon + 1 : 0;
}

}  // namespace mpj::forecast
