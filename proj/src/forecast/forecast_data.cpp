#include "mpj/forecast_data.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpj::forecast {

SplitSpec scale_split(const SplitSpec& reference, std::size_t samples) {
  const std::size_t ref_total = reference.total();
  if (ref_total == 0) throw std::invalid_argument("scale_split: reference split is empty");
  if (samples == ref_total) return reference;
  const double ratio = static_cast<double>(samples) / static_cast<double>(ref_total);
  SplitSpec out;
  out.training = static_cast<std::size_t>(std::llround(static_cast<double>(reference.training) * ratio));
  out.validation = static_cast<std::size_t>(std::llround(static_cast<double>(reference.validation) * ratio));
  if (out.training + out.validation > samples) throw std::invalid_argument("scale_split: too few samples");
  out.test = samples - out.training - out.validation;
  return out;
}

Splits split(const SnapshotMatrix& v, const SplitSpec& spec) {
  if (spec.total() != v.samples()) {
    throw std::invalid_argument("split: counts sum to " + std::to_string(spec.total()) + " but K = " +
                                std::to_string(v.samples()));
  }
  if (spec.training == 0 || spec.validation == 0 || spec.test == 0) {
    throw std::invalid_argument("split: every segment needs at least one sample");
  }
  return {v.columns(0, spec.training), v.columns(spec.training, spec.validation),
          v.columns(spec.training + spec.validation, spec.test)};
}

WindowedDataset::WindowedDataset(std::shared_ptr<const SnapshotMatrix> source, std::size_t q, std::size_t horizon,
                                 SplitRange range)
    : source_(std::move(source)), q_(q), horizon_(horizon), range_(range), count_(0) {
  if (!source_) throw std::invalid_argument("rolling_windows: null source");
  if (q_ < 1) throw std::invalid_argument("rolling_windows: q must be >= 1");
  if (horizon_ < 1) throw std::invalid_argument("rolling_windows: horizon must be >= 1");
  count_ = window_count(source_->samples(), q_, horizon_);
}

WindowedDataset rolling_windows(std::shared_ptr<const SnapshotMatrix> v, std::size_t q, std::size_t horizon,
                                SplitRange range) {
  return WindowedDataset(std::move(v), q, horizon, range);
}

}  // namespace mpj::forecast
