#include "mpj/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"

namespace mpj::metrics {

double rrmse(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw std::invalid_argument("rrmse: prediction and truth shapes differ");
  }
  // Extended-precision sums keep rrmse(c p, c t) within an ulp of rrmse(p, t).
  long double num = 0.0L, den = 0.0L;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    for (Eigen::Index r = 0; r < truth.rows(); ++r) {
      const long double t = truth(r, c);
      const long double d = static_cast<long double>(pred(r, c)) - t;
      num += d * d;
      den += t * t;
    }
  }
  if (!(den > 0.0L)) throw UndefinedRelativeError("rrmse: reference field has zero norm");
  const double out = static_cast<double>(std::sqrt(num / den));
  if (!std::isfinite(out)) throw NumericOverflowError("rrmse: non-finite result");
  return out;
}

double mse_local(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth,
                 std::size_t m) {
  if (m == 0) throw std::invalid_argument("mse_local: batch size must be >= 1");
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw std::invalid_argument("mse_local: prediction and truth shapes differ");
  }
  return (pred - truth).squaredNorm() / static_cast<double>(m);
}

double mse_global(std::span<const double> locals) {
  if (locals.empty()) throw std::invalid_argument("mse_global: no local losses");
  long double sum = 0.0L;
  for (double v : locals) sum += v;
  return static_cast<double>(sum / static_cast<long double>(locals.size()));
}

ErrorSeries make_series(std::vector<double> values) {
  ErrorSeries s;
  s.mean = values.empty() ? 0.0 : mse_global(values);
  s.values = std::move(values);
  return s;
}

void write_error_csv(const std::filesystem::path& path, const ErrorSeries& series) {
  std::ostringstream os;
  os << "t,rrmse\n";
  for (std::size_t t = 0; t < series.values.size(); ++t) {
    os << t << ',' << io::format_double(series.values[t]) << '\n';
  }
  os << "mean," << io::format_double(series.mean) << '\n';
  io::write_text_atomic(path, os.str());
}

}  // namespace mpj::metrics
