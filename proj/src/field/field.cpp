#include "mpj/field.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"

namespace mpj {

namespace {

void require_same_layout(const SnapshotMatrix& a, const SnapshotMatrix& b, const char* op) {
  if (!a.same_layout(b)) {
    throw std::invalid_argument(std::string(op) + ": grid, sample count or dt differ");
  }
}

void require_valid_scaling(const ScalingParams& p) {
  if (!(p.max > p.min)) {
    throw std::invalid_argument("scaling parameters need max > min");
  }
}

}  // namespace

SnapshotMatrix::SnapshotMatrix(Grid2D grid, double dt, Eigen::MatrixXd data)
    : grid_(grid), dt_(dt), data_(std::move(data)) {
  if (grid_.nx < 1 || grid_.ny < 1) throw std::invalid_argument("grid needs nx >= 1 and ny >= 1");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw std::invalid_argument("dt must be positive and finite");
  if (data_.cols() < 1) throw std::invalid_argument("snapshot matrix needs at least one sample");
  if (static_cast<std::size_t>(data_.rows()) != grid_.points()) {
    throw std::invalid_argument("snapshot rows (" + std::to_string(data_.rows()) +
                                ") do not match grid points (" + std::to_string(grid_.points()) + ")");
  }
  if (!data_.allFinite()) throw ValidationError("snapshot matrix contains non-finite values");
}

SnapshotMatrix SnapshotMatrix::columns(std::size_t first, std::size_t count) const {
  if (first + count > samples()) throw std::invalid_argument("column range out of bounds");
  return {grid_, dt_, data_.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count))};
}

SnapshotMatrix downsample_columns(const SnapshotMatrix& v, std::size_t step) {
  if (step == 0) throw std::invalid_argument("downsample step must be >= 1");
  const Grid2D& g = v.grid();
  if (g.ny < step) throw std::invalid_argument("downsample step exceeds normal-axis cell count");
  if (step == 1) return v;

  const Grid2D out_grid{g.nx, (g.ny + step - 1) / step};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(out_grid.points()), v.data().cols());
  for (std::size_t jo = 0; jo < out_grid.ny; ++jo) {
    const auto src_row = static_cast<Eigen::Index>(g.index(0, jo * step));
    const auto dst_row = static_cast<Eigen::Index>(out_grid.index(0, jo));
    out.middleRows(dst_row, static_cast<Eigen::Index>(g.nx)) =
        v.data().middleRows(src_row, static_cast<Eigen::Index>(g.nx));
  }
  return {out_grid, v.dt(), std::move(out)};
}

SnapshotMatrix subtract_baseline(const SnapshotMatrix& multi, const SnapshotMatrix& single) {
  require_same_layout(multi, single, "subtract_baseline");
  return {multi.grid(), multi.dt(), multi.data() - single.data()};
}

SnapshotMatrix add_baseline(const SnapshotMatrix& pred, const SnapshotMatrix& single) {
  require_same_layout(pred, single, "add_baseline");
  return {pred.grid(), pred.dt(), pred.data() + single.data()};
}

ScalingParams fit_minmax(const SnapshotMatrix& v) {
  ScalingParams p{v.data().minCoeff(), v.data().maxCoeff()};
  if (!(p.max > p.min)) throw DegenerateScalingError("cannot fit min-max scaling to constant data");
  return p;
}

void apply_minmax_inplace(Eigen::Ref<Eigen::MatrixXd> values, const ScalingParams& p) {
  require_valid_scaling(p);
  const double range = p.max - p.min;
  values.array() = (values.array() - p.min) / range;
}

void invert_minmax_inplace(Eigen::Ref<Eigen::MatrixXd> values, const ScalingParams& p) {
  require_valid_scaling(p);
  const double range = p.max - p.min;
  values.array() = values.array() * range + p.min;
}

SnapshotMatrix apply_minmax(const SnapshotMatrix& v, const ScalingParams& p) {
  Eigen::MatrixXd out = v.data();
  apply_minmax_inplace(out, p);
  return {v.grid(), v.dt(), std::move(out)};
}

SnapshotMatrix invert_minmax(const SnapshotMatrix& v, const ScalingParams& p) {
  Eigen::MatrixXd out = v.data();
  invert_minmax_inplace(out, p);
  return {v.grid(), v.dt(), std::move(out)};
}

namespace {

SnapshotHeader parse_header(io::ByteReader& in, const std::filesystem::path& path) {
  if (!in.magic_matches(std::string_view(kSnapshotMagic, 4))) {
    throw FormatError(path.string() + ": not a snapshot file (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kSnapshotVersion) {
    throw FormatError(path.string() + ": unsupported snapshot version " + std::to_string(version));
  }
  SnapshotHeader h;
  h.grid.nx = in.u32();
  h.grid.ny = in.u32();
  h.samples = in.u32();
  h.dt = in.f64();
  if (h.grid.nx == 0 || h.grid.ny == 0 || h.samples == 0) {
    throw CorruptFileError(path.string() + ": header declares an empty grid or zero samples");
  }
  if (!(h.dt > 0.0) || !std::isfinite(h.dt)) {
    throw ValidationError(path.string() + ": header dt must be positive and finite");
  }
  return h;
}

constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 8;

}  // namespace

SnapshotHeader read_snapshot_header(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  if (bytes.size() > kHeaderBytes) bytes.resize(kHeaderBytes);
  io::ByteReader in(std::move(bytes), path.string());
  return parse_header(in, path);
}

SnapshotMatrix read_snapshots(const std::filesystem::path& path) {
  io::ByteReader in(io::read_file(path), path.string());
  const SnapshotHeader h = parse_header(in, path);
  const std::size_t values = h.grid.points() * h.samples;
  if (in.remaining() != values * sizeof(double)) {
    throw CorruptFileError(path.string() + ": payload holds " + std::to_string(in.remaining()) +
                           " bytes, header requires " + std::to_string(values * sizeof(double)));
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(h.grid.points()), static_cast<Eigen::Index>(h.samples));
  in.f64s(std::span<double>(data.data(), values));
  if (!data.allFinite()) throw ValidationError(path.string() + ": payload contains non-finite values");
  return {h.grid, h.dt, std::move(data)};
}

void write_snapshots(const std::filesystem::path& path, const SnapshotMatrix& v) {
  io::ByteWriter out;
  out.magic(std::string_view(kSnapshotMagic, 4));
  out.u32(kSnapshotVersion);
  out.u32(static_cast<std::uint32_t>(v.grid().nx));
  out.u32(static_cast<std::uint32_t>(v.grid().ny));
  out.u32(static_cast<std::uint32_t>(v.samples()));
  out.f64(v.dt());
  out.f64s(std::span<const double>(v.data().data(), static_cast<std::size_t>(v.data().size())));
  io::write_file_atomic(path, out.bytes());
}

void write_snapshots_csv(const std::filesystem::path& path, const SnapshotMatrix& v) {
  std::ostringstream os;
  os << "t,i,j,value\n";
  for (std::size_t k = 0; k < v.samples(); ++k) {
    for (std::size_t j = 0; j < v.grid().ny; ++j) {
      for (std::size_t i = 0; i < v.grid().nx; ++i) {
        os << k << ',' << i << ',' << j << ','
           << io::format_double(v.at(i, j, k)) << '\n';
      }
    }
  }
  io::write_text_atomic(path, os.str());
}

}  // namespace mpj
