#include "mpj/neural/arch.hpp"

#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mpj::neural {

std::string_view to_string(ModelKind k) { return k == ModelKind::Rnn ? "rnn" : "cnn"; }

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Lstm: return "LSTM";
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv3D: return "Conv3D";
    case LayerKind::MaxPool3D: return "MaxPool3D";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::Flatten: return "Flatten";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "rnn") return ModelKind::Rnn;
  if (s == "cnn") return ModelKind::Cnn;
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "' (expected rnn or cnn)");
}

std::size_t element_count(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string format_shape(const Shape& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  return os.str();
}

Shape ArchSpec::input_shape() const {
  if (kind == ModelKind::Rnn) return {q, grid.points()};
  return {q, grid.ny, grid.nx, 1};
}

ArchSpec rnn_arch(std::size_t q, Grid2D grid, std::size_t horizon) {
  ArchSpec a;
  a.kind = ModelKind::Rnn;
  a.q = q;
  a.grid = grid;
  a.horizon = horizon;
  a.scaled_io = false;
  a.layers = {
      {LayerKind::Lstm, 400, {1, 1, 1}, Activation::Tanh},
      {LayerKind::Dense, 200, {1, 1, 1}, Activation::Relu},
      {LayerKind::Dense, 80, {1, 1, 1}, Activation::Relu},
      {LayerKind::Dense, horizon * grid.points(), {1, 1, 1}, Activation::Linear},
  };
  return a;
}

ArchSpec cnn_arch(std::size_t q, Grid2D grid, std::size_t horizon) {
  ArchSpec a;
  a.kind = ModelKind::Cnn;
  a.q = q;
  a.grid = grid;
  a.horizon = horizon;
  a.scaled_io = true;
  for (std::size_t filters : {5, 10, 20}) {
    a.layers.push_back({LayerKind::Conv3D, filters, {2, 2, 2}, Activation::Relu});
    a.layers.push_back({LayerKind::MaxPool3D, 0, {1, 2, 2}, Activation::Linear});
    a.layers.push_back({LayerKind::BatchNorm, 0, {1, 1, 1}, Activation::Linear});
  }
  a.layers.push_back({LayerKind::Conv3D, 2, {1, 1, 1}, Activation::Relu});
  a.layers.push_back({LayerKind::Flatten, 0, {1, 1, 1}, Activation::Linear});
  a.layers.push_back({LayerKind::Dense, 80, {1, 1, 1}, Activation::Relu});
  a.layers.push_back({LayerKind::Dense, horizon * grid.points(), {1, 1, 1}, Activation::Sigmoid});
  return a;
}

ArchSpec make_arch(ModelKind kind, std::size_t q, Grid2D grid, std::size_t horizon) {
  return kind == ModelKind::Rnn ? rnn_arch(q, grid, horizon) : cnn_arch(q, grid, horizon);
}

namespace {

[[noreturn]] void shape_error(std::size_t layer, const LayerSpec& spec, const Shape& in, const std::string& why) {
  throw std::invalid_argument("layer " + std::to_string(layer) + " (" + std::string(to_string(spec.kind)) +
                              ") cannot take input " + format_shape(in) + ": " + why);
}

Shape next_shape(std::size_t index, const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::Lstm:
      if (in.size() != 2) shape_error(index, l, in, "expects (time, features)");
      if (l.units == 0) shape_error(index, l, in, "zero units");
      return {l.units};
    case LayerKind::Dense:
      if (in.size() != 1) shape_error(index, l, in, "expects a vector; add Flatten");
      if (l.units == 0) shape_error(index, l, in, "zero units");
      return {l.units};
    case LayerKind::Conv3D: {
      if (in.size() != 4) shape_error(index, l, in, "expects (depth, height, width, channels)");
      if (l.units == 0) shape_error(index, l, in, "zero filters");
      Shape out(4);
      for (std::size_t a = 0; a < 3; ++a) {
        if (l.window[a] == 0 || in[a] < l.window[a]) shape_error(index, l, in, "kernel larger than input");
        out[a] = in[a] - l.window[a] + 1;
      }
      out[3] = l.units;
      return out;
    }
    case LayerKind::MaxPool3D: {
      if (in.size() != 4) shape_error(index, l, in, "expects (depth, height, width, channels)");
      Shape out(4);
      for (std::size_t a = 0; a < 3; ++a) {
        if (l.window[a] == 0 || in[a] < l.window[a]) shape_error(index, l, in, "pool window larger than input");
        out[a] = in[a] / l.window[a];
      }
      out[3] = in[3];
      return out;
    }
    case LayerKind::BatchNorm:
      if (in.empty()) shape_error(index, l, in, "empty input");
      return in;
    case LayerKind::Flatten:
      return {element_count(in)};
  }
  shape_error(index, l, in, "unknown layer");
}

}  // namespace

std::vector<Shape> shape_trace(const ArchSpec& arch) {
  if (arch.q < 1 || arch.horizon < 1) throw std::invalid_argument("architecture needs q >= 1 and horizon >= 1");
  std::vector<Shape> trace{arch.input_shape()};
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    trace.push_back(next_shape(i, arch.layers[i], trace.back()));
  }
  if (trace.back().size() != 1 || trace.back()[0] != arch.output_size()) {
    throw std::invalid_argument("architecture output " + format_shape(trace.back()) + " does not match horizon*J = " +
                                std::to_string(arch.output_size()));
  }
  return trace;
}

std::size_t param_count(const ArchSpec& arch) {
  const auto trace = shape_trace(arch);
  std::size_t total = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    const Shape& in = trace[i];
    switch (l.kind) {
      case LayerKind::Lstm:
        total += 4 * (in[1] + l.units + 1) * l.units;
        break;
      case LayerKind::Dense:
        total += in[0] * l.units + l.units;
        break;
      case LayerKind::Conv3D:
        total += l.window[0] * l.window[1] * l.window[2] * in[3] * l.units + l.units;
        break;
      case LayerKind::BatchNorm:
        total += 2 * in.back();
        break;
      case LayerKind::MaxPool3D:
      case LayerKind::Flatten:
        break;
    }
  }
  return total;
}

}  // namespace mpj::neural
