#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mpj/field.hpp"

namespace mpj::neural {

enum class ModelKind { Rnn, Cnn };
enum class LayerKind { Lstm, Dense, Conv3D, MaxPool3D, BatchNorm, Flatten };
enum class Activation { Linear, Relu, Sigmoid, Tanh };

std::string_view to_string(ModelKind k);
std::string_view to_string(LayerKind k);
std::string_view to_string(Activation a);
ModelKind parse_model_kind(std::string_view s);

/// One layer of a forecaster.
///   Lstm      units = hidden size; tanh cell activation, sigmoid gates,
///             returns the final hidden state only.
///   Dense     units = outputs.
///   Conv3D    units = filters; `window` is the kernel, stride 1, no padding.
///   MaxPool3D `window` is both pool size and stride, valid padding.
///   BatchNorm normalises the last (channel) axis.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t units = 0;
  std::array<std::size_t, 3> window{1, 1, 1};
  Activation activation = Activation::Linear;

  bool operator==(const LayerSpec&) const = default;
};

/// Tensor shape of a single sample, outermost axis first.
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& s);
std::string format_shape(const Shape& s);

struct ArchSpec {
  ModelKind kind = ModelKind::Rnn;
  std::size_t q = 10;
  Grid2D grid;
  std::size_t horizon = 2;
  /// Inputs and targets are min-max scaled to [0,1].
  bool scaled_io = false;
  std::vector<LayerSpec> layers;

  Shape input_shape() const;
  std::size_t input_size() const { return q * grid.points(); }
  std::size_t output_size() const { return horizon * grid.points(); }

  bool operator==(const ArchSpec&) const = default;
};

/// LSTM(400) -> Dense(200, ReLU) -> Dense(80, ReLU) -> Dense(horizon*J, Linear).
/// Consumes unscaled snapshots reshaped to vectors.
ArchSpec rnn_arch(std::size_t q, Grid2D grid, std::size_t horizon = 2);

/// [Conv3D(2x2x2, ReLU) -> MaxPool3D(1x2x2) -> BatchNorm] x3 with 5, 10, 20
/// filters -> Conv3D(1x1x1, 2, ReLU) -> Flatten -> Dense(80, ReLU) ->
/// Dense(horizon*J, Sigmoid). Consumes [0,1]-scaled data.
ArchSpec cnn_arch(std::size_t q, Grid2D grid, std::size_t horizon = 2);

ArchSpec make_arch(ModelKind kind, std::size_t q, Grid2D grid, std::size_t horizon = 2);

/// Output shape of every layer, preceded by the input shape. Throws
/// std::invalid_argument when a layer cannot consume its input or the last
/// layer does not produce horizon*J values.
std::vector<Shape> shape_trace(const ArchSpec& arch);

/// Trainable scalars. LSTM 4(in+h+1)h, Conv3D prod(kernel) in out + out,
/// BatchNorm 2c, Dense in out + out.
std::size_t param_count(const ArchSpec& arch);

}  // namespace mpj::neural
