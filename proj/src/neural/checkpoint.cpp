#include "mpj/neural/checkpoint.hpp"

#include <stdexcept>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"

namespace mpj::neural {

void write_checkpoint(const std::filesystem::path& path, const ArchSpec& arch, const ModelParams& params) {
  const ModelParams layout = zero_params(arch);
  if (layout.tensors.size() != params.tensors.size()) {
    throw std::invalid_argument("checkpoint: parameters do not match the architecture");
  }
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (params.tensors[i].values.size() != layout.tensors[i].values.size()) {
      throw std::invalid_argument("checkpoint: tensor " + params.tensors[i].name + " has the wrong size");
    }
  }

  io::ByteWriter out;
  out.magic(std::string_view(kCheckpointMagic, 4));
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(arch.kind));
  out.u32(static_cast<std::uint32_t>(arch.q));
  out.u32(static_cast<std::uint32_t>(arch.grid.nx));
  out.u32(static_cast<std::uint32_t>(arch.grid.ny));
  out.u32(static_cast<std::uint32_t>(arch.horizon));
  out.u32(arch.scaled_io ? 1u : 0u);
  out.u32(static_cast<std::uint32_t>(arch.layers.size()));
  for (const auto& l : arch.layers) {
    out.u32(static_cast<std::uint32_t>(l.kind));
    out.u32(static_cast<std::uint32_t>(l.units));
    for (auto w : l.window) out.u32(static_cast<std::uint32_t>(w));
    out.u32(static_cast<std::uint32_t>(l.activation));
  }
  for (const auto& t : params.tensors) out.f64s(t.values);
  io::write_file_atomic(path, out.bytes());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  io::ByteReader in(io::read_file(path), path.string());
  if (!in.magic_matches(std::string_view(kCheckpointMagic, 4))) {
    throw FormatError(path.string() + ": not a model checkpoint (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint cp;
  ArchSpec& a = cp.arch;
  const std::uint32_t kind = in.u32();
  if (kind > static_cast<std::uint32_t>(ModelKind::Cnn)) throw CorruptFileError(path.string() + ": bad model kind");
  a.kind = static_cast<ModelKind>(kind);
  a.q = in.u32();
  a.grid.nx = in.u32();
  a.grid.ny = in.u32();
  a.horizon = in.u32();
  a.scaled_io = in.u32() != 0;
  const std::uint32_t layers = in.u32();
  for (std::uint32_t i = 0; i < layers; ++i) {
    LayerSpec l;
    const std::uint32_t lk = in.u32();
    if (lk > static_cast<std::uint32_t>(LayerKind::Flatten)) throw CorruptFileError(path.string() + ": bad layer kind");
    l.kind = static_cast<LayerKind>(lk);
    l.units = in.u32();
    for (auto& w : l.window) w = in.u32();
    const std::uint32_t act = in.u32();
    if (act > static_cast<std::uint32_t>(Activation::Tanh)) throw CorruptFileError(path.string() + ": bad activation");
    l.activation = static_cast<Activation>(act);
    a.layers.push_back(l);
  }

  try {
    cp.params = zero_params(a);
  } catch (const std::invalid_argument& e) {
    throw CorruptFileError(path.string() + ": inconsistent architecture: " + e.what());
  }
  std::size_t expected = 0;
  for (const auto& t : cp.params.tensors) expected += t.values.size();
  if (in.remaining() != expected * sizeof(double)) {
    throw CorruptFileError(path.string() + ": tensor payload size does not match the architecture");
  }
  for (auto& t : cp.params.tensors) in.f64s(t.values);
  return cp;
}

}  // namespace mpj::neural
