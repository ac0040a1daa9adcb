#include <sstream>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"
#include "mpj/hodmd.hpp"

namespace mpj::hodmd {

void write_mode_table_csv(const std::filesystem::path& path, std::span<const ModeRow> rows) {
  using io::format_double;
  std::ostringstream os;
  os << "m,amp_norm,amplitude,delta,omega,strouhal,phase\n";
  for (const auto& r : rows) {
    os << r.m << ',' << format_double(r.amp_norm) << ',' << format_double(r.amplitude) << ','
       << format_double(r.delta) << ',' << format_double(r.omega) << ',' << format_double(r.strouhal) << ','
       << format_double(r.phase) << '\n';
  }
  io::write_text_atomic(path, os.str());
}

void write_rom(const std::filesystem::path& path, const Rom& rom) {
  const HodmdResult& r = rom.result;
  io::ByteWriter out;
  out.magic(std::string_view(kRomMagic, 4));
  out.u32(kRomVersion);
  out.u32(static_cast<std::uint32_t>(r.grid.nx));
  out.u32(static_cast<std::uint32_t>(r.grid.ny));
  out.u32(static_cast<std::uint32_t>(r.spatial_complexity));
  out.u32(static_cast<std::uint32_t>(r.modes.size()));
  out.f64(r.dt);
  out.f64(r.t0);
  for (const auto& m : r.modes) {
    out.f64(m.amplitude);
    out.f64(m.phase);
    out.f64(m.growth_rate);
    out.f64(m.frequency);
    for (Eigen::Index i = 0; i < m.spatial.size(); ++i) {
      out.f64(m.spatial(i).real());
      out.f64(m.spatial(i).imag());
    }
  }
  io::write_file_atomic(path, out.bytes());
}

Rom read_rom(const std::filesystem::path& path) {
  io::ByteReader in(io::read_file(path), path.string());
  if (!in.magic_matches(std::string_view(kRomMagic, 4))) {
    throw FormatError(path.string() + ": not a ROM file (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kRomVersion) throw FormatError(path.string() + ": unsupported ROM version " + std::to_string(version));

  Rom rom;
  HodmdResult& r = rom.result;
  r.grid.nx = in.u32();
  r.grid.ny = in.u32();
  r.spatial_complexity = in.u32();
  const std::uint32_t count = in.u32();
  r.dt = in.f64();
  r.t0 = in.f64();
  if (r.grid.nx == 0 || r.grid.ny == 0) throw CorruptFileError(path.string() + ": empty grid in ROM header");

  const std::size_t j = r.grid.points();
  const std::size_t per_mode = (4 + 2 * j) * sizeof(double);
  if (in.remaining() != per_mode * count) {
    throw CorruptFileError(path.string() + ": payload size does not match " + std::to_string(count) + " modes");
  }
  r.spectral_complexity = count;
  r.modes.resize(count);
  for (auto& m : r.modes) {
    m.amplitude = in.f64();
    m.phase = in.f64();
    m.growth_rate = in.f64();
    m.frequency = in.f64();
    m.spatial.resize(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < j; ++i) {
      const double re = in.f64();
      const double im = in.f64();
      m.spatial(static_cast<Eigen::Index>(i)) = {re, im};
    }
  }
  return rom;
}

}  // namespace mpj::hodmd
