#include "mpj/binary_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "mpj/errors.hpp"

namespace mpj::io {

bool ByteReader::magic_matches(std::string_view m) {
  if (remaining() < m.size()) return false;
  const bool ok = std::equal(m.begin(), m.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
  pos_ += m.size();
  return ok;
}

void ByteReader::f64s(std::span<double> out) {
  if (remaining() < out.size() * sizeof(double)) fail_truncated();
  for (double& v : out) v = f64();
}

void ByteReader::fail_truncated() const {
  throw CorruptFileError(context_ + ": truncated payload (" + std::to_string(bytes_.size()) +
                         " bytes, read position " + std::to_string(pos_) + ")");
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span<const char>(text.data(), text.size()));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace mpj::io
