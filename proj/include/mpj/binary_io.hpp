#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpj::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Growable little-endian byte buffer.
class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }

  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
  }
  std::vector<char> bytes_;
};

/// Bounds-checked cursor over a byte buffer. Reads past the end throw
/// CorruptFileError with the supplied context.
class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string context)
      : bytes_(std::move(bytes)), context_(std::move(context)) {}

  bool magic_matches(std::string_view m);
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  void f64s(std::span<double> out);

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  [[noreturn]] void fail_truncated() const;

 private:
  template <typename U>
  U get() {
    if (remaining() < sizeof(U)) fail_truncated();
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::vector<char> bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Shortest round-trip text form with 17 significant digits.
std::string format_double(double v);

}  // namespace mpj::io
