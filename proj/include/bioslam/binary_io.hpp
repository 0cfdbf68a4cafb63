#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bioslam/matrix.hpp"
#include "bioslam/types.hpp"

namespace bioslam {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view text);

/// Little-endian byte sink. Vectors are written as a u64 length followed by
/// f64 entries; matrices as u64 rows, u64 cols, then row-major entries.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void raw(std::string_view s);
  void vec(std::span<const double> v);
  void matrix(const Matrix& m);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t>& bytes() { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked reader over a byte buffer. Every read past the end, and
/// every length that cannot fit in the remaining bytes, throws
/// Error(corrupt_file) mentioning `what`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string raw(std::size_t n);
  Vec vec();
  Matrix matrix();
  /// A u64 element count, rejected if `count * min_element_bytes` exceeds
  /// what is left.
  std::size_t count(std::size_t min_element_bytes);

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const;

 private:
  void need(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

/// Reads a whole file; Error(io) when it cannot be opened.
std::vector<std::uint8_t> read_file(const std::string& path);

/// Writes `bytes` to `path + ".tmp"` and renames it over `path`, so readers
/// never observe a partial file.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace bioslam
