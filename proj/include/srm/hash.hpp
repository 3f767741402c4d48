#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace srm {

using Digest = std::array<std::uint8_t, 32>;

// SHA-256 of a byte buffer.
Digest sha256(std::span<const std::uint8_t> bytes);

std::string to_hex(const Digest& digest);
Digest digest_from_hex(const std::string& hex);

// Incremental little-endian byte sink used to build canonical hash inputs.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { bytes_.push_back(v); }
  void put_u16(std::uint16_t v);
  void put_u32(std::uint32_t v);
  void put_f32(float v);
  void put_f64(double v);
  void put_bytes(std::span<const std::uint8_t> v) { bytes_.insert(bytes_.end(), v.begin(), v.end()); }
  void put_string(const std::string& s);

  const std::basic_string<std::uint8_t>& bytes() const { return bytes_; }
  std::basic_string<std::uint8_t> take() { return std::move(bytes_); }
  Digest digest() const { return sha256({bytes_.data(), bytes_.size()}); }

 private:
  std::basic_string<std::uint8_t> bytes_;
};

// Bounds-checked little-endian reader; throws Error(parse) on truncation.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint8_t get_u8();
  std::uint16_t get_u16();
  std::uint32_t get_u32();
  float get_f32();
  double get_f64();
  void get_bytes(std::span<std::uint8_t> out);

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void need(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t offset_ = 0;
};

std::basic_string<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace srm
