#include "srm/error.hpp"
#include "srm/hash.hpp"
#include "srm/parallel.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <thread>
#include <vector>

namespace srm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::hash_mismatch: return "hash_mismatch";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::argument: return "argument";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw Error(ErrorCode::io, "sha256 failed");
  }
  return out;
}

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 15]);
  }
  return s;
}

Digest digest_from_hex(const std::string& hex) {
  if (hex.size() != 64) throw Error(ErrorCode::parse, "digest must be 64 hex characters");
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::parse, "invalid hex digit in digest");
  };
  Digest d{};
  for (std::size_t i = 0; i < 32; ++i) d[i] = (nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]);
  return d;
}

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void ByteWriter::put_u16(std::uint16_t v) {
  put_u8(v & 0xff);
  put_u8(v >> 8);
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) put_u8((v >> (8 * i)) & 0xff);
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_f64(double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) put_u8((u >> (8 * i)) & 0xff);
}

void ByteWriter::put_string(const std::string& s) {
  put_u32(static_cast<std::uint32_t>(s.size()));
  for (char c : s) put_u8(static_cast<std::uint8_t>(c));
}

void ByteReader::need(std::size_t n) {
  if (remaining() < n) {
    throw Error(ErrorCode::parse, what_ + ": truncated at byte offset " + std::to_string(offset_));
  }
}

std::uint8_t ByteReader::get_u8() {
  need(1);
  return bytes_[offset_++];
}

std::uint16_t ByteReader::get_u16() {
  need(2);
  std::uint16_t v = bytes_[offset_] | (bytes_[offset_ + 1] << 8);
  offset_ += 2;
  return v;
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[offset_ + i]) << (8 * i);
  offset_ += 4;
  return v;
}

float ByteReader::get_f32() { return std::bit_cast<float>(get_u32()); }

double ByteReader::get_f64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes_[offset_ + i]) << (8 * i);
  offset_ += 8;
  return std::bit_cast<double>(v);
}

void ByteReader::get_bytes(std::span<std::uint8_t> out) {
  need(out.size());
  std::memcpy(out.data(), bytes_.data() + offset_, out.size());
  offset_ += out.size();
}

std::basic_string<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

std::size_t worker_count() {
  if (const char* env = std::getenv("SRMH_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace srm
