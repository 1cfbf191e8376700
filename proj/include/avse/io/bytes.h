// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Little-endian byte buffers and whole-file helpers for the binary formats.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "avse/error.h"

namespace avse::io {

std::vector<unsigned char> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const unsigned char> bytes);

class ByteWriter {
 public:
  void raw(const void *data, std::size_t n) {
    const auto *p = static_cast<const unsigned char *>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  std::vector<unsigned char> take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const unsigned char> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::string tag() { return std::string(reinterpret_cast<const char *>(take(4)), 4); }
  std::string text(std::size_t n) { return std::string(reinterpret_cast<const char *>(take(n)), n); }
  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void skip(std::size_t n) { take(n); }

 private:
  const unsigned char *take(std::size_t n) {
    if (n > remaining()) fail(ErrorCode::kFormat, what_ + ": unexpected end of data");
    const unsigned char *p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t get(int n) {
    const unsigned char *p = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace avse::io
