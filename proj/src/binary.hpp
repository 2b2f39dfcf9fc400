#pragma once

// Little-endian byte buffer helpers shared by the cache and results formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "lmdiff/error.hpp"

namespace lmdiff::detail {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume little-endian hosts");

class ByteWriter {
 public:
  void raw(std::string_view bytes) { buf_.append(bytes); }
  void u32(std::uint32_t v) { pod(v); }
  void f32(float v) { pod(v); }
  void f64(double v) { pod(v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  std::string take() && { return std::move(buf_); }

 private:
  template <class T>
  void pod(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, const char* what) : data_(bytes), what_(what) {}

  std::string_view raw(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  float f32() { return pod<float>(); }
  double f64() { return pod<double>(); }
  std::string str() { return std::string(raw(u32())); }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > remaining())
      throw FormatError(std::string(what_) + ": truncated at byte " + std::to_string(pos_));
  }
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  const char* what_;
};

}  // namespace lmdiff::detail
