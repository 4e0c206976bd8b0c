// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "pdr/error.hpp"

// Little-endian readers/writers over whole-file buffers. Read errors carry
// the byte offset where the data ran out.
namespace pdr::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
 public:
  template <class T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  template <class T>
  void put_array(const std::vector<T>& values) {
    const auto* p = reinterpret_cast<const char*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size() * sizeof(T));
  }
  void write_to(const std::filesystem::path& path) const;

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  template <class T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  std::string get_bytes(std::size_t n) { return std::string(take(n), n); }
  template <class T>
  std::vector<T> get_array(std::size_t count) {
    if (count > (bytes_.size() - pos_) / sizeof(T)) fail(count * sizeof(T));
    std::vector<T> out(count);
    std::memcpy(out.data(), take(count * sizeof(T)), count * sizeof(T));
    return out;
  }
  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail_format(const std::string& what) const;

 private:
  const char* take(std::size_t n);
  [[noreturn]] void fail(std::size_t wanted) const;

  std::filesystem::path path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace pdr::io
