// SPDX-License-Identifier: Apache-2.0
#include "pdr/binary_io.hpp"

namespace pdr::io {

void Writer::write_to(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Reader::Reader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const char* Reader::take(std::size_t n) {
  if (n > bytes_.size() - pos_) fail(n);
  const char* p = bytes_.data() + pos_;
  pos_ += n;
  return p;
}

void Reader::fail(std::size_t wanted) const {
  throw IoError(path_.string() + ": truncated at offset " + std::to_string(pos_) + " (needed " +
                std::to_string(wanted) + " bytes, " + std::to_string(bytes_.size() - pos_) + " left)");
}

void Reader::fail_format(const std::string& what) const {
  throw IoError(path_.string() + ": " + what + " at offset " + std::to_string(pos_));
}

}  // namespace pdr::io
