// Copyright 2026 The reggap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reggap/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include "reggap/error.hpp"

namespace reggap {

void ByteWriter::put_le(std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) {
    buf_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
  }
}

void ByteWriter::put_u8(std::uint8_t v) { buf_.push_back(v); }
void ByteWriter::put_u16(std::uint16_t v) { put_le(v, 2); }
void ByteWriter::put_u32(std::uint32_t v) { put_le(v, 4); }
void ByteWriter::put_u64(std::uint64_t v) { put_le(v, 8); }
void ByteWriter::put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
void ByteWriter::put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }

void ByteWriter::put_bytes(std::string_view bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteReader::require(std::size_t n) const {
  if (n > remaining()) {
    fail(ErrorCode::CacheIntegrity,
         "unexpected end of data at byte " + std::to_string(pos_) + " (need " +
             std::to_string(n) + ", have " + std::to_string(remaining()) + ")");
  }
}

std::uint64_t ByteReader::get_le(int width) {
  require(static_cast<std::size_t>(width));
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  }
  pos_ += static_cast<std::size_t>(width);
  return v;
}

std::uint8_t ByteReader::get_u8() { return static_cast<std::uint8_t>(get_le(1)); }
std::uint16_t ByteReader::get_u16() { return static_cast<std::uint16_t>(get_le(2)); }
std::uint32_t ByteReader::get_u32() { return static_cast<std::uint32_t>(get_le(4)); }
std::uint64_t ByteReader::get_u64() { return get_le(8); }
float ByteReader::get_f32() { return std::bit_cast<float>(get_u32()); }
double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string ByteReader::get_bytes(std::size_t n) {
  require(n);
  std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return out;
}

void ByteReader::seek(std::size_t pos) {
  if (pos > bytes_.size()) {
    fail(ErrorCode::CacheIntegrity, "seek past end of data");
  }
  pos_ = pos;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    fail(ErrorCode::IoFailure,
         "cannot move " + tmp.string() + " to " + path.string() + ": " +
             ec.message());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path,
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace reggap
