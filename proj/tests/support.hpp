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

// Small helpers shared by the test binaries.

#ifndef REGGAP_TESTS_SUPPORT_HPP
#define REGGAP_TESTS_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "reggap/types.hpp"

namespace reggap::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "reggap") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(REGGAP_TEST_DATA_DIR) / name;
}

inline FeatureMap random_map(std::mt19937_64& gen, std::size_t h, std::size_t w, std::size_t c,
                             double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  FeatureMap m(h, w, c);
  for (auto& v : m.data()) v = u(gen);
  return m;
}

/// Random canonical label map; each pixel gets 0..8 uniformly.
inline LabelMap random_labels(std::mt19937_64& gen, std::size_t h, std::size_t w) {
  std::uniform_int_distribution<int> lab(0, kNumFaceLabels - 1);
  LabelMap m = LabelMap::canonical(h, w);
  for (auto& v : m.labels.data()) v = lab(gen);
  return m;
}

inline bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary);
  std::ifstream fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return std::filesystem::exists(a) && std::filesystem::exists(b) && sa == sb;
}

}  // namespace reggap::testing

#endif  // REGGAP_TESTS_SUPPORT_HPP
