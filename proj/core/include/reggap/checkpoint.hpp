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

#ifndef REGGAP_CHECKPOINT_HPP
#define REGGAP_CHECKPOINT_HPP

#include <filesystem>
#include <map>
#include <string>

#include "reggap/head.hpp"
#include "reggap/pooling.hpp"

namespace reggap {

/// Everything needed to decide whether a checkpoint fits an embedding cache.
struct CheckpointMeta {
  HeadConfig config;
  std::string backbone;
  PoolingKind pooling = PoolingKind::RegGap;
  RegionNorm region_norm = RegionNorm::Support;
  EmptyRegionPolicy empty_region_policy = EmptyRegionPolicy::FixedK;
  bool include_background = false;
};

struct Checkpoint {
  HeadParams params;
  CheckpointMeta meta;
};

/// Binary file: "RGH1", u32 input dim, then f64 LE tensors w1 b1 w2 b2 w3 b3
/// (row-major), the input mean and scale, Adam m and v in the same tensor
/// order, and a u64 step counter. The sidecar `<path>.manifest` holds the
/// configuration as `key = value` lines.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws ModelLoadFailure if the file is missing or unreadable and
/// CacheIntegrity on a malformed payload.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& path);

/// Key/value text used by checkpoint and cache sidecars.
std::string format_manifest(const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> parse_manifest(const std::string& text);

}  // namespace reggap

#endif  // REGGAP_CHECKPOINT_HPP
