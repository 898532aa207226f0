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

#ifndef REGGAP_EMBEDDING_CACHE_HPP
#define REGGAP_EMBEDDING_CACHE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reggap/pooling.hpp"
#include "reggap/types.hpp"

namespace reggap {

struct CacheRecord {
  std::string id;
  std::optional<Gender> gender;
  double bmi = 0.0;
  std::vector<float> values;
};

/// Provenance kept in the `<cache>.manifest` sidecar.
struct CacheMeta {
  std::string backbone;
  PoolingKind pooling = PoolingKind::RegGap;
  RegionNorm region_norm = RegionNorm::Support;
  EmptyRegionPolicy empty_region_policy = EmptyRegionPolicy::FixedK;
  bool include_background = false;
  std::uint64_t seed = 0;
};

struct EmbeddingCache {
  std::uint32_t channels = 0;
  PoolingKind kind = PoolingKind::RegGap;
  std::vector<CacheRecord> records;

  const CacheRecord* find(std::string_view id) const;
};

/// "RGE1", u32 C, u8 kind, then per record: u16 id length, id bytes,
/// u8 gender (0 unknown, 1 male, 2 female), f64 bmi, C x f32; finally a
/// u64 record count. All little-endian.
std::vector<std::uint8_t> encode_cache(const EmbeddingCache& cache);
/// Throws CacheIntegrity on any structural problem.
EmbeddingCache decode_cache(std::span<const std::uint8_t> bytes);

std::filesystem::path cache_manifest_path(const std::filesystem::path& path);

void write_embedding_cache(const std::filesystem::path& path, const EmbeddingCache& cache,
                           const CacheMeta& meta);
EmbeddingCache read_embedding_cache(const std::filesystem::path& path);
CacheMeta read_cache_meta(const std::filesystem::path& path);

/// CSV with header `id,gender,bmi,v0..v{C-1}`.
std::string export_embeddings_csv(const EmbeddingCache& cache);

}  // namespace reggap

#endif  // REGGAP_EMBEDDING_CACHE_HPP
