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

#include "reggap/embedding_cache.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "csv.hpp"
#include "reggap/binary_io.hpp"
#include "reggap/checkpoint.hpp"
#include "reggap/error.hpp"

namespace reggap {
namespace {

constexpr std::string_view kMagic = "RGE1";

std::string shortest(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string shortest(float v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

const CacheRecord* EmbeddingCache::find(std::string_view id) const {
  const auto it = std::find_if(records.begin(), records.end(),
                               [&](const CacheRecord& r) { return r.id == id; });
  return it == records.end() ? nullptr : &*it;
}

std::vector<std::uint8_t> encode_cache(const EmbeddingCache& cache) {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(cache.channels);
  w.put_u8(static_cast<std::uint8_t>(cache.kind));
  for (const auto& r : cache.records) {
    if (r.values.size() != cache.channels) {
      fail(ErrorCode::DimensionMismatch, "cache record '" + r.id + "' has " +
                                             std::to_string(r.values.size()) +
                                             " values, cache holds " +
                                             std::to_string(cache.channels));
    }
    if (r.id.size() > 0xFFFF) {
      fail(ErrorCode::InvalidConfig, "cache record id longer than 65535 bytes");
    }
    w.put_u16(static_cast<std::uint16_t>(r.id.size()));
    w.put_bytes(r.id);
    w.put_u8(r.gender ? static_cast<std::uint8_t>(*r.gender) : 0);
    w.put_f64(r.bmi);
    for (float v : r.values) w.put_f32(v);
  }
  w.put_u64(cache.records.size());
  return w.release();
}

EmbeddingCache decode_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kMagic.size() || r.get_bytes(kMagic.size()) != kMagic) {
    fail(ErrorCode::CacheIntegrity, "embedding cache has a bad magic number");
  }
  EmbeddingCache cache;
  cache.channels = r.get_u32();
  const std::uint8_t kind = r.get_u8();
  if (kind > 1) fail(ErrorCode::CacheIntegrity, "unknown pooling kind tag in cache");
  cache.kind = static_cast<PoolingKind>(kind);
  if (bytes.size() < 8 + 9) fail(ErrorCode::CacheIntegrity, "embedding cache is truncated");
  const std::size_t body_end = bytes.size() - 8;
  while (r.position() < body_end) {
    CacheRecord rec;
    const std::uint16_t len = r.get_u16();
    rec.id = r.get_bytes(len);
    const std::uint8_t g = r.get_u8();
    if (g > 2) fail(ErrorCode::CacheIntegrity, "bad gender tag for '" + rec.id + "'");
    if (g != 0) rec.gender = static_cast<Gender>(g);
    rec.bmi = r.get_f64();
    rec.values.resize(cache.channels);
    for (auto& v : rec.values) v = r.get_f32();
    cache.records.push_back(std::move(rec));
  }
  if (r.position() != body_end) {
    fail(ErrorCode::CacheIntegrity, "embedding cache record overruns the trailer");
  }
  const std::uint64_t count = r.get_u64();
  if (count != cache.records.size()) {
    fail(ErrorCode::CacheIntegrity, "embedding cache trailer says " + std::to_string(count) +
                                        " records, found " +
                                        std::to_string(cache.records.size()));
  }
  return cache;
}

std::filesystem::path cache_manifest_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".manifest";
  return p;
}

void write_embedding_cache(const std::filesystem::path& path, const EmbeddingCache& cache,
                           const CacheMeta& meta) {
  if (meta.pooling != cache.kind) {
    fail(ErrorCode::InvalidConfig, "cache metadata pooling disagrees with the cache header");
  }
  write_file_bytes(path, encode_cache(cache));
  const std::map<std::string, std::string> kv{
      {"backbone", meta.backbone},
      {"pooling", std::string(to_string(meta.pooling))},
      {"region_norm", std::string(to_string(meta.region_norm))},
      {"empty_region_policy", std::string(to_string(meta.empty_region_policy))},
      {"include_background", meta.include_background ? "true" : "false"},
      {"seed", std::to_string(meta.seed)},
      {"channels", std::to_string(cache.channels)},
      {"records", std::to_string(cache.records.size())},
  };
  write_text_file(cache_manifest_path(path), format_manifest(kv));
}

EmbeddingCache read_embedding_cache(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::CacheIntegrity, "embedding cache " + path.string() + " does not exist");
  }
  const auto bytes = read_file_bytes(path);
  return decode_cache(bytes);
}

CacheMeta read_cache_meta(const std::filesystem::path& path) {
  const auto sidecar = cache_manifest_path(path);
  if (!std::filesystem::exists(sidecar)) {
    fail(ErrorCode::CacheIntegrity, "cache manifest " + sidecar.string() + " is missing");
  }
  const auto kv = parse_manifest(read_text_file(sidecar));
  const auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::CacheIntegrity, sidecar.string() + " lacks '" + key + "'");
    return it->second;
  };
  CacheMeta meta;
  meta.backbone = get("backbone");
  const auto pooling = pooling_kind_from_string(get("pooling"));
  const auto norm = region_norm_from_string(get("region_norm"));
  const auto policy = empty_region_policy_from_string(get("empty_region_policy"));
  if (!pooling || !norm || !policy) {
    fail(ErrorCode::CacheIntegrity, sidecar.string() + " has an unknown pooling setting");
  }
  meta.pooling = *pooling;
  meta.region_norm = *norm;
  meta.empty_region_policy = *policy;
  meta.include_background = get("include_background") == "true";
  const std::string seed = get("seed");
  const auto res = std::from_chars(seed.data(), seed.data() + seed.size(), meta.seed);
  if (res.ec != std::errc() || res.ptr != seed.data() + seed.size()) {
    fail(ErrorCode::CacheIntegrity, sidecar.string() + " has a malformed seed");
  }
  return meta;
}

std::string export_embeddings_csv(const EmbeddingCache& cache) {
  std::string out = "id,gender,bmi";
  for (std::uint32_t c = 0; c < cache.channels; ++c) out += ",v" + std::to_string(c);
  out += "\n";
  for (const auto& r : cache.records) {
    out += detail::csv_escape(r.id);
    out += ",";
    if (r.gender) out += to_string(*r.gender);
    out += "," + shortest(r.bmi);
    for (float v : r.values) out += "," + shortest(v);
    out += "\n";
  }
  return out;
}

}  // namespace reggap
