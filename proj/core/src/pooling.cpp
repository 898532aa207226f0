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

#include "reggap/pooling.hpp"

#include <algorithm>
#include <span>
#include <vector>

#include "reggap/error.hpp"

namespace reggap {
namespace {

constexpr std::size_t kPairwiseBlock = 8;

// Pairwise summation of f(begin) .. f(end - 1).
// Per-channel pairwise sum over cells [begin, end) of a cell-major map,
// computed for all channels at once. Each channel sees the same tree as a
// scalar pairwise sum: leaves of up to kPairwiseBlock cells summed in order,
// then halves combined. Cells with a zero weight are skipped.
void pairwise_cells(const double* data, const double* weights, std::size_t channels,
                    std::size_t begin, std::size_t end, double* out) {
  const std::size_t n = end - begin;
  if (n <= kPairwiseBlock) {
    std::fill(out, out + channels, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = data + i * channels;
      if (weights == nullptr) {
        for (std::size_t c = 0; c < channels; ++c) out[c] += row[c];
      } else if (weights[i] != 0.0) {
        const double w = weights[i];
        for (std::size_t c = 0; c < channels; ++c) out[c] += row[c] * w;
      }
    }
    return;
  }
  const std::size_t mid = begin + n / 2;
  std::vector<double> right(channels);
  pairwise_cells(data, weights, channels, begin, mid, out);
  pairwise_cells(data, weights, channels, mid, end, right.data());
  for (std::size_t c = 0; c < channels; ++c) out[c] += right[c];
}

std::vector<double> pairwise_vector_sum(
    std::span<const std::vector<double>* const> parts, std::size_t channels) {
  if (parts.empty()) return std::vector<double>(channels, 0.0);
  if (parts.size() == 1) return *parts.front();
  const std::size_t mid = parts.size() / 2;
  auto left = pairwise_vector_sum(parts.first(mid), channels);
  const auto right = pairwise_vector_sum(parts.subspan(mid), channels);
  for (std::size_t c = 0; c < channels; ++c) left[c] += right[c];
  return left;
}

void check_mask_shape(const FeatureMap& map, std::size_t rows, std::size_t cols) {
  if (rows != map.height() || cols != map.width()) {
    fail(ErrorCode::ShapeMismatch,
         "mask is " + std::to_string(rows) + "x" + std::to_string(cols) +
             " but the feature map is " + std::to_string(map.height()) + "x" +
             std::to_string(map.width()));
  }
}

}  // namespace

std::string_view to_string(RegionNorm norm) noexcept {
  return norm == RegionNorm::Support ? "support" : "full_grid";
}

std::optional<RegionNorm> region_norm_from_string(std::string_view s) noexcept {
  if (s == "support") return RegionNorm::Support;
  if (s == "full_grid") return RegionNorm::FullGrid;
  return std::nullopt;
}

std::string_view to_string(EmptyRegionPolicy policy) noexcept {
  return policy == EmptyRegionPolicy::FixedK ? "fixed_k" : "drop_empty";
}

std::optional<EmptyRegionPolicy> empty_region_policy_from_string(
    std::string_view s) noexcept {
  if (s == "fixed_k") return EmptyRegionPolicy::FixedK;
  if (s == "drop_empty") return EmptyRegionPolicy::DropEmpty;
  return std::nullopt;
}

Embedding gap(const FeatureMap& map) {
  validate_feature_map(map);
  const std::size_t channels = map.channels();
  const auto data = map.data();
  const auto cells = static_cast<double>(map.cells());
  Embedding out;
  out.kind = PoolingKind::Gap;
  out.values.resize(channels);
  pairwise_cells(data.data(), nullptr, channels, 0, map.cells(), out.values.data());
  for (double& v : out.values) v /= cells;
  return out;
}

RegionVector region_pool(const FeatureMap& map, const Mask& mask,
                         RegionNorm norm) {
  check_mask_shape(map, mask.rows(), mask.cols());
  const auto weights = mask.data();
  std::size_t support = 0;
  for (double w : weights) {
    if (w != 0.0 && w != 1.0) {
      fail(ErrorCode::NonBinaryMask, "region_pool mask is not binary");
    }
    support += w == 1.0;
  }
  const std::size_t channels = map.channels();
  RegionVector out;
  out.support = support;
  out.values.assign(channels, 0.0);
  if (support == 0) return out;

  const double denom = norm == RegionNorm::Support
                           ? static_cast<double>(support)
                           : static_cast<double>(map.cells());
  const auto data = map.data();
  pairwise_cells(data.data(), weights.data(), channels, 0, map.cells(), out.values.data());
  for (double& v : out.values) v /= denom;
  return out;
}

Mask background_mask(const RegionMaskSet& masks) {
  Mask bg(masks.height(), masks.width(), 1.0);
  auto out = bg.data();
  for (RegionId r : kAllRegions) {
    const auto m = masks[r].data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (m[i] == 1.0) out[i] = 0.0;
    }
  }
  return bg;
}

Embedding reg_gap(const FeatureMap& map, const RegionMaskSet& masks,
                  const PoolingOptions& options) {
  validate_feature_map(map);
  check_mask_shape(map, masks.height(), masks.width());
  if (options.require_disjoint) {
    validate_mask_set(masks);
  } else {
    validate_masks_binary(masks);
  }

  std::vector<RegionVector> regions;
  regions.reserve(kNumRegions + 1);
  for (RegionId r : kAllRegions) {
    RegionVector v = region_pool(map, masks[r], options.region_norm);
    v.region = r;
    regions.push_back(std::move(v));
  }
  if (options.include_background) {
    regions.push_back(region_pool(map, background_mask(masks), options.region_norm));
  }

  std::vector<const std::vector<double>*> parts;
  for (const auto& v : regions) {
    if (options.empty_region_policy == EmptyRegionPolicy::DropEmpty &&
        v.support == 0) {
      continue;
    }
    parts.push_back(&v.values);
  }
  const double k = options.empty_region_policy == EmptyRegionPolicy::FixedK
                       ? static_cast<double>(regions.size())
                       : static_cast<double>(parts.size());

  Embedding out;
  out.kind = PoolingKind::RegGap;
  out.values = pairwise_vector_sum(parts, map.channels());
  if (k > 0.0) {
    for (double& v : out.values) v /= k;
  }
  return out;
}

}  // namespace reggap
