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

#ifndef REGGAP_POOLING_HPP
#define REGGAP_POOLING_HPP

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "reggap/types.hpp"

namespace reggap {

/// Denominator of a region mean: the region's own cell count, or h*w.
enum class RegionNorm { Support, FullGrid };

/// FixedK keeps K at the full region count and lets empty regions add zeros;
/// DropEmpty averages only over regions with non-zero support.
enum class EmptyRegionPolicy { FixedK, DropEmpty };

std::string_view to_string(RegionNorm norm) noexcept;
std::optional<RegionNorm> region_norm_from_string(std::string_view s) noexcept;
std::string_view to_string(EmptyRegionPolicy policy) noexcept;
std::optional<EmptyRegionPolicy> empty_region_policy_from_string(
    std::string_view s) noexcept;

struct PoolingOptions {
  RegionNorm region_norm = RegionNorm::Support;
  EmptyRegionPolicy empty_region_policy = EmptyRegionPolicy::FixedK;
  /// Adds the complement of the eight masks as a ninth region.
  bool include_background = false;
  /// Off only for diagnostics that pool deliberately overlapping masks.
  bool require_disjoint = true;
};

/// Masked mean of one region. `region` is empty for the background.
struct RegionVector {
  std::optional<RegionId> region;
  std::vector<double> values;
  std::size_t support = 0;
};

/// Per-channel mean over all spatial cells.
Embedding gap(const FeatureMap& map);

/// Per-channel mean of the cells where `mask` is 1. A region with no cells
/// yields a zero vector with support 0.
RegionVector region_pool(const FeatureMap& map, const Mask& mask,
                         RegionNorm norm = RegionNorm::Support);

/// Average of the per-region masked means over the canonical regions.
///
/// Regions are visited in canonical order and combined with a pairwise
/// reduction, so the result does not depend on thread count or call site.
Embedding reg_gap(const FeatureMap& map, const RegionMaskSet& masks,
                  const PoolingOptions& options = {});

/// Pixels that belong to none of the eight regions.
Mask background_mask(const RegionMaskSet& masks);

}  // namespace reggap

#endif  // REGGAP_POOLING_HPP
