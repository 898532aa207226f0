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

#ifndef REGGAP_INTERPOLATION_HPP
#define REGGAP_INTERPOLATION_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "reggap/types.hpp"

namespace reggap {

enum class ResizeKind { Biquartic, Nearest };

struct ResizeSpec {
  std::size_t target_height = 32;
  std::size_t target_width = 32;
  ResizeKind kind = ResizeKind::Biquartic;
};

inline constexpr double kDefaultMaskThreshold = 0.5;

/// Source position sampled by target index `t` under the align-corners
/// convention; a single target sample maps to the source centre.
double source_coordinate(std::size_t t, std::size_t source_len,
                         std::size_t target_len) noexcept;

/// One axis of the separable kernel: up to five taps into the source axis.
struct Stencil {
  std::array<std::size_t, 5> index{};
  std::array<double, 5> weight{};
};

/// Degree-4 Lagrange stencils for every target index along an axis.
///
/// The five nodes are the source samples nearest the continuous coordinate
/// (ties toward the lower index). When the source axis has at least five
/// samples the window is shifted to stay inside it, so polynomials of degree
/// <= 4 are reproduced exactly up to the borders. Shorter axes replicate the
/// edge samples instead.
std::vector<Stencil> biquartic_stencils(std::size_t source_len,
                                        std::size_t target_len);

/// Separable resampling of every channel; `spec.kind` selects the kernel.
Array3 resample(const Array3& source, const ResizeSpec& spec);

/// Bi-quartic resize of a feature map. Throws InvalidConfig if `spec.kind` asks
/// for another kernel.
FeatureMap resize_biquartic(const FeatureMap& map, const ResizeSpec& spec);

/// Resizes a binary mask with the kernel chosen by `spec.kind` and re-binarises it
/// (value >= threshold becomes 1).
Mask resize_mask(const Mask& mask, const ResizeSpec& spec,
                 double threshold = kDefaultMaskThreshold);

/// Resizes all eight masks. A pixel claimed by several regions after
/// thresholding goes to the region with the largest resampled value (lower
/// canonical index on ties), so the result stays disjoint.
RegionMaskSet resize_mask_set(const RegionMaskSet& masks, const ResizeSpec& spec,
                              double threshold = kDefaultMaskThreshold);

}  // namespace reggap

#endif  // REGGAP_INTERPOLATION_HPP
