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

#include "reggap/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "reggap/error.hpp"

namespace reggap {
namespace {

constexpr std::size_t kTaps = 5;

std::vector<Stencil> nearest_stencils(std::size_t source_len,
                                      std::size_t target_len) {
  std::vector<Stencil> out(target_len);
  for (std::size_t t = 0; t < target_len; ++t) {
    const double s = source_coordinate(t, source_len, target_len);
    // Round half toward the lower index.
    auto i = static_cast<long>(std::ceil(s - 0.5));
    i = std::clamp(i, 0L, static_cast<long>(source_len) - 1);
    Stencil& st = out[t];
    st.index.fill(static_cast<std::size_t>(i));
    st.weight = {1.0, 0.0, 0.0, 0.0, 0.0};
  }
  return out;
}

void check_spec(const Array3& source, const ResizeSpec& spec) {
  if (source.height() == 0 || source.width() == 0 || source.channels() == 0) {
    fail(ErrorCode::EmptyDimension, "cannot resize an empty array");
  }
  if (spec.target_height == 0 || spec.target_width == 0) {
    fail(ErrorCode::EmptyDimension, "resize target must be at least 1x1");
  }
}

}  // namespace

double source_coordinate(std::size_t t, std::size_t source_len,
                         std::size_t target_len) noexcept {
  if (target_len <= 1) return 0.5 * static_cast<double>(source_len - 1);
  return static_cast<double>(t) * static_cast<double>(source_len - 1) /
         static_cast<double>(target_len - 1);
}

std::vector<Stencil> biquartic_stencils(std::size_t source_len,
                                        std::size_t target_len) {
  std::vector<Stencil> out(target_len);
  const long last = static_cast<long>(source_len) - 1;
  for (std::size_t t = 0; t < target_len; ++t) {
    const double s = source_coordinate(t, source_len, target_len);
    long first = static_cast<long>(std::ceil(s - 0.5)) - 2;
    if (source_len >= kTaps) first = std::clamp(first, 0L, last - 4);

    std::array<double, kTaps> node{};
    for (std::size_t j = 0; j < kTaps; ++j) {
      node[j] = static_cast<double>(first + static_cast<long>(j));
    }
    Stencil& st = out[t];
    for (std::size_t j = 0; j < kTaps; ++j) {
      double w = 1.0;
      for (std::size_t m = 0; m < kTaps; ++m) {
        if (m != j) w *= (s - node[m]) / (node[j] - node[m]);
      }
      st.weight[j] = w;
      st.index[j] = static_cast<std::size_t>(
          std::clamp(first + static_cast<long>(j), 0L, last));
    }
  }
  return out;
}

Array3 resample(const Array3& source, const ResizeSpec& spec) {
  check_spec(source, spec);
  const std::size_t sh = source.height();
  const std::size_t sw = source.width();
  const std::size_t ch = source.channels();
  const std::size_t th = spec.target_height;
  const std::size_t tw = spec.target_width;

  const bool quartic = spec.kind == ResizeKind::Biquartic;
  const auto cols = quartic ? biquartic_stencils(sw, tw) : nearest_stencils(sw, tw);
  const auto rows = quartic ? biquartic_stencils(sh, th) : nearest_stencils(sh, th);

  // Horizontal pass: sh x tw x ch.
  Array3 tmp(sh, tw, ch);
  for (std::size_t y = 0; y < sh; ++y) {
    for (std::size_t x = 0; x < tw; ++x) {
      const Stencil& st = cols[x];
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kTaps; ++j) {
          acc += st.weight[j] * source.at(y, st.index[j], c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  // Vertical pass.
  Array3 out(th, tw, ch);
  for (std::size_t y = 0; y < th; ++y) {
    const Stencil& st = rows[y];
    for (std::size_t x = 0; x < tw; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kTaps; ++j) {
          acc += st.weight[j] * tmp.at(st.index[j], x, c);
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

FeatureMap resize_biquartic(const FeatureMap& map, const ResizeSpec& spec) {
  if (spec.kind != ResizeKind::Biquartic) {
    fail(ErrorCode::InvalidConfig, "resize_biquartic called with another kernel");
  }
  Array3 out = resample(map, spec);
  return FeatureMap(out.height(), out.width(), out.channels(),
                    std::vector<double>(out.data().begin(), out.data().end()));
}

namespace {

Array3 mask_as_array(const Mask& mask) {
  return Array3(mask.rows(), mask.cols(), 1,
                std::vector<double>(mask.data().begin(), mask.data().end()));
}

}  // namespace

Mask resize_mask(const Mask& mask, const ResizeSpec& spec, double threshold) {
  for (double v : mask.data()) {
    if (v != 0.0 && v != 1.0) {
      fail(ErrorCode::NonBinaryMask, "resize_mask input is not binary");
    }
  }
  const Array3 resampled = resample(mask_as_array(mask), spec);
  Mask out(spec.target_height, spec.target_width, 0.0);
  auto dst = out.data();
  const auto src = resampled.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = src[i] >= threshold ? 1.0 : 0.0;
  }
  return out;
}

RegionMaskSet resize_mask_set(const RegionMaskSet& masks, const ResizeSpec& spec,
                              double threshold) {
  validate_masks_binary(masks);
  std::array<Array3, kNumRegions> resampled;
  for (RegionId r : kAllRegions) {
    resampled[index_of(r)] = resample(mask_as_array(masks[r]), spec);
  }
  RegionMaskSet out(spec.target_height, spec.target_width);
  const std::size_t cells = spec.target_height * spec.target_width;
  for (std::size_t i = 0; i < cells; ++i) {
    std::size_t best = kNumRegions;
    double best_value = threshold;
    for (std::size_t k = 0; k < kNumRegions; ++k) {
      const double v = resampled[k].data()[i];
      if (v >= threshold && (best == kNumRegions || v > best_value)) {
        best = k;
        best_value = v;
      }
    }
    if (best != kNumRegions) out[kAllRegions[best]].data()[i] = 1.0;
  }
  return out;
}

}  // namespace reggap
