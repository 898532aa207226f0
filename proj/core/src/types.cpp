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

#include "reggap/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "reggap/error.hpp"

namespace reggap {
namespace {

constexpr std::array<std::string_view, kNumRegions> kRegionNames = {
    "ear", "eyes", "eyebrow", "hair", "lips", "neck", "nose", "skin"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string shape_string(std::size_t h, std::size_t w, std::size_t c) {
  return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

}  // namespace

std::string_view region_name(RegionId region) noexcept {
  return kRegionNames[index_of(region)];
}

std::optional<RegionId> region_from_name(std::string_view name) noexcept {
  for (RegionId r : kAllRegions) {
    if (iequals(name, region_name(r))) return r;
  }
  return std::nullopt;
}

std::string_view label_name(FaceLabel label) noexcept {
  if (auto r = to_region(label)) return region_name(*r);
  return "background";
}

std::optional<FaceLabel> label_from_name(std::string_view name) noexcept {
  if (iequals(name, "background")) return FaceLabel::Background;
  if (auto r = region_from_name(name)) return to_label(*r);
  return std::nullopt;
}

Array3::Array3(std::size_t height, std::size_t width, std::size_t channels,
               double fill)
    : height_(height),
      width_(width),
      channels_(channels),
      data_(height * width * channels, fill) {}

Array3::Array3(std::size_t height, std::size_t width, std::size_t channels,
               std::vector<double> values)
    : height_(height),
      width_(width),
      channels_(channels),
      data_(std::move(values)) {
  if (data_.size() != height_ * width_ * channels_) {
    fail(ErrorCode::ShapeMismatch,
         "array of " + std::to_string(data_.size()) +
             " values cannot have shape " +
             shape_string(height_, width_, channels_));
  }
}

FeatureMap to_feature_map(const Image& image) {
  return FeatureMap(image.height(), image.width(), image.channels(),
                    std::vector<double>(image.data().begin(),
                                        image.data().end()));
}

Image to_image(const Array3& array) {
  return Image(array.height(), array.width(), array.channels(),
               std::vector<double>(array.data().begin(), array.data().end()));
}

RegionMaskSet::RegionMaskSet(std::size_t height, std::size_t width)
    : height_(height), width_(width) {
  for (auto& m : masks_) m = Mask(height, width, 0.0);
}

std::size_t RegionMaskSet::support(RegionId region) const {
  const auto values = (*this)[region].data();
  return static_cast<std::size_t>(
      std::count(values.begin(), values.end(), 1.0));
}

LabelMap LabelMap::canonical(std::size_t height, std::size_t width) {
  return LabelMap{Grid2<int>(height, width, 0), canonical_palette()};
}

const Palette& canonical_palette() {
  static const Palette palette = [] {
    Palette p;
    for (int v = 0; v < kNumFaceLabels; ++v) {
      p.emplace(v, static_cast<FaceLabel>(v));
    }
    return p;
  }();
  return palette;
}

std::string_view to_string(PoolingKind kind) noexcept {
  return kind == PoolingKind::Gap ? "gap" : "reg_gap";
}

std::optional<PoolingKind> pooling_kind_from_string(std::string_view s) noexcept {
  if (iequals(s, "gap")) return PoolingKind::Gap;
  if (iequals(s, "reg_gap") || iequals(s, "reggap") || iequals(s, "reg-gap")) {
    return PoolingKind::RegGap;
  }
  return std::nullopt;
}

std::string_view to_string(Gender gender) noexcept {
  return gender == Gender::Male ? "male" : "female";
}

std::string_view to_string(Split split) noexcept {
  return split == Split::Train ? "train" : "test";
}

std::optional<Gender> gender_from_string(std::string_view s) noexcept {
  if (iequals(s, "male") || iequals(s, "m")) return Gender::Male;
  if (iequals(s, "female") || iequals(s, "f")) return Gender::Female;
  return std::nullopt;
}

std::optional<Split> split_from_string(std::string_view s) noexcept {
  if (iequals(s, "train")) return Split::Train;
  if (iequals(s, "test")) return Split::Test;
  return std::nullopt;
}

const FeatureMap& validate_feature_map(const FeatureMap& map) {
  if (map.height() == 0 || map.width() == 0 || map.channels() == 0) {
    fail(ErrorCode::EmptyDimension,
         "feature map has shape " +
             shape_string(map.height(), map.width(), map.channels()));
  }
  const auto values = map.data();
  const auto bad = std::find_if(values.begin(), values.end(),
                                [](double v) { return !std::isfinite(v); });
  if (bad != values.end()) {
    const auto flat = static_cast<std::size_t>(bad - values.begin());
    const auto cell = flat / map.channels();
    fail(ErrorCode::NonFiniteValue,
         "feature map entry at (" + std::to_string(cell / map.width()) + ", " +
             std::to_string(cell % map.width()) + ", " +
             std::to_string(flat % map.channels()) + ") is not finite");
  }
  return map;
}

void validate_masks_binary(const RegionMaskSet& masks) {
  if (masks.height() == 0 || masks.width() == 0) {
    fail(ErrorCode::EmptyDimension, "mask set has an empty dimension");
  }
  for (RegionId r : kAllRegions) {
    const Mask& m = masks[r];
    if (m.rows() != masks.height() || m.cols() != masks.width()) {
      fail(ErrorCode::ShapeMismatch,
           std::string(region_name(r)) + " mask is " + std::to_string(m.rows()) +
               "x" + std::to_string(m.cols()) + ", expected " +
               std::to_string(masks.height()) + "x" +
               std::to_string(masks.width()));
    }
    for (double v : m.data()) {
      if (v != 0.0 && v != 1.0) {
        fail(ErrorCode::NonBinaryMask, std::string(region_name(r)) +
                                           " mask contains value " +
                                           std::to_string(v));
      }
    }
  }
}

const RegionMaskSet& validate_mask_set(const RegionMaskSet& masks) {
  validate_masks_binary(masks);
  for (std::size_t y = 0; y < masks.height(); ++y) {
    for (std::size_t x = 0; x < masks.width(); ++x) {
      int owners = 0;
      for (RegionId r : kAllRegions) owners += masks[r].at(y, x) == 1.0;
      if (owners > 1) {
        fail(ErrorCode::OverlappingRegions,
             "pixel (" + std::to_string(y) + ", " + std::to_string(x) +
                 ") belongs to " + std::to_string(owners) + " regions");
      }
    }
  }
  return masks;
}

const Embedding& validate_embedding(const Embedding& embedding) {
  if (embedding.values.empty()) {
    fail(ErrorCode::EmptyDimension, "embedding has no channels");
  }
  for (double v : embedding.values) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::NonFiniteValue, "embedding contains a non-finite value");
    }
  }
  return embedding;
}

}  // namespace reggap
