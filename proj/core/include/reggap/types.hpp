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

#ifndef REGGAP_TYPES_HPP
#define REGGAP_TYPES_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reggap/error.hpp"

namespace reggap {

// ---------------------------------------------------------------------------
// Region vocabulary
// ---------------------------------------------------------------------------

inline constexpr std::size_t kNumRegions = 8;

/// The eight canonical face regions. The numeric value is the canonical
/// index and is part of every on-disk format; never reorder.
enum class RegionId : std::uint8_t {
  Ear = 0,
  Eyes = 1,
  Eyebrow = 2,
  Hair = 3,
  Lips = 4,
  Neck = 5,
  Nose = 6,
  Skin = 7,
};

inline constexpr std::array<RegionId, kNumRegions> kAllRegions = {
    RegionId::Ear,  RegionId::Eyes, RegionId::Eyebrow, RegionId::Hair,
    RegionId::Lips, RegionId::Neck, RegionId::Nose,    RegionId::Skin};

constexpr std::size_t index_of(RegionId region) noexcept {
  return static_cast<std::size_t>(region);
}

std::string_view region_name(RegionId region) noexcept;
/// Case-insensitive lookup of "ear", "eyes", ... "skin".
std::optional<RegionId> region_from_name(std::string_view name) noexcept;

/// Value stored in a canonical label map: 0 is background, 1..8 are the
/// regions in canonical order (index + 1).
enum class FaceLabel : std::uint8_t {
  Background = 0,
  Ear,
  Eyes,
  Eyebrow,
  Hair,
  Lips,
  Neck,
  Nose,
  Skin,
};

inline constexpr int kNumFaceLabels = 9;

constexpr FaceLabel to_label(RegionId region) noexcept {
  return static_cast<FaceLabel>(index_of(region) + 1);
}

constexpr std::optional<RegionId> to_region(FaceLabel label) noexcept {
  if (label == FaceLabel::Background) return std::nullopt;
  return static_cast<RegionId>(static_cast<std::uint8_t>(label) - 1);
}

std::string_view label_name(FaceLabel label) noexcept;
/// Accepts any region name plus "background".
std::optional<FaceLabel> label_from_name(std::string_view name) noexcept;

// ---------------------------------------------------------------------------
// Dense arrays
// ---------------------------------------------------------------------------

/// Row-major rank-2 array.
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid2(std::size_t rows, std::size_t cols, std::vector<T> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool operator==(const Grid2&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Binary region mask; entries are 0.0 or 1.0 once validated.
using Mask = Grid2<double>;

/// Dense height x width x channels array, channel-fastest (HWC) layout.
class Array3 {
 public:
  Array3() = default;
  Array3(std::size_t height, std::size_t width, std::size_t channels,
         double fill = 0.0);
  Array3(std::size_t height, std::size_t width, std::size_t channels,
         std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t cells() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Array3&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

/// Backbone activations.
class FeatureMap : public Array3 {
 public:
  using Array3::Array3;
};

/// Decoded image, intensities scaled to [0, 1].
class Image : public Array3 {
 public:
  using Array3::Array3;
};

FeatureMap to_feature_map(const Image& image);
Image to_image(const Array3& array);

// ---------------------------------------------------------------------------
// Masks and label maps
// ---------------------------------------------------------------------------

class RegionMaskSet {
 public:
  RegionMaskSet() = default;
  /// All eight masks zero (every pixel background).
  RegionMaskSet(std::size_t height, std::size_t width);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  Mask& operator[](RegionId region) { return masks_[index_of(region)]; }
  const Mask& operator[](RegionId region) const {
    return masks_[index_of(region)];
  }

  /// Number of mask-1 cells of a region.
  std::size_t support(RegionId region) const;

  bool operator==(const RegionMaskSet&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::array<Mask, kNumRegions> masks_;
};

using Palette = std::map<int, FaceLabel>;

struct LabelMap {
  Grid2<int> labels;
  Palette palette;

  std::size_t height() const noexcept { return labels.rows(); }
  std::size_t width() const noexcept { return labels.cols(); }

  /// Canonical map of the given size, all background, identity palette.
  static LabelMap canonical(std::size_t height, std::size_t width);
};

/// Palette mapping 0..8 onto FaceLabel values.
const Palette& canonical_palette();

// ---------------------------------------------------------------------------
// Embeddings and records
// ---------------------------------------------------------------------------

enum class PoolingKind : std::uint8_t { Gap = 0, RegGap = 1 };

std::string_view to_string(PoolingKind kind) noexcept;
std::optional<PoolingKind> pooling_kind_from_string(std::string_view s) noexcept;

struct Embedding {
  std::vector<double> values;
  PoolingKind kind = PoolingKind::Gap;
  std::string source_backbone;

  std::size_t channels() const noexcept { return values.size(); }
};

enum class Gender : std::uint8_t { Male = 1, Female = 2 };
enum class Split : std::uint8_t { Train, Test };

std::string_view to_string(Gender gender) noexcept;
std::string_view to_string(Split split) noexcept;
std::optional<Gender> gender_from_string(std::string_view s) noexcept;
std::optional<Split> split_from_string(std::string_view s) noexcept;

inline constexpr double kMinPlausibleBmi = 10.0;
inline constexpr double kMaxPlausibleBmi = 100.0;

constexpr bool is_plausible_bmi(double bmi) noexcept {
  return bmi > kMinPlausibleBmi && bmi < kMaxPlausibleBmi;
}

struct BmiRecord {
  std::string id;
  std::filesystem::path image_ref;
  double bmi = 0.0;
  std::optional<Gender> gender;
  std::optional<std::string> identity;
  std::optional<Split> split;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Throws EmptyDimension or NonFiniteValue; returns the argument otherwise.
const FeatureMap& validate_feature_map(const FeatureMap& map);

/// Throws ShapeMismatch, NonBinaryMask or OverlappingRegions.
const RegionMaskSet& validate_mask_set(const RegionMaskSet& masks);

/// Binary and shape checks only; overlapping regions are allowed.
void validate_masks_binary(const RegionMaskSet& masks);

const Embedding& validate_embedding(const Embedding& embedding);

// ---------------------------------------------------------------------------

template <typename T>
Grid2<T>::Grid2(std::size_t rows, std::size_t cols, std::vector<T> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorCode::ShapeMismatch, "grid values do not match rows x cols");
  }
}

}  // namespace reggap

#endif  // REGGAP_TYPES_HPP
