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

#ifndef REGGAP_SYNTHETIC_HPP
#define REGGAP_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "reggap/dataset.hpp"
#include "reggap/types.hpp"

namespace reggap {

struct SyntheticSpec {
  std::size_t n = 256;
  std::size_t image_size = 32;
  RegionId signal_region = RegionId::Nose;
  double noise_std = 0.3;
  double bmi_low = 15.0;
  double bmi_high = 45.0;
  std::uint64_t seed = 7;
  /// Splits are preassigned with a seeded random split at this fraction.
  double train_fraction = 0.78;
};

/// Throws InvalidConfig unless n >= 8, image_size >= 1, low < high,
/// noise_std >= 0 and the train fraction lies in (0, 1).
void validate_synthetic_spec(const SyntheticSpec& spec);

struct SyntheticDataset {
  Manifest manifest;
  std::vector<Image> images;
  std::vector<LabelMap> labels;
};

/// Fixed face layout, defined on a 32x32 grid and nearest-scaled to size.
LabelMap synthetic_layout(std::size_t image_size = 32);

/// Linear code between BMI and signal-region intensity in [0, 1].
double encode_bmi(double bmi, const SyntheticSpec& spec);
double decode_bmi(double intensity, const SyntheticSpec& spec);

/// Signal-region pixels carry encode_bmi(bmi) on every channel. All other
/// face pixels are a per-region base level plus N(0, noise_std) per pixel
/// and channel; background pixels additionally share one per-image
/// N(0, noise_std) offset. Values are clamped to [0, 1].
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes `manifest.csv`, `images/<id>.png` (16-bit RGB) and
/// `masks/<id>.labels.png` under `dir`.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace reggap

#endif  // REGGAP_SYNTHETIC_HPP
