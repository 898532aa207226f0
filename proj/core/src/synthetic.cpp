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

#include "reggap/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "reggap/error.hpp"
#include "reggap/image_io.hpp"
#include "reggap/rng.hpp"

namespace reggap {
namespace {

constexpr std::size_t kLayoutGrid = 32;

struct Rect {
  std::size_t r0, r1, c0, c1;  // inclusive
  FaceLabel label;
};

// Painted in order; later rectangles overwrite earlier ones.
constexpr std::array<Rect, 11> kLayout{{
    {0, 6, 4, 27, FaceLabel::Hair},
    {7, 27, 6, 25, FaceLabel::Skin},
    {7, 10, 7, 14, FaceLabel::Eyebrow},
    {7, 10, 17, 24, FaceLabel::Eyebrow},
    {11, 14, 7, 14, FaceLabel::Eyes},
    {11, 14, 17, 24, FaceLabel::Eyes},
    {15, 22, 12, 19, FaceLabel::Nose},
    {23, 27, 9, 22, FaceLabel::Lips},
    {8, 21, 2, 5, FaceLabel::Ear},
    {8, 21, 26, 29, FaceLabel::Ear},
    {28, 31, 8, 23, FaceLabel::Neck},
}};

// Base intensity per label value (background first).
constexpr std::array<double, kNumFaceLabels> kBaseLevel{0.5, 0.55, 0.45, 0.4, 0.5,
                                                        0.5, 0.6, 0.5, 0.55};

std::string record_id(std::size_t i, std::size_t n) {
  const int width = n > 10000 ? static_cast<int>(std::to_string(n - 1).size()) : 4;
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%0*zu", width, i);
  return buf;
}

}  // namespace

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.n < 8) fail(ErrorCode::InvalidConfig, "synthetic n must be at least 8");
  if (spec.image_size == 0) fail(ErrorCode::InvalidConfig, "synthetic image_size must be positive");
  if (!(spec.bmi_low < spec.bmi_high)) {
    fail(ErrorCode::InvalidConfig, "synthetic bmi range needs low < high");
  }
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
    fail(ErrorCode::InvalidConfig, "synthetic noise_std must be finite and non-negative");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    fail(ErrorCode::InvalidConfig, "synthetic train_fraction must lie in (0, 1)");
  }
}

LabelMap synthetic_layout(std::size_t image_size) {
  Grid2<int> grid(kLayoutGrid, kLayoutGrid, 0);
  for (const auto& rect : kLayout) {
    for (std::size_t r = rect.r0; r <= rect.r1; ++r) {
      for (std::size_t c = rect.c0; c <= rect.c1; ++c) {
        grid.at(r, c) = static_cast<int>(rect.label);
      }
    }
  }
  LabelMap out = LabelMap::canonical(image_size, image_size);
  for (std::size_t y = 0; y < image_size; ++y) {
    for (std::size_t x = 0; x < image_size; ++x) {
      out.labels.at(y, x) = grid.at(y * kLayoutGrid / image_size, x * kLayoutGrid / image_size);
    }
  }
  return out;
}

double encode_bmi(double bmi, const SyntheticSpec& spec) {
  return (bmi - spec.bmi_low) / (spec.bmi_high - spec.bmi_low);
}

double decode_bmi(double intensity, const SyntheticSpec& spec) {
  return spec.bmi_low + intensity * (spec.bmi_high - spec.bmi_low);
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  const std::size_t size = spec.image_size;
  const LabelMap layout = synthetic_layout(size);
  const int signal = static_cast<int>(to_label(spec.signal_region));

  SyntheticDataset out;
  out.manifest.name = "synthetic";
  out.images.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Rng rng(mix_seed(spec.seed, i));
    BmiRecord rec;
    rec.id = record_id(i, spec.n);
    rec.image_ref = std::filesystem::path("images") / (rec.id + ".png");
    rec.bmi = rng.uniform(spec.bmi_low, spec.bmi_high);
    rec.gender = rng.below(2) == 0 ? Gender::Male : Gender::Female;
    const double clutter = spec.noise_std * rng.normal();
    const double code = encode_bmi(rec.bmi, spec);

    Image img(size, size, 3);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const int label = layout.labels.at(y, x);
        for (std::size_t c = 0; c < 3; ++c) {
          double v = code;
          if (label != signal) {
            v = kBaseLevel[static_cast<std::size_t>(label)] + spec.noise_std * rng.normal();
            if (label == 0) v += clutter;
          }
          img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
        }
      }
    }
    out.manifest.records.push_back(std::move(rec));
    out.images.push_back(std::move(img));
    out.labels.push_back(layout);
  }
  out.manifest = random_split(std::move(out.manifest), spec.train_fraction, spec.seed);
  return out;
}

void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  for (std::size_t i = 0; i < data.manifest.records.size(); ++i) {
    const auto& rec = data.manifest.records[i];
    write_image_png(dir / rec.image_ref, data.images[i], 16);
    write_label_png(dir / "masks" / (rec.id + ".labels.png"), data.labels[i]);
  }
  write_manifest(dir / "manifest.csv", data.manifest);
}

}  // namespace reggap
