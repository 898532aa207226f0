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

#ifndef REGGAP_IMAGE_IO_HPP
#define REGGAP_IMAGE_IO_HPP

#include <filesystem>

#include "reggap/types.hpp"

namespace reggap {

/// Decodes any format OpenCV reads. Colour images come back as RGB,
/// alpha is dropped, and intensities are divided by the type maximum
/// (255 or 65535).
Image read_image(const std::filesystem::path& path);

/// Writes an RGB or single-channel image as PNG with 8 or 16 bits per
/// sample. Values are clamped to [0, 1] and rounded.
void write_image_png(const std::filesystem::path& path, const Image& image,
                     int bit_depth = 8);

/// Photo resize for model inputs: area averaging when shrinking, bicubic
/// when enlarging, an exact copy when the size already matches.
Image resize_image(const Image& image, std::size_t height, std::size_t width);

/// Reads an 8-bit single-channel `.labels.png` (0 background, 1..8 regions).
LabelMap read_label_png(const std::filesystem::path& path);

/// Writes a canonical label map; throws UnknownLabel on values outside 0..8.
void write_label_png(const std::filesystem::path& path, const LabelMap& map);

}  // namespace reggap

#endif  // REGGAP_IMAGE_IO_HPP
