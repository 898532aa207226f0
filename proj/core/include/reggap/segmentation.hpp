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

#ifndef REGGAP_SEGMENTATION_HPP
#define REGGAP_SEGMENTATION_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "reggap/types.hpp"

namespace reggap {

/// Maps a parser's source label integers onto canonical labels.
using Vocabulary = std::map<int, FaceLabel>;

/// The 19-class CelebAMask-HQ label set in the index order used by the
/// common BiSeNet face-parsing checkpoints:
/// 0 background, 1 skin, 2 l_brow, 3 r_brow, 4 l_eye, 5 r_eye, 6 eye_g,
/// 7 l_ear, 8 r_ear, 9 ear_r, 10 nose, 11 mouth, 12 u_lip, 13 l_lip,
/// 14 neck, 15 neck_l, 16 cloth, 17 hair, 18 hat.
/// Left/right parts merge; glasses, hat and cloth are background.
const Vocabulary& celebamask_vocabulary();

/// Parses `source_label_int -> region_name` lines. Blank lines and lines
/// starting with '#' are ignored.
Vocabulary parse_vocabulary(std::string_view text);
Vocabulary load_vocabulary_file(const std::filesystem::path& path);

/// Rewrites raw parser labels as canonical labels (0 background, 1..8).
LabelMap collapse_labels(const LabelMap& raw, const Vocabulary& vocabulary);

/// One binary mask per region; mask[r](p) == 1 iff the pixel is labelled r.
RegionMaskSet label_map_to_masks(const LabelMap& canonical);

/// Inverse of label_map_to_masks for disjoint mask sets.
LabelMap masks_to_label_map(const RegionMaskSet& masks);

/// A face parser produces a raw label map at its working resolution.
///
/// Implementations may hold per-instance state; share one across threads
/// only if it synchronises internally.
class FaceParser {
 public:
  virtual ~FaceParser() = default;

  virtual LabelMap parse(const Image& face) = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::size_t working_height() const = 0;
  virtual std::size_t working_width() const = 0;
};

/// parse -> collapse_labels -> label_map_to_masks. Any failure surfaces as
/// ParserFailure with the underlying message attached.
RegionMaskSet parse_face(const Image& face, FaceParser& parser);

struct OnnxParserOptions {
  std::size_t working_height = 512;
  std::size_t working_width = 512;
  /// Per-channel RGB normalisation applied to [0,1] intensities.
  std::array<double, 3> mean = {0.485, 0.456, 0.406};
  std::array<double, 3> stddev = {0.229, 0.224, 0.225};
  Vocabulary vocabulary = celebamask_vocabulary();
};

/// Runs a frozen segmentation network (NCHW logits) through OpenCV's DNN
/// module and takes the per-pixel argmax.
class OnnxFaceParser final : public FaceParser {
 public:
  /// Throws ModelLoadFailure if the model cannot be read.
  OnnxFaceParser(const std::filesystem::path& model,
                 OnnxParserOptions options = {});
  ~OnnxFaceParser() override;

  LabelMap parse(const Image& face) override;
  const Vocabulary& vocabulary() const override { return options_.vocabulary; }
  std::size_t working_height() const override { return options_.working_height; }
  std::size_t working_width() const override { return options_.working_width; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  OnnxParserOptions options_;
};

}  // namespace reggap

#endif  // REGGAP_SEGMENTATION_HPP
