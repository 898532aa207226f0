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

#ifndef REGGAP_BACKBONE_HPP
#define REGGAP_BACKBONE_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reggap/types.hpp"

namespace reggap {

struct FeatureDims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  bool operator==(const FeatureDims&) const = default;
};

std::string to_string(const FeatureDims& dims);

/// Tensor contract of a frozen feature extractor.
struct BackboneSpec {
  std::string name;
  std::size_t input_height = 0;
  std::size_t input_width = 0;
  std::size_t input_channels = 0;
  FeatureDims raw_feature_dims;
  bool requires_detection = false;
  std::filesystem::path model_ref;
};

/// 160x160x3 detector crops -> last convolution block, 3x3x1792.
BackboneSpec facenet_spec();
/// 224x224x3 whole images (no detection) -> conv5_3, 14x14x512.
BackboneSpec vggface_spec();
/// 32x32x3 pass-through, for oracle and synthetic runs.
BackboneSpec identity_spec();

/// Looks up `facenet`, `vggface` or `identity`; throws InvalidConfig.
BackboneSpec backbone_spec(std::string_view name);

/// Side length of the common pooling grid.
inline constexpr std::size_t kAlignedGrid = 32;

// ---------------------------------------------------------------------------
// Face detection
// ---------------------------------------------------------------------------

struct FaceBox {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  double confidence = 0.0;

  std::size_t area() const noexcept { return width * height; }
  bool operator==(const FaceBox&) const = default;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  /// Every face found, in any order. An empty result means no face.
  virtual std::vector<FaceBox> detect(const Image& image) = 0;
};

/// Treats the whole frame as the face; for images that are already crops.
class FullFrameDetector final : public FaceDetector {
 public:
  std::vector<FaceBox> detect(const Image& image) override;
};

/// Returns a fixed list of boxes, e.g. detections computed offline.
class FixedBoxDetector final : public FaceDetector {
 public:
  explicit FixedBoxDetector(std::vector<FaceBox> boxes) : boxes_(std::move(boxes)) {}
  std::vector<FaceBox> detect(const Image&) override { return boxes_; }

 private:
  std::vector<FaceBox> boxes_;
};

/// OpenCV's YuNet detector (a frozen ONNX model). Boxes are clipped to the
/// frame.
class YuNetDetector final : public FaceDetector {
 public:
  explicit YuNetDetector(const std::filesystem::path& model,
                         float score_threshold = 0.6f);
  ~YuNetDetector() override;
  std::vector<FaceBox> detect(const Image& image) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Precomputed detections: CSV `image,x,y,width,height,confidence` with a
/// header row, keyed by the image path as written (and by its file name).
std::map<std::string, std::vector<FaceBox>> load_box_file(
    const std::filesystem::path& path);

/// Highest confidence wins; ties go to the larger box, then the first seen.
/// Throws NoFaceFound on an empty list.
const FaceBox& select_best_box(std::span<const FaceBox> boxes);

struct Detection {
  FaceBox box;
  Image crop;
};

/// Runs the detector, keeps the best box, crops without margin and resizes
/// the crop to the backbone's input size.
/// Throws NoFaceFound or DetectorFailure (including out-of-frame boxes).
Detection detect_face(const Image& image, FaceDetector& detector,
                      const BackboneSpec& spec);

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureMap extract(const Image& input) = 0;
};

class IdentityExtractor final : public FeatureExtractor {
 public:
  FeatureMap extract(const Image& input) override { return to_feature_map(input); }
};

/// Input normalisation of a frozen network: x' = (x * scale - mean) / std
/// per channel, applied in RGB or BGR channel order.
struct InputPreprocessing {
  double scale = 255.0;
  std::array<double, 3> mean = {0.0, 0.0, 0.0};
  std::array<double, 3> stddev = {1.0, 1.0, 1.0};
  bool bgr = false;
  /// Output blob to read; empty selects the network's default output.
  std::string output_layer;
};

/// Published preprocessing for the named backbone (facenet: fixed image
/// standardisation; vggface: BGR mean subtraction).
InputPreprocessing default_preprocessing(std::string_view backbone);

/// Reads `<model>.json` next to the model when present, else the defaults.
/// Keys: scale, mean, std, bgr, output.
InputPreprocessing load_preprocessing(const std::filesystem::path& model,
                                      std::string_view backbone);

/// Runs a frozen network through OpenCV's DNN module and returns the chosen
/// NCHW output as an HWC feature map.
class OnnxExtractor final : public FeatureExtractor {
 public:
  /// Throws ModelLoadFailure.
  OnnxExtractor(const std::filesystem::path& model, InputPreprocessing preprocessing);
  ~OnnxExtractor() override;
  FeatureMap extract(const Image& input) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  InputPreprocessing preprocessing_;
};

/// IdentityExtractor for the identity spec, otherwise an OnnxExtractor on
/// spec.model_ref.
std::unique_ptr<FeatureExtractor> make_extractor(const BackboneSpec& spec);

/// Checks the input shape, runs the extractor and enforces the output
/// contract: dimensions must equal raw_feature_dims exactly
/// (ShapeContractViolation otherwise) and values must be finite.
FeatureMap extract_features(const Image& input, const BackboneSpec& spec,
                            FeatureExtractor& extractor);

/// Bi-quartic resize onto the 32x32 pooling grid; returns the input as-is
/// when it is already 32x32.
FeatureMap aligned_features(const FeatureMap& raw);

// ---------------------------------------------------------------------------
// Feature cache (`<record-id>.feat`)
// ---------------------------------------------------------------------------

/// Header: "RGF1", then u32 height, width, channels (little endian), then
/// float32 LE values in HWC order.
void write_feature_file(const std::filesystem::path& path, const FeatureMap& map);
FeatureMap read_feature_file(const std::filesystem::path& path);

}  // namespace reggap

#endif  // REGGAP_BACKBONE_HPP
