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

#include "reggap/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/objdetect.hpp>

#include "csv.hpp"
#include "reggap/binary_io.hpp"
#include "reggap/error.hpp"
#include "reggap/image_io.hpp"
#include "reggap/interpolation.hpp"

namespace reggap {

std::string to_string(const FeatureDims& dims) {
  return std::to_string(dims.height) + "x" + std::to_string(dims.width) + "x" +
         std::to_string(dims.channels);
}

BackboneSpec facenet_spec() {
  return BackboneSpec{"facenet", 160, 160, 3, {3, 3, 1792}, true, {}};
}

BackboneSpec vggface_spec() {
  return BackboneSpec{"vggface", 224, 224, 3, {14, 14, 512}, false, {}};
}

BackboneSpec identity_spec() {
  return BackboneSpec{"identity", 32, 32, 3, {32, 32, 3}, false, {}};
}

BackboneSpec backbone_spec(std::string_view name) {
  if (name == "facenet") return facenet_spec();
  if (name == "vggface") return vggface_spec();
  if (name == "identity") return identity_spec();
  fail(ErrorCode::InvalidConfig, "unknown backbone '" + std::string(name) +
                                     "' (expected facenet, vggface or identity)");
}

// ---------------------------------------------------------------------------

std::vector<FaceBox> FullFrameDetector::detect(const Image& image) {
  return {FaceBox{0, 0, image.width(), image.height(), 1.0}};
}

struct YuNetDetector::Impl {
  cv::Ptr<cv::FaceDetectorYN> net;
};

YuNetDetector::YuNetDetector(const std::filesystem::path& model, float score_threshold)
    : impl_(std::make_unique<Impl>()) {
  if (!std::filesystem::exists(model)) {
    fail(ErrorCode::ModelLoadFailure, "detector model " + model.string() + " not found");
  }
  try {
    impl_->net = cv::FaceDetectorYN::create(model.string(), "", cv::Size(320, 320),
                                            score_threshold);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::ModelLoadFailure,
         "cannot load detector " + model.string() + ": " + e.what());
  }
  if (!impl_->net) fail(ErrorCode::ModelLoadFailure, "cannot load detector");
}

YuNetDetector::~YuNetDetector() = default;

std::vector<FaceBox> YuNetDetector::detect(const Image& image) {
  const int h = static_cast<int>(image.height());
  const int w = static_cast<int>(image.width());
  cv::Mat bgr(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t src = image.channels() == 3 ? static_cast<std::size_t>(2 - c) : 0;
        row[x * 3 + c] = static_cast<std::uint8_t>(std::lround(
            std::clamp(image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), src),
                       0.0, 1.0) *
            255.0));
      }
    }
  }
  cv::Mat faces;
  try {
    impl_->net->setInputSize(cv::Size(w, h));
    impl_->net->detect(bgr, faces);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::DetectorFailure, std::string("detector failed: ") + e.what());
  }
  std::vector<FaceBox> boxes;
  for (int i = 0; i < faces.rows; ++i) {
    const float* f = faces.ptr<float>(i);
    const double x0 = std::clamp(static_cast<double>(f[0]), 0.0, static_cast<double>(w));
    const double y0 = std::clamp(static_cast<double>(f[1]), 0.0, static_cast<double>(h));
    const double x1 = std::clamp(static_cast<double>(f[0] + f[2]), 0.0, static_cast<double>(w));
    const double y1 = std::clamp(static_cast<double>(f[1] + f[3]), 0.0, static_cast<double>(h));
    const auto bx = static_cast<std::size_t>(std::floor(x0));
    const auto by = static_cast<std::size_t>(std::floor(y0));
    const auto bw = static_cast<std::size_t>(std::ceil(x1)) - bx;
    const auto bh = static_cast<std::size_t>(std::ceil(y1)) - by;
    if (bw == 0 || bh == 0) continue;
    boxes.push_back(FaceBox{bx, by, bw, bh, std::clamp(static_cast<double>(f[14]), 0.0, 1.0)});
  }
  return boxes;
}

std::map<std::string, std::vector<FaceBox>> load_box_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open box file " + path.string());
  std::map<std::string, std::vector<FaceBox>> boxes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6) {
      fail(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(line_no) +
                                        ": expected 6 fields");
    }
    FaceBox box;
    try {
      box.x = std::stoul(fields[1]);
      box.y = std::stoul(fields[2]);
      box.width = std::stoul(fields[3]);
      box.height = std::stoul(fields[4]);
      box.confidence = std::stod(fields[5]);
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedRow,
           path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    const std::string key = detail::trim(fields[0]);
    boxes[key].push_back(box);
    const std::string name = std::filesystem::path(key).filename().string();
    if (name != key) boxes[name].push_back(box);
  }
  return boxes;
}

const FaceBox& select_best_box(std::span<const FaceBox> boxes) {
  if (boxes.empty()) fail(ErrorCode::NoFaceFound, "detector returned no faces");
  const FaceBox* best = &boxes.front();
  for (const FaceBox& b : boxes.subspan(1)) {
    if (b.confidence > best->confidence ||
        (b.confidence == best->confidence && b.area() > best->area())) {
      best = &b;
    }
  }
  return *best;
}

Detection detect_face(const Image& image, FaceDetector& detector,
                      const BackboneSpec& spec) {
  if (image.height() == 0 || image.width() == 0 || image.channels() == 0) {
    fail(ErrorCode::EmptyDimension, "cannot detect faces in an empty image");
  }
  std::vector<FaceBox> boxes;
  try {
    boxes = detector.detect(image);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoFaceFound || e.code() == ErrorCode::DetectorFailure) {
      throw;
    }
    fail(ErrorCode::DetectorFailure, e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::DetectorFailure, e.what());
  }
  const FaceBox box = select_best_box(boxes);
  if (box.width == 0 || box.height == 0 || box.x + box.width > image.width() ||
      box.y + box.height > image.height() || !(box.confidence >= 0.0 && box.confidence <= 1.0)) {
    fail(ErrorCode::DetectorFailure, "detector box lies outside the image");
  }
  Image crop(box.height, box.width, image.channels());
  for (std::size_t y = 0; y < box.height; ++y) {
    for (std::size_t x = 0; x < box.width; ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) {
        crop.at(y, x, c) = image.at(box.y + y, box.x + x, c);
      }
    }
  }
  return Detection{box, resize_image(crop, spec.input_height, spec.input_width)};
}

// ---------------------------------------------------------------------------

InputPreprocessing default_preprocessing(std::string_view backbone) {
  InputPreprocessing p;
  if (backbone == "facenet") {
    p.scale = 255.0;
    p.mean = {127.5, 127.5, 127.5};
    p.stddev = {128.0, 128.0, 128.0};
  } else if (backbone == "vggface") {
    p.scale = 255.0;
    p.mean = {93.5940, 104.7624, 129.1863};
    p.bgr = true;
  }
  return p;
}

InputPreprocessing load_preprocessing(const std::filesystem::path& model,
                                      std::string_view backbone) {
  InputPreprocessing p = default_preprocessing(backbone);
  auto sidecar = model;
  sidecar += ".json";
  if (!std::filesystem::exists(sidecar)) return p;
  try {
    const auto doc = nlohmann::json::parse(read_text_file(sidecar));
    if (doc.contains("scale")) p.scale = doc.at("scale").get<double>();
    if (doc.contains("mean")) p.mean = doc.at("mean").get<std::array<double, 3>>();
    if (doc.contains("std")) p.stddev = doc.at("std").get<std::array<double, 3>>();
    if (doc.contains("bgr")) p.bgr = doc.at("bgr").get<bool>();
    if (doc.contains("output")) p.output_layer = doc.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ModelLoadFailure,
         "bad model manifest " + sidecar.string() + ": " + e.what());
  }
  return p;
}

struct OnnxExtractor::Impl {
  cv::dnn::Net net;
};

OnnxExtractor::OnnxExtractor(const std::filesystem::path& model,
                             InputPreprocessing preprocessing)
    : impl_(std::make_unique<Impl>()), preprocessing_(std::move(preprocessing)) {
  if (model.empty() || !std::filesystem::exists(model)) {
    fail(ErrorCode::ModelLoadFailure, "backbone model '" + model.string() + "' not found");
  }
  try {
    impl_->net = cv::dnn::readNet(model.string());
  } catch (const cv::Exception& e) {
    fail(ErrorCode::ModelLoadFailure,
         "cannot load backbone " + model.string() + ": " + e.what());
  }
  if (impl_->net.empty()) {
    fail(ErrorCode::ModelLoadFailure, "backbone " + model.string() + " is empty");
  }
}

OnnxExtractor::~OnnxExtractor() = default;

FeatureMap OnnxExtractor::extract(const Image& input) {
  const int h = static_cast<int>(input.height());
  const int w = static_cast<int>(input.width());
  const int ch = static_cast<int>(input.channels());
  const int sizes[] = {1, ch, h, w};
  cv::Mat blob(4, sizes, CV_32F);
  auto* dst = blob.ptr<float>();
  const std::size_t plane = input.cells();
  for (std::size_t y = 0; y < input.height(); ++y) {
    for (std::size_t x = 0; x < input.width(); ++x) {
      for (std::size_t c = 0; c < input.channels(); ++c) {
        const std::size_t src_c =
            preprocessing_.bgr && ch == 3 ? 2 - c : c;
        const std::size_t k = std::min<std::size_t>(c, 2);
        const double v = (input.at(y, x, src_c) * preprocessing_.scale -
                          preprocessing_.mean[k]) /
                         preprocessing_.stddev[k];
        dst[c * plane + y * input.width() + x] = static_cast<float>(v);
      }
    }
  }
  cv::Mat out;
  try {
    impl_->net.setInput(blob);
    out = preprocessing_.output_layer.empty()
              ? impl_->net.forward()
              : impl_->net.forward(preprocessing_.output_layer);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::ModelLoadFailure, std::string("inference failed: ") + e.what());
  }
  if (out.dims != 4 || out.size[0] != 1) {
    fail(ErrorCode::ShapeContractViolation, "backbone output is not a 1xCxHxW tensor");
  }
  const auto oc = static_cast<std::size_t>(out.size[1]);
  const auto oh = static_cast<std::size_t>(out.size[2]);
  const auto ow = static_cast<std::size_t>(out.size[3]);
  FeatureMap map(oh, ow, oc);
  const auto* src = out.ptr<float>();
  for (std::size_t c = 0; c < oc; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        map.at(y, x, c) = src[(c * oh + y) * ow + x];
      }
    }
  }
  return map;
}

std::unique_ptr<FeatureExtractor> make_extractor(const BackboneSpec& spec) {
  if (spec.name == "identity") return std::make_unique<IdentityExtractor>();
  return std::make_unique<OnnxExtractor>(spec.model_ref,
                                         load_preprocessing(spec.model_ref, spec.name));
}

FeatureMap extract_features(const Image& input, const BackboneSpec& spec,
                            FeatureExtractor& extractor) {
  if (input.height() != spec.input_height || input.width() != spec.input_width ||
      input.channels() != spec.input_channels) {
    fail(ErrorCode::DimensionMismatch,
         spec.name + " expects " + std::to_string(spec.input_height) + "x" +
             std::to_string(spec.input_width) + "x" +
             std::to_string(spec.input_channels) + " input, got " +
             std::to_string(input.height()) + "x" + std::to_string(input.width()) +
             "x" + std::to_string(input.channels()));
  }
  FeatureMap map = extractor.extract(input);
  const FeatureDims got{map.height(), map.width(), map.channels()};
  if (!(got == spec.raw_feature_dims)) {
    fail(ErrorCode::ShapeContractViolation,
         spec.name + " produced " + to_string(got) + " features, contract is " +
             to_string(spec.raw_feature_dims));
  }
  validate_feature_map(map);
  return map;
}

FeatureMap aligned_features(const FeatureMap& raw) {
  validate_feature_map(raw);
  if (raw.height() == kAlignedGrid && raw.width() == kAlignedGrid) return raw;
  return resize_biquartic(raw, ResizeSpec{kAlignedGrid, kAlignedGrid, ResizeKind::Biquartic});
}

// ---------------------------------------------------------------------------

void write_feature_file(const std::filesystem::path& path, const FeatureMap& map) {
  ByteWriter w;
  w.put_bytes("RGF1");
  w.put_u32(static_cast<std::uint32_t>(map.height()));
  w.put_u32(static_cast<std::uint32_t>(map.width()));
  w.put_u32(static_cast<std::uint32_t>(map.channels()));
  for (double v : map.data()) w.put_f32(static_cast<float>(v));
  write_file_bytes(path, w.bytes());
}

FeatureMap read_feature_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  if (r.get_bytes(4) != "RGF1") {
    fail(ErrorCode::CacheIntegrity, path.string() + " is not a feature file");
  }
  const std::size_t h = r.get_u32();
  const std::size_t w = r.get_u32();
  const std::size_t c = r.get_u32();
  if (r.remaining() != h * w * c * 4) {
    fail(ErrorCode::CacheIntegrity, path.string() + " has the wrong payload size");
  }
  std::vector<double> values(h * w * c);
  for (double& v : values) v = r.get_f32();
  return FeatureMap(h, w, c, std::move(values));
}

}  // namespace reggap
