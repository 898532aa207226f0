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

#include "reggap/segmentation.hpp"

#include <algorithm>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "csv.hpp"
#include "reggap/binary_io.hpp"
#include "reggap/error.hpp"

namespace reggap {
using detail::trim;

const Vocabulary& celebamask_vocabulary() {
  static const Vocabulary vocab = {
      {0, FaceLabel::Background}, {1, FaceLabel::Skin},
      {2, FaceLabel::Eyebrow},    {3, FaceLabel::Eyebrow},
      {4, FaceLabel::Eyes},       {5, FaceLabel::Eyes},
      {6, FaceLabel::Background}, {7, FaceLabel::Ear},
      {8, FaceLabel::Ear},        {9, FaceLabel::Ear},
      {10, FaceLabel::Nose},      {11, FaceLabel::Lips},
      {12, FaceLabel::Lips},      {13, FaceLabel::Lips},
      {14, FaceLabel::Neck},      {15, FaceLabel::Neck},
      {16, FaceLabel::Background}, {17, FaceLabel::Hair},
      {18, FaceLabel::Background},
  };
  return vocab;
}

Vocabulary parse_vocabulary(std::string_view text) {
  Vocabulary vocab;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto arrow = body.find("->");
    if (arrow == std::string::npos) {
      fail(ErrorCode::MalformedRow,
           "vocabulary line " + std::to_string(line_no) + ": expected 'N -> region'");
    }
    const std::string lhs = trim(std::string_view(body).substr(0, arrow));
    const std::string rhs = trim(std::string_view(body).substr(arrow + 2));
    int source = 0;
    try {
      std::size_t used = 0;
      source = std::stoi(lhs, &used);
      if (used != lhs.size()) throw std::invalid_argument(lhs);
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedRow, "vocabulary line " + std::to_string(line_no) +
                                        ": bad source label '" + lhs + "'");
    }
    const auto label = label_from_name(rhs);
    if (!label) {
      fail(ErrorCode::MalformedRow, "vocabulary line " + std::to_string(line_no) +
                                        ": unknown region '" + rhs + "'");
    }
    vocab[source] = *label;
  }
  return vocab;
}

Vocabulary load_vocabulary_file(const std::filesystem::path& path) {
  return parse_vocabulary(read_text_file(path));
}

LabelMap collapse_labels(const LabelMap& raw, const Vocabulary& vocabulary) {
  LabelMap out = LabelMap::canonical(raw.height(), raw.width());
  const auto src = raw.labels.data();
  auto dst = out.labels.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto it = vocabulary.find(src[i]);
    if (it == vocabulary.end()) {
      fail(ErrorCode::UnknownLabel, "source label " + std::to_string(src[i]) +
                                        " is not in the vocabulary");
    }
    dst[i] = static_cast<int>(it->second);
  }
  return out;
}

RegionMaskSet label_map_to_masks(const LabelMap& canonical) {
  RegionMaskSet masks(canonical.height(), canonical.width());
  const auto labels = canonical.labels.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = canonical.palette.find(labels[i]);
    if (it == canonical.palette.end()) {
      fail(ErrorCode::UnknownLabel,
           "label " + std::to_string(labels[i]) + " is not in the palette");
    }
    if (const auto region = to_region(it->second)) {
      masks[*region].data()[i] = 1.0;
    }
  }
  return masks;
}

LabelMap masks_to_label_map(const RegionMaskSet& masks) {
  LabelMap out = LabelMap::canonical(masks.height(), masks.width());
  auto dst = out.labels.data();
  for (RegionId r : kAllRegions) {
    const auto m = masks[r].data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (m[i] == 1.0 && dst[i] == 0) dst[i] = static_cast<int>(to_label(r));
    }
  }
  return out;
}

RegionMaskSet parse_face(const Image& face, FaceParser& parser) {
  LabelMap raw;
  try {
    raw = parser.parse(face);
  } catch (const Error& e) {
    fail(ErrorCode::ParserFailure, std::string("parser raised ") + e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::ParserFailure, std::string("parser raised ") + e.what());
  }
  if (raw.height() != parser.working_height() ||
      raw.width() != parser.working_width()) {
    fail(ErrorCode::ParserFailure,
         "parser returned " + std::to_string(raw.height()) + "x" +
             std::to_string(raw.width()) + " labels, declared working resolution " +
             std::to_string(parser.working_height()) + "x" +
             std::to_string(parser.working_width()));
  }
  try {
    return label_map_to_masks(collapse_labels(raw, parser.vocabulary()));
  } catch (const Error& e) {
    fail(ErrorCode::ParserFailure, e.what());
  }
}

// ---------------------------------------------------------------------------

struct OnnxFaceParser::Impl {
  cv::dnn::Net net;
};

OnnxFaceParser::OnnxFaceParser(const std::filesystem::path& model,
                               OnnxParserOptions options)
    : impl_(std::make_unique<Impl>()), options_(std::move(options)) {
  if (!std::filesystem::exists(model)) {
    fail(ErrorCode::ModelLoadFailure, "parser model " + model.string() + " not found");
  }
  try {
    impl_->net = cv::dnn::readNet(model.string());
  } catch (const cv::Exception& e) {
    fail(ErrorCode::ModelLoadFailure,
         "cannot load parser model " + model.string() + ": " + e.what());
  }
  if (impl_->net.empty()) {
    fail(ErrorCode::ModelLoadFailure, "parser model " + model.string() + " is empty");
  }
}

OnnxFaceParser::~OnnxFaceParser() = default;

LabelMap OnnxFaceParser::parse(const Image& face) {
  if (face.channels() != 3) {
    fail(ErrorCode::ShapeMismatch, "face parser expects an RGB image");
  }
  const int h = static_cast<int>(options_.working_height);
  const int w = static_cast<int>(options_.working_width);

  cv::Mat rgb(static_cast<int>(face.height()), static_cast<int>(face.width()), CV_32FC3);
  for (std::size_t y = 0; y < face.height(); ++y) {
    auto* row = rgb.ptr<float>(static_cast<int>(y));
    for (std::size_t x = 0; x < face.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        row[x * 3 + c] = static_cast<float>((face.at(y, x, c) - options_.mean[c]) /
                                            options_.stddev[c]);
      }
    }
  }
  cv::Mat resized;
  cv::resize(rgb, resized, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
  cv::Mat blob = cv::dnn::blobFromImage(resized);

  cv::Mat logits;
  try {
    impl_->net.setInput(blob);
    logits = impl_->net.forward();
  } catch (const cv::Exception& e) {
    fail(ErrorCode::ParserFailure, std::string("inference failed: ") + e.what());
  }
  if (logits.dims != 4 || logits.size[0] != 1 || logits.size[2] != h ||
      logits.size[3] != w) {
    fail(ErrorCode::ParserFailure, "parser output is not 1xKx" +
                                       std::to_string(h) + "x" + std::to_string(w));
  }
  const int classes = logits.size[1];
  LabelMap out{Grid2<int>(options_.working_height, options_.working_width, 0), {}};
  for (int k = 0; k < classes; ++k) {
    if (auto it = options_.vocabulary.find(k); it != options_.vocabulary.end()) {
      out.palette[k] = it->second;
    }
  }
  const auto* data = logits.ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  auto labels = out.labels.data();
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    float best_value = data[i];
    for (int k = 1; k < classes; ++k) {
      const float v = data[static_cast<std::size_t>(k) * plane + i];
      if (v > best_value) {
        best = k;
        best_value = v;
      }
    }
    labels[i] = best;
  }
  return out;
}

}  // namespace reggap
