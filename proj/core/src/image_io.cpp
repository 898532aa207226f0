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

#include "reggap/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <system_error>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "reggap/error.hpp"

namespace reggap {
namespace {

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
}

void write_png(const std::filesystem::path& path, const cv::Mat& mat) {
  ensure_parent(path);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::IoFailure, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) fail(ErrorCode::IoFailure, "cannot write " + path.string());
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::MissingImage, path.string() + " does not exist");
  }
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) fail(ErrorCode::IoFailure, "cannot decode " + path.string());

  double scale = 1.0;
  switch (mat.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default:
      fail(ErrorCode::IoFailure, "unsupported sample type in " + path.string());
  }
  if (mat.channels() == 4) {
    cv::cvtColor(mat, mat, cv::COLOR_BGRA2RGB);
  } else if (mat.channels() == 3) {
    cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
  } else if (mat.channels() != 1) {
    fail(ErrorCode::IoFailure, "unsupported channel count in " + path.string());
  }
  cv::Mat real;
  mat.convertTo(real, CV_64F, scale);

  const auto h = static_cast<std::size_t>(real.rows);
  const auto w = static_cast<std::size_t>(real.cols);
  const auto c = static_cast<std::size_t>(real.channels());
  std::vector<double> values(h * w * c);
  for (std::size_t y = 0; y < h; ++y) {
    const double* row = real.ptr<double>(static_cast<int>(y));
    std::copy(row, row + w * c, values.begin() + static_cast<long>(y * w * c));
  }
  return Image(h, w, c, std::move(values));
}

void write_image_png(const std::filesystem::path& path, const Image& image,
                     int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    fail(ErrorCode::InvalidConfig, "PNG bit depth must be 8 or 16");
  }
  if (image.channels() != 1 && image.channels() != 3) {
    fail(ErrorCode::ShapeMismatch, "PNG export needs 1 or 3 channels");
  }
  const double max_value = bit_depth == 8 ? 255.0 : 65535.0;
  const int type = bit_depth == 8 ? CV_MAKETYPE(CV_8U, static_cast<int>(image.channels()))
                                  : CV_MAKETYPE(CV_16U, static_cast<int>(image.channels()));
  cv::Mat mat(static_cast<int>(image.height()), static_cast<int>(image.width()), type);
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) {
        const double v =
            std::round(std::clamp(image.at(y, x, c), 0.0, 1.0) * max_value);
        const int idx = static_cast<int>(x * image.channels() + c);
        if (bit_depth == 8) {
          mat.ptr<std::uint8_t>(static_cast<int>(y))[idx] = static_cast<std::uint8_t>(v);
        } else {
          mat.ptr<std::uint16_t>(static_cast<int>(y))[idx] = static_cast<std::uint16_t>(v);
        }
      }
    }
  }
  if (image.channels() == 3) cv::cvtColor(mat, mat, cv::COLOR_RGB2BGR);
  write_png(path, mat);
}

Image resize_image(const Image& image, std::size_t height, std::size_t width) {
  if (image.height() == height && image.width() == width) return image;
  if (image.height() == 0 || image.width() == 0 || height == 0 || width == 0) {
    fail(ErrorCode::EmptyDimension, "cannot resize an empty image");
  }
  const int ch = static_cast<int>(image.channels());
  cv::Mat src(static_cast<int>(image.height()), static_cast<int>(image.width()),
              CV_MAKETYPE(CV_64F, ch), const_cast<double*>(image.data().data()));
  const bool shrink = height < image.height() && width < image.width();
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0,
             0, shrink ? cv::INTER_AREA : cv::INTER_CUBIC);
  std::vector<double> values(height * width * image.channels());
  for (std::size_t y = 0; y < height; ++y) {
    const double* row = dst.ptr<double>(static_cast<int>(y));
    std::copy(row, row + width * image.channels(),
              values.begin() + static_cast<long>(y * width * image.channels()));
  }
  return Image(height, width, image.channels(), std::move(values));
}

LabelMap read_label_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::IoFailure, path.string() + " does not exist");
  }
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty() || mat.depth() != CV_8U || mat.channels() != 1) {
    fail(ErrorCode::IoFailure,
         path.string() + " is not an 8-bit single-channel label map");
  }
  LabelMap map = LabelMap::canonical(static_cast<std::size_t>(mat.rows),
                                     static_cast<std::size_t>(mat.cols));
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      if (row[x] >= kNumFaceLabels) {
        fail(ErrorCode::UnknownLabel, path.string() + " contains label " +
                                          std::to_string(row[x]));
      }
      map.labels.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = row[x];
    }
  }
  return map;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& map) {
  cv::Mat mat(static_cast<int>(map.height()), static_cast<int>(map.width()), CV_8U);
  for (std::size_t y = 0; y < map.height(); ++y) {
    auto* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < map.width(); ++x) {
      const int v = map.labels.at(y, x);
      const auto it = map.palette.find(v);
      if (it == map.palette.end()) {
        fail(ErrorCode::UnknownLabel,
             "label " + std::to_string(v) + " is not in the palette");
      }
      row[x] = static_cast<std::uint8_t>(it->second);
    }
  }
  write_png(path, mat);
}

}  // namespace reggap
