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

#include "reggap/checkpoint.hpp"

#include <iomanip>
#include <limits>
#include <sstream>

#include "csv.hpp"
#include "reggap/binary_io.hpp"
#include "reggap/error.hpp"

namespace reggap {
namespace {

constexpr std::string_view kMagic = "RGH1";

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

template <typename Tensor>
void put_tensor(ByteWriter& w, const Tensor& t) {
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) w.put_f64(t(i, j));
  }
}

template <typename Tensor>
void get_tensor(ByteReader& r, Tensor& t) {
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = r.get_f64();
  }
}

const std::string& require(const std::map<std::string, std::string>& kv,
                           const std::string& key, const std::filesystem::path& where) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    fail(ErrorCode::CacheIntegrity, where.string() + " lacks key '" + key + "'");
  }
  return it->second;
}

}  // namespace

std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".manifest";
  return p;
}

std::string format_manifest(const std::map<std::string, std::string>& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_manifest(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) continue;
    out[detail::trim(std::string_view(body).substr(0, eq))] =
        detail::trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const HeadParams& p = checkpoint.params;
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(static_cast<std::uint32_t>(p.input_dim()));
  p.weights.for_each([&](const auto& t) { put_tensor(w, t); });
  put_tensor(w, p.input_mean);
  put_tensor(w, p.input_scale);
  p.m.for_each([&](const auto& t) { put_tensor(w, t); });
  p.v.for_each([&](const auto& t) { put_tensor(w, t); });
  w.put_u64(p.step);
  write_file_bytes(path, w.bytes());

  const HeadConfig& c = checkpoint.meta.config;
  const std::map<std::string, std::string> kv = {
      {"format", "RGH1"},
      {"input_dim", std::to_string(p.input_dim())},
      {"hidden1", std::to_string(c.hidden1)},
      {"hidden2", std::to_string(c.hidden2)},
      {"dropout_rate", format_double(c.dropout_rate)},
      {"max_norm", format_double(c.max_norm)},
      {"learning_rate", format_double(c.learning_rate)},
      {"beta1", format_double(c.beta1)},
      {"beta2", format_double(c.beta2)},
      {"epsilon", format_double(c.epsilon)},
      {"decay", format_double(c.decay)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"seed", std::to_string(c.seed)},
      {"standardize_inputs", c.standardize_inputs ? "true" : "false"},
      {"backbone", checkpoint.meta.backbone},
      {"pooling", std::string(to_string(checkpoint.meta.pooling))},
      {"region_norm", std::string(to_string(checkpoint.meta.region_norm))},
      {"empty_region_policy", std::string(to_string(checkpoint.meta.empty_region_policy))},
      {"include_background", checkpoint.meta.include_background ? "true" : "false"},
  };
  write_text_file(checkpoint_manifest_path(path), format_manifest(kv));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto sidecar = checkpoint_manifest_path(path);
  if (!std::filesystem::exists(path) || !std::filesystem::exists(sidecar)) {
    fail(ErrorCode::ModelLoadFailure,
         "checkpoint " + path.string() + " or its manifest is missing");
  }
  const auto kv = parse_manifest(read_text_file(sidecar));
  Checkpoint ck;
  HeadConfig& c = ck.meta.config;
  try {
    c.input_dim = std::stoul(require(kv, "input_dim", sidecar));
    c.hidden1 = std::stoul(require(kv, "hidden1", sidecar));
    c.hidden2 = std::stoul(require(kv, "hidden2", sidecar));
    c.dropout_rate = std::stod(require(kv, "dropout_rate", sidecar));
    c.max_norm = std::stod(require(kv, "max_norm", sidecar));
    c.learning_rate = std::stod(require(kv, "learning_rate", sidecar));
    c.beta1 = std::stod(require(kv, "beta1", sidecar));
    c.beta2 = std::stod(require(kv, "beta2", sidecar));
    c.epsilon = std::stod(require(kv, "epsilon", sidecar));
    c.decay = std::stod(require(kv, "decay", sidecar));
    c.batch_size = std::stoul(require(kv, "batch_size", sidecar));
    c.epochs = std::stoul(require(kv, "epochs", sidecar));
    c.seed = std::stoull(require(kv, "seed", sidecar));
  } catch (const std::logic_error&) {
    fail(ErrorCode::CacheIntegrity, sidecar.string() + " has a malformed number");
  }
  c.standardize_inputs = require(kv, "standardize_inputs", sidecar) == "true";
  ck.meta.backbone = require(kv, "backbone", sidecar);
  const auto pooling = pooling_kind_from_string(require(kv, "pooling", sidecar));
  const auto norm = region_norm_from_string(require(kv, "region_norm", sidecar));
  const auto policy =
      empty_region_policy_from_string(require(kv, "empty_region_policy", sidecar));
  if (!pooling || !norm || !policy) {
    fail(ErrorCode::CacheIntegrity, sidecar.string() + " has an unknown pooling setting");
  }
  ck.meta.pooling = *pooling;
  ck.meta.region_norm = *norm;
  ck.meta.empty_region_policy = *policy;
  ck.meta.include_background = require(kv, "include_background", sidecar) == "true";

  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  if (r.get_bytes(4) != kMagic) {
    fail(ErrorCode::CacheIntegrity, path.string() + " is not a head checkpoint");
  }
  if (r.get_u32() != c.input_dim) {
    fail(ErrorCode::CacheIntegrity, path.string() + " disagrees with its manifest");
  }
  HeadParams& p = ck.params;
  p.weights = HeadTensors::zeros(c);
  p.m = HeadTensors::zeros(c);
  p.v = HeadTensors::zeros(c);
  p.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.input_dim));
  p.input_scale = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.input_dim));
  p.weights.for_each([&](auto& t) { get_tensor(r, t); });
  get_tensor(r, p.input_mean);
  get_tensor(r, p.input_scale);
  p.m.for_each([&](auto& t) { get_tensor(r, t); });
  p.v.for_each([&](auto& t) { get_tensor(r, t); });
  p.step = r.get_u64();
  if (r.remaining() != 0) {
    fail(ErrorCode::CacheIntegrity, path.string() + " has trailing bytes");
  }
  return ck;
}

}  // namespace reggap
