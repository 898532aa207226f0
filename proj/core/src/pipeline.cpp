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

#include "reggap/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "reggap/binary_io.hpp"
#include "reggap/image_io.hpp"
#include "reggap/interpolation.hpp"

namespace reggap {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kLabelsPrefix = "labels:";

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string shortest(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::InvalidConfig,
       "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

double parse_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(v)) {
    bad_value(key, value);
  }
  return v;
}

std::uint64_t parse_count(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

void log_line(const StageOptions& options, const std::string& line) {
  if (options.log) *options.log << line << '\n';
}

/// Runs fn(worker, index) for every index; fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = next++; i < n; i = next++) fn(w, i);
    });
  }
  for (auto& t : threads) t.join();
}

std::size_t worker_count(const StageOptions& options, std::size_t n) {
  return std::max<std::size_t>(1, std::min(options.workers, std::max<std::size_t>(n, 1)));
}

struct Outcome {
  enum class Status { Pending, Written, Skipped, Failed } status = Status::Pending;
  std::optional<ErrorCode> code;
  std::string message;
};

void record_failure(Outcome& out, const std::exception& e) {
  out.status = Outcome::Status::Failed;
  if (const auto* err = dynamic_cast<const Error*>(&e)) out.code = err->code();
  out.message = e.what();
}

/// Folds outcomes in manifest order into a summary and logs failures.
StageSummary summarize(std::string_view stage, const Manifest& manifest,
                       const std::vector<Outcome>& outcomes, const StageOptions& options) {
  StageSummary s;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    switch (o.status) {
      case Outcome::Status::Written: ++s.written; break;
      case Outcome::Status::Skipped:
        ++s.skipped;
        if (!o.message.empty()) {
          log_line(options, std::string(stage) + ": skipped " + manifest.records[i].id + ": " +
                                o.message);
        }
        break;
      case Outcome::Status::Failed:
        ++s.failed;
        if (!s.first_failure) s.first_failure = o.code.value_or(ErrorCode::IoFailure);
        log_line(options, std::string(stage) + ": failed " + manifest.records[i].id + ": " +
                              o.message);
        break;
      case Outcome::Status::Pending: break;
    }
  }
  log_line(options, std::string(stage) + ": " + std::to_string(s.written) + " written, " +
                        std::to_string(s.skipped) + " skipped, " + std::to_string(s.failed) +
                        " failed");
  return s;
}

Image as_rgb(Image image) {
  if (image.channels() == 3) return image;
  if (image.channels() != 1) {
    fail(ErrorCode::ShapeMismatch, "expected a grey or RGB image, got " +
                                       std::to_string(image.channels()) + " channels");
  }
  Image rgb(image.height(), image.width(), 3);
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) rgb.at(y, x, c) = image.at(y, x, 0);
    }
  }
  return rgb;
}

Vocabulary parser_vocabulary(const PipelineConfig& config) {
  if (config.parser_vocabulary.empty()) return celebamask_vocabulary();
  return load_vocabulary_file(config.parser_vocabulary);
}

/// Parser model path, or nullopt for the `labels:<dir>` pass-through.
std::optional<fs::path> onnx_parser_path(const PipelineConfig& config) {
  if (starts_with(config.parser_model, kLabelsPrefix)) return std::nullopt;
  if (config.parser_model.empty()) {
    fail(ErrorCode::InvalidConfig, "no parser_model configured");
  }
  if (!fs::exists(config.parser_model)) {
    fail(ErrorCode::ModelLoadFailure, "parser model " + config.parser_model + " does not exist");
  }
  return fs::path(config.parser_model);
}

fs::path supplied_labels_dir(const PipelineConfig& config) {
  return fs::path(config.parser_model.substr(kLabelsPrefix.size()));
}

std::vector<float> to_cached(const Embedding& e) {
  std::vector<float> out(e.values.size());
  std::transform(e.values.begin(), e.values.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

std::vector<double> widen(std::span<const float> values) {
  return std::vector<double>(values.begin(), values.end());
}

std::unordered_map<std::string, std::size_t> index_by_id(const EmbeddingCache& cache) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < cache.records.size(); ++i) out.emplace(cache.records[i].id, i);
  return out;
}

bool outputs_exist(std::initializer_list<fs::path> paths) {
  return std::all_of(paths.begin(), paths.end(), [](const fs::path& p) { return fs::exists(p); });
}

std::string with_suffix(const fs::path& base, std::string_view suffix) {
  return base.string() + std::string(suffix);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "backbone",          "backbone_model",      "parser_model",      "parser_vocabulary",
      "detector_model",    "pooling",             "region_norm",       "empty_region_policy",
      "include_background", "cache_dir",          "seed",              "split",
      "head.hidden1",      "head.hidden2",        "head.dropout_rate", "head.max_norm",
      "head.learning_rate", "head.beta1",         "head.beta2",        "head.epsilon",
      "head.decay",        "head.batch_size",     "head.epochs",       "head.standardize_inputs",
  };
  return keys;
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  HeadConfig& h = c.head;
  if (key == "backbone") {
    backbone_spec(value);
    c.backbone = std::string(value);
  } else if (key == "backbone_model") {
    c.backbone_model = fs::path(std::string(value));
  } else if (key == "parser_model") {
    c.parser_model = std::string(value);
  } else if (key == "parser_vocabulary") {
    c.parser_vocabulary = fs::path(std::string(value));
  } else if (key == "detector_model") {
    c.detector_model = std::string(value);
  } else if (key == "pooling") {
    const auto v = pooling_kind_from_string(value);
    if (!v) bad_value(key, value);
    c.pooling = *v;
  } else if (key == "region_norm") {
    const auto v = region_norm_from_string(value);
    if (!v) bad_value(key, value);
    c.region_norm = *v;
  } else if (key == "empty_region_policy") {
    const auto v = empty_region_policy_from_string(value);
    if (!v) bad_value(key, value);
    c.empty_region_policy = *v;
  } else if (key == "include_background") {
    c.include_background = parse_bool(key, value);
  } else if (key == "cache_dir") {
    c.cache_dir = fs::path(std::string(value));
  } else if (key == "seed") {
    c.seed = parse_count(key, value);
  } else if (key == "split") {
    parse_split_policy(value);
    c.split = std::string(value);
  } else if (key == "head.hidden1") {
    h.hidden1 = parse_count(key, value);
  } else if (key == "head.hidden2") {
    h.hidden2 = parse_count(key, value);
  } else if (key == "head.dropout_rate") {
    h.dropout_rate = parse_real(key, value);
  } else if (key == "head.max_norm") {
    h.max_norm = parse_real(key, value);
  } else if (key == "head.learning_rate") {
    h.learning_rate = parse_real(key, value);
  } else if (key == "head.beta1") {
    h.beta1 = parse_real(key, value);
  } else if (key == "head.beta2") {
    h.beta2 = parse_real(key, value);
  } else if (key == "head.epsilon") {
    h.epsilon = parse_real(key, value);
  } else if (key == "head.decay") {
    h.decay = parse_real(key, value);
  } else if (key == "head.batch_size") {
    h.batch_size = parse_count(key, value);
  } else if (key == "head.epochs") {
    h.epochs = parse_count(key, value);
  } else if (key == "head.standardize_inputs") {
    h.standardize_inputs = parse_bool(key, value);
  } else {
    fail(ErrorCode::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
  }
}

std::string get_config_value(const PipelineConfig& c, std::string_view key) {
  const HeadConfig& h = c.head;
  if (key == "backbone") return c.backbone;
  if (key == "backbone_model") return c.backbone_model.string();
  if (key == "parser_model") return c.parser_model;
  if (key == "parser_vocabulary") return c.parser_vocabulary.string();
  if (key == "detector_model") return c.detector_model;
  if (key == "pooling") return std::string(to_string(c.pooling));
  if (key == "region_norm") return std::string(to_string(c.region_norm));
  if (key == "empty_region_policy") return std::string(to_string(c.empty_region_policy));
  if (key == "include_background") return c.include_background ? "true" : "false";
  if (key == "cache_dir") return c.cache_dir.string();
  if (key == "seed") return std::to_string(c.seed);
  if (key == "split") return c.split;
  if (key == "head.hidden1") return std::to_string(h.hidden1);
  if (key == "head.hidden2") return std::to_string(h.hidden2);
  if (key == "head.dropout_rate") return shortest(h.dropout_rate);
  if (key == "head.max_norm") return shortest(h.max_norm);
  if (key == "head.learning_rate") return shortest(h.learning_rate);
  if (key == "head.beta1") return shortest(h.beta1);
  if (key == "head.beta2") return shortest(h.beta2);
  if (key == "head.epsilon") return shortest(h.epsilon);
  if (key == "head.decay") return shortest(h.decay);
  if (key == "head.batch_size") return std::to_string(h.batch_size);
  if (key == "head.epochs") return std::to_string(h.epochs);
  if (key == "head.standardize_inputs") return h.standardize_inputs ? "true" : "false";
  fail(ErrorCode::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
}

PipelineConfig config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");

  PipelineConfig config;
  const auto apply = [&](const std::string& key, const json& value) {
    std::string text_value;
    if (value.is_string()) {
      text_value = value.get<std::string>();
    } else if (value.is_boolean()) {
      text_value = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      text_value = value.dump();
    } else if (value.is_number_float()) {
      text_value = shortest(value.get<double>());
    } else {
      fail(ErrorCode::InvalidConfig, "config key '" + key + "' needs a scalar value");
    }
    set_config_value(config, key, text_value);
  };
  for (const auto& [key, value] : doc.items()) {
    if (key == "head" && value.is_object()) {
      for (const auto& [hk, hv] : value.items()) apply("head." + hk, hv);
    } else {
      apply(key, value);
    }
  }
  return config;
}

PipelineConfig load_config_file(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::InvalidConfig, "config " + path.string() + " not found");
  return config_from_json(read_text_file(path));
}

std::string config_to_json(const PipelineConfig& config) {
  json doc = json::object();
  json head = json::object();
  for (const auto& key : config_keys()) {
    const std::string value = get_config_value(config, key);
    if (starts_with(key, "head.")) {
      head[key.substr(5)] = value;
    } else {
      doc[key] = value;
    }
  }
  doc["head"] = head;
  return doc.dump(2) + "\n";
}

PoolingOptions pooling_options(const PipelineConfig& config) {
  PoolingOptions o;
  o.region_norm = config.region_norm;
  o.empty_region_policy = config.empty_region_policy;
  o.include_background = config.include_background;
  return o;
}

SplitPolicy split_policy(const PipelineConfig& config) {
  SplitPolicy policy = parse_split_policy(config.split);
  if (auto* r = std::get_if<RandomFraction>(&policy)) {
    const std::string_view text = config.split;
    if (std::count(text.begin(), text.end(), ':') < 2) r->seed = config.seed;
  }
  return policy;
}

BackboneSpec resolved_backbone(const PipelineConfig& config) {
  BackboneSpec spec = backbone_spec(config.backbone);
  spec.model_ref = config.backbone_model;
  return spec;
}

HeadConfig head_config(const PipelineConfig& config) {
  HeadConfig h = config.head;
  h.seed = config.seed;
  return h;
}

fs::path labels_dir(const PipelineConfig& config) { return config.cache_dir / "labels"; }

fs::path label_path(const PipelineConfig& config, std::string_view record_id) {
  return labels_dir(config) / (std::string(record_id) + ".labels.png");
}

fs::path default_cache_path(const PipelineConfig& config) {
  return config.cache_dir / ("embeddings_" + std::string(to_string(config.pooling)) + ".rge");
}

int StageSummary::exit_code() const noexcept {
  if (failed == 0) return 0;
  return exit_code_for(first_failure.value_or(ErrorCode::IoFailure));
}

// ---------------------------------------------------------------------------
// Detection and embedding
// ---------------------------------------------------------------------------

struct DetectorSource::Impl {
  enum class Kind { None, FullFrame, Boxes, YuNet } kind = Kind::None;
  std::map<std::string, std::vector<FaceBox>> boxes;
  std::unique_ptr<YuNetDetector> yunet;
};

DetectorSource::DetectorSource(const PipelineConfig& config) : impl_(std::make_unique<Impl>()) {
  const std::string& d = config.detector_model;
  using Kind = Impl::Kind;
  if (d.empty()) return;
  if (d == "full-frame") {
    impl_->kind = Kind::FullFrame;
  } else if (starts_with(d, "boxes:") || fs::path(d).extension() == ".csv") {
    const fs::path p = starts_with(d, "boxes:") ? fs::path(d.substr(6)) : fs::path(d);
    if (!fs::exists(p)) fail(ErrorCode::ModelLoadFailure, "box file " + p.string() + " not found");
    impl_->kind = Kind::Boxes;
    impl_->boxes = load_box_file(p);
  } else {
    const fs::path p = starts_with(d, "yunet:") ? fs::path(d.substr(6)) : fs::path(d);
    impl_->kind = Kind::YuNet;
    impl_->yunet = std::make_unique<YuNetDetector>(p);
  }
}

DetectorSource::~DetectorSource() = default;
DetectorSource::DetectorSource(DetectorSource&&) noexcept = default;
DetectorSource& DetectorSource::operator=(DetectorSource&&) noexcept = default;

bool DetectorSource::enabled() const noexcept { return impl_->kind != Impl::Kind::None; }

Detection DetectorSource::detect(const Image& image, const fs::path& image_path,
                                 const BackboneSpec& spec) {
  using Kind = Impl::Kind;
  switch (impl_->kind) {
    case Kind::None:
    case Kind::FullFrame: {
      FullFrameDetector full;
      return detect_face(image, full, spec);
    }
    case Kind::Boxes: {
      std::vector<FaceBox> found;
      for (const std::string& key : {image_path.string(), image_path.generic_string(),
                                     image_path.filename().string()}) {
        if (const auto it = impl_->boxes.find(key); it != impl_->boxes.end()) {
          found = it->second;
          break;
        }
      }
      FixedBoxDetector fixed(std::move(found));
      return detect_face(image, fixed, spec);
    }
    case Kind::YuNet: return detect_face(image, *impl_->yunet, spec);
  }
  fail(ErrorCode::DetectorFailure, "unreachable detector kind");
}

Image backbone_input(const Image& image, const fs::path& image_path, const BackboneSpec& spec,
                     DetectorSource& detector, std::optional<FaceBox>* box) {
  const Image rgb = as_rgb(image);
  if (spec.requires_detection || detector.enabled()) {
    Detection d = detector.detect(rgb, image_path, spec);
    if (box) *box = d.box;
    return std::move(d.crop);
  }
  if (box) box->reset();
  if (rgb.height() == spec.input_height && rgb.width() == spec.input_width) return rgb;
  return resize_image(rgb, spec.input_height, spec.input_width);
}

Embedding embed_input(const Image& input, const LabelMap* labels, const BackboneSpec& spec,
                      FeatureExtractor& extractor, PoolingKind kind,
                      const PoolingOptions& options) {
  const FeatureMap aligned = aligned_features(extract_features(input, spec, extractor));
  Embedding e;
  if (kind == PoolingKind::Gap) {
    e = gap(aligned);
  } else {
    if (!labels) fail(ErrorCode::InvalidConfig, "reg_gap pooling needs a label map");
    const RegionMaskSet masks = resize_mask_set(
        label_map_to_masks(*labels), ResizeSpec{kAlignedGrid, kAlignedGrid, ResizeKind::Biquartic});
    e = reg_gap(aligned, masks, options);
  }
  e.source_backbone = spec.name;
  return e;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

StageSummary cmd_segment(const fs::path& manifest_path, const PipelineConfig& config,
                         const StageOptions& options) {
  const Manifest manifest = load_manifest(manifest_path, split_policy(config));
  const BackboneSpec spec = resolved_backbone(config);
  const auto model = onnx_parser_path(config);
  const Vocabulary vocabulary = model ? parser_vocabulary(config) : Vocabulary{};
  const std::size_t n = manifest.records.size();
  const std::size_t workers = worker_count(options, n);

  std::vector<std::unique_ptr<FaceParser>> parsers(workers);
  std::vector<std::optional<DetectorSource>> detectors(workers);
  std::vector<Outcome> outcomes(n);

  parallel_for(n, workers, [&](std::size_t w, std::size_t i) {
    const BmiRecord& rec = manifest.records[i];
    Outcome& out = outcomes[i];
    const fs::path target = label_path(config, rec.id);
    if (fs::exists(target) && !options.force) {
      out.status = Outcome::Status::Skipped;
      return;
    }
    try {
      if (!model) {
        const fs::path source = supplied_labels_dir(config) / (rec.id + ".labels.png");
        if (!fs::exists(source)) {
          fail(ErrorCode::MissingImage, "label map " + source.string() + " not found");
        }
        read_label_png(source);
        write_file_bytes(target, read_file_bytes(source));
      } else {
        if (!parsers[w]) {
          OnnxParserOptions po;
          po.vocabulary = vocabulary;
          parsers[w] = std::make_unique<OnnxFaceParser>(*model, po);
        }
        if (!detectors[w]) detectors[w].emplace(config);
        const fs::path image_path = resolve_image(manifest, rec);
        Image image = as_rgb(read_image(image_path));
        if (spec.requires_detection || detectors[w]->enabled()) {
          image = detectors[w]->detect(image, image_path, spec).crop;
        }
        write_label_png(target, masks_to_label_map(parse_face(image, *parsers[w])));
      }
      out.status = Outcome::Status::Written;
    } catch (const std::exception& e) {
      record_failure(out, e);
    }
  });
  StageSummary s = summarize("segment", manifest, outcomes, options);
  s.up_to_date = s.written == 0 && s.failed == 0;
  return s;
}

StageSummary cmd_embed(const fs::path& manifest_path, const PipelineConfig& config,
                       const fs::path& cache_path, const StageOptions& options) {
  if (!options.force && outputs_exist({cache_path, cache_manifest_path(cache_path)})) {
    log_line(options, "embed: " + cache_path.string() + " is up to date");
    StageSummary s;
    s.up_to_date = true;
    return s;
  }
  const Manifest manifest = load_manifest(manifest_path, split_policy(config));
  const BackboneSpec spec = resolved_backbone(config);
  const PoolingOptions pool = pooling_options(config);
  const std::size_t n = manifest.records.size();
  const std::size_t workers = worker_count(options, n);

  // Model handles are loaded up front so load failures abort the stage.
  std::vector<std::unique_ptr<FeatureExtractor>> extractors;
  std::vector<DetectorSource> detectors;
  for (std::size_t w = 0; w < workers; ++w) {
    extractors.push_back(make_extractor(spec));
    detectors.emplace_back(config);
  }

  std::vector<Outcome> outcomes(n);
  std::vector<Embedding> embeddings(n);
  parallel_for(n, workers, [&](std::size_t w, std::size_t i) {
    const BmiRecord& rec = manifest.records[i];
    try {
      const fs::path image_path = resolve_image(manifest, rec);
      const Image input = backbone_input(read_image(image_path), image_path, spec, detectors[w]);
      std::optional<LabelMap> labels;
      if (config.pooling == PoolingKind::RegGap) {
        const fs::path lp = label_path(config, rec.id);
        if (!fs::exists(lp)) {
          fail(ErrorCode::MissingImage, "label map " + lp.string() + " not found; run segment");
        }
        labels = read_label_png(lp);
      }
      embeddings[i] = embed_input(input, labels ? &*labels : nullptr, spec, *extractors[w],
                                  config.pooling, pool);
      outcomes[i].status = Outcome::Status::Written;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoFaceFound) {
        outcomes[i].status = Outcome::Status::Skipped;
        outcomes[i].message = e.what();
      } else {
        record_failure(outcomes[i], e);
      }
    } catch (const std::exception& e) {
      record_failure(outcomes[i], e);
    }
  });
  StageSummary s = summarize("embed", manifest, outcomes, options);
  if (s.failed > 0) {
    log_line(options, "embed: cache not written");
    s.written = 0;
    return s;
  }

  EmbeddingCache cache;
  cache.kind = config.pooling;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].status != Outcome::Status::Written) continue;
    const BmiRecord& rec = manifest.records[i];
    CacheRecord cr{rec.id, rec.gender, rec.bmi, to_cached(embeddings[i])};
    if (cache.records.empty()) {
      cache.channels = static_cast<std::uint32_t>(cr.values.size());
    }
    cache.records.push_back(std::move(cr));
  }
  if (cache.records.empty()) {
    cache.channels = static_cast<std::uint32_t>(spec.raw_feature_dims.channels);
  }
  const CacheMeta meta{spec.name,           config.pooling,
                       config.region_norm,  config.empty_region_policy,
                       config.include_background, config.seed};
  write_embedding_cache(cache_path, cache, meta);
  if (encode_cache(read_embedding_cache(cache_path)) != encode_cache(cache)) {
    fail(ErrorCode::CacheIntegrity, "embedding cache " + cache_path.string() +
                                        " did not read back identically");
  }
  return s;
}

void check_compatible(const CheckpointMeta& ck, std::size_t input_dim, const CacheMeta& cache,
                      std::size_t channels) {
  std::vector<std::string> issues;
  const auto differ = [&](const std::string& what, const std::string& a, const std::string& b) {
    if (a != b) issues.push_back(what + " " + a + " vs " + b);
  };
  differ("backbone", ck.backbone, cache.backbone);
  differ("pooling", std::string(to_string(ck.pooling)), std::string(to_string(cache.pooling)));
  differ("region_norm", std::string(to_string(ck.region_norm)),
         std::string(to_string(cache.region_norm)));
  differ("empty_region_policy", std::string(to_string(ck.empty_region_policy)),
         std::string(to_string(cache.empty_region_policy)));
  differ("include_background", ck.include_background ? "true" : "false",
         cache.include_background ? "true" : "false");
  differ("seed", std::to_string(ck.config.seed), std::to_string(cache.seed));
  differ("channels", std::to_string(input_dim), std::to_string(channels));
  if (!issues.empty()) {
    std::string msg = "checkpoint does not match the embedding cache:";
    for (const auto& i : issues) msg += " " + i + ";";
    msg.pop_back();
    fail(ErrorCode::IncompatibleCheckpoint, msg);
  }
}

StageSummary cmd_train(const fs::path& cache_path, const fs::path& manifest_path,
                       const PipelineConfig& config, const fs::path& checkpoint,
                       const StageOptions& options) {
  if (!options.force && outputs_exist({checkpoint, checkpoint_manifest_path(checkpoint)})) {
    log_line(options, "train: " + checkpoint.string() + " is up to date");
    StageSummary s;
    s.up_to_date = true;
    return s;
  }
  const Manifest manifest =
      load_manifest(manifest_path, split_policy(config), LoadOptions{false});
  const EmbeddingCache cache = read_embedding_cache(cache_path);
  const CacheMeta meta = read_cache_meta(cache_path);
  const auto index = index_by_id(cache);

  StageSummary s;
  std::vector<LabeledEmbedding> data;
  for (const BmiRecord& rec : manifest.records) {
    if (rec.split != Split::Train) continue;
    const auto it = index.find(rec.id);
    if (it == index.end()) {
      ++s.skipped;
      log_line(options, "train: no embedding for " + rec.id);
      continue;
    }
    data.push_back({widen(cache.records[it->second].values), rec.bmi});
  }
  if (data.empty()) fail(ErrorCode::EmptyDataset, "train split has no embedded records");

  HeadConfig h = head_config(config);
  h.input_dim = cache.channels;
  HeadParams params = init_head(h);
  std::string log_text = "epoch,mse\n";
  fit(params, data, h, [&](std::size_t epoch, double loss) {
    log_text += std::to_string(epoch + 1) + "," + shortest(loss) + "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "train: epoch %zu mse %.6f", epoch + 1, loss);
    log_line(options, buf);
  });

  Checkpoint ck;
  ck.params = std::move(params);
  ck.meta = CheckpointMeta{h,         meta.backbone,           meta.pooling,
                           meta.region_norm, meta.empty_region_policy, meta.include_background};
  save_checkpoint(checkpoint, ck);
  write_text_file(with_suffix(checkpoint, ".log"), log_text);
  s.written = data.size();
  log_line(options, "train: " + std::to_string(data.size()) + " records, checkpoint " +
                        checkpoint.string());
  return s;
}

EvaluateResult cmd_evaluate(const fs::path& checkpoint, const fs::path& cache_path,
                            const fs::path& manifest_path, const PipelineConfig& config,
                            const fs::path& out, const std::optional<Comparison>& compare,
                            const StageOptions& options) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const EmbeddingCache cache = read_embedding_cache(cache_path);
  check_compatible(ck.meta, ck.params.input_dim(), read_cache_meta(cache_path), cache.channels);
  const auto index = index_by_id(cache);

  std::optional<Checkpoint> other;
  std::optional<EmbeddingCache> other_cache;
  std::unordered_map<std::string, std::size_t> other_index;
  if (compare) {
    const fs::path oc = compare->cache.empty() ? cache_path : compare->cache;
    other = load_checkpoint(compare->checkpoint);
    other_cache = read_embedding_cache(oc);
    check_compatible(other->meta, other->params.input_dim(), read_cache_meta(oc),
                     other_cache->channels);
    other_index = index_by_id(*other_cache);
  }

  const Manifest manifest =
      load_manifest(manifest_path, split_policy(config), LoadOptions{false});
  EvaluateResult result;
  std::vector<std::optional<Gender>> genders;
  std::vector<double> other_pred;
  for (const BmiRecord& rec : manifest.records) {
    if (rec.split != Split::Test) continue;
    const auto it = index.find(rec.id);
    if (it == index.end()) continue;
    if (compare && other_index.find(rec.id) == other_index.end()) continue;
    const auto x = widen(cache.records[it->second].values);
    result.ids.push_back(rec.id);
    result.truth.push_back(rec.bmi);
    result.predicted.push_back(forward(ck.params, x, false));
    genders.push_back(rec.gender);
    if (compare) {
      const auto y = widen(other_cache->records[other_index.at(rec.id)].values);
      other_pred.push_back(forward(other->params, y, false));
    }
  }
  if (result.truth.empty()) fail(ErrorCode::EmptyDataset, "test split has no embedded records");

  result.report = build_report(result.truth, result.predicted, genders);
  if (compare && result.truth.size() >= 2) {
    std::vector<double> ea(result.truth.size());
    std::vector<double> eb(result.truth.size());
    for (std::size_t i = 0; i < ea.size(); ++i) {
      ea[i] = std::abs(result.predicted[i] - result.truth[i]);
      eb[i] = std::abs(other_pred[i] - result.truth[i]);
    }
    result.report.significance = paired_t_test(ea, eb);
  }

  const std::string text = report_to_text(result.report);
  if (options.log) *options.log << text;
  const fs::path json_path = with_suffix(out, ".json");
  const fs::path text_path = with_suffix(out, ".txt");
  const fs::path pred_path = with_suffix(out, ".predictions.csv");
  if (!options.force && outputs_exist({json_path, text_path, pred_path})) {
    log_line(options, "evaluate: " + out.string() + ".* already exist; not rewritten");
    return result;
  }
  std::string csv = compare ? "id,bmi,predicted,predicted_compare\n" : "id,bmi,predicted\n";
  for (std::size_t i = 0; i < result.ids.size(); ++i) {
    csv += result.ids[i] + "," + shortest(result.truth[i]) + "," +
           shortest(result.predicted[i]);
    if (compare) csv += "," + shortest(other_pred[i]);
    csv += "\n";
  }
  write_text_file(json_path, report_to_json(result.report));
  write_text_file(text_path, text);
  write_text_file(pred_path, csv);
  result.written = true;
  return result;
}

PredictResult cmd_predict(const fs::path& image_path, const fs::path& checkpoint,
                          const PipelineConfig& config, const std::optional<fs::path>& labels) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  PipelineConfig c = config;
  c.backbone = ck.meta.backbone;
  const BackboneSpec spec = resolved_backbone(c);
  const auto extractor = make_extractor(spec);
  DetectorSource detector(c);

  PredictResult result;
  const Image input = backbone_input(read_image(image_path), image_path, spec, detector, &result.box);

  std::optional<LabelMap> label_map;
  if (labels) {
    label_map = read_label_png(*labels);
  } else if (starts_with(c.parser_model, kLabelsPrefix)) {
    const fs::path p =
        supplied_labels_dir(c) / (image_path.stem().string() + ".labels.png");
    if (!fs::exists(p)) fail(ErrorCode::MissingImage, "label map " + p.string() + " not found");
    label_map = read_label_png(p);
  } else if (!c.parser_model.empty()) {
    OnnxParserOptions po;
    po.vocabulary = parser_vocabulary(c);
    OnnxFaceParser parser(*onnx_parser_path(c), po);
    label_map = masks_to_label_map(parse_face(input, parser));
  } else if (ck.meta.pooling == PoolingKind::RegGap) {
    fail(ErrorCode::InvalidConfig, "reg_gap prediction needs --labels or a parser_model");
  }

  PoolingOptions pool;
  pool.region_norm = ck.meta.region_norm;
  pool.empty_region_policy = ck.meta.empty_region_policy;
  pool.include_background = ck.meta.include_background;
  const Embedding e = embed_input(input, label_map ? &*label_map : nullptr, spec, *extractor,
                                  ck.meta.pooling, pool);
  // Training saw float32 cache values; predict on the same precision.
  const auto x = widen(to_cached(e));
  result.bmi = forward(ck.params, x, false);

  json doc;
  doc["image"] = image_path.string();
  doc["bmi"] = result.bmi;
  doc["backbone"] = spec.name;
  doc["pooling"] = std::string(to_string(ck.meta.pooling));
  if (result.box) {
    doc["face_box"] = {{"x", result.box->x},
                       {"y", result.box->y},
                       {"width", result.box->width},
                       {"height", result.box->height},
                       {"confidence", result.box->confidence}};
  } else {
    doc["face_box"] = nullptr;
  }
  if (label_map) {
    const RegionMaskSet masks = label_map_to_masks(*label_map);
    std::map<std::string, std::size_t> counts;
    json regions = json::object();
    std::size_t face = 0;
    for (RegionId r : kAllRegions) {
      const std::size_t n = masks.support(r);
      counts[std::string(region_name(r))] = n;
      regions[std::string(region_name(r))] = n;
      face += n;
    }
    const std::size_t bg = label_map->height() * label_map->width() - face;
    counts["background"] = bg;
    regions["background"] = bg;
    doc["region_pixels"] = regions;
    doc["mask_resolution"] = {label_map->height(), label_map->width()};
    result.region_pixels = std::move(counts);
  } else {
    doc["region_pixels"] = nullptr;
  }
  result.json = doc.dump(2) + "\n";
  return result;
}

StageSummary cmd_export_embeddings(const fs::path& cache_path, const fs::path& out,
                                   const StageOptions& options) {
  StageSummary s;
  if (!options.force && fs::exists(out)) {
    log_line(options, "export-embeddings: " + out.string() + " is up to date");
    s.up_to_date = true;
    return s;
  }
  const EmbeddingCache cache = read_embedding_cache(cache_path);
  write_text_file(out, export_embeddings_csv(cache));
  s.written = cache.records.size();
  log_line(options, "export-embeddings: " + std::to_string(s.written) + " records");
  return s;
}

StageSummary cmd_synth(const SyntheticSpec& spec, const fs::path& dir,
                       const StageOptions& options) {
  StageSummary s;
  if (!options.force && fs::exists(dir / "manifest.csv")) {
    log_line(options, "synth: " + dir.string() + " is up to date");
    s.up_to_date = true;
    return s;
  }
  write_synthetic(generate_synthetic(spec), dir);
  s.written = spec.n;
  log_line(options, "synth: " + std::to_string(spec.n) + " records in " + dir.string());
  return s;
}

Manifest cmd_validate(const fs::path& manifest_path, const PipelineConfig& config,
                      std::ostream* log) {
  Manifest m = load_manifest(manifest_path, split_policy(config));
  if (log) {
    std::size_t male = 0;
    std::size_t female = 0;
    std::map<BmiClass, std::size_t> classes;
    for (const auto& r : m.records) {
      if (r.gender == Gender::Male) ++male;
      if (r.gender == Gender::Female) ++female;
      ++classes[class_bin(r.bmi)];
    }
    *log << "manifest " << manifest_path.string() << ": " << m.records.size() << " records, "
         << m.count(Split::Train) << " train, " << m.count(Split::Test) << " test ("
         << to_string(m.split_policy) << ")\n";
    *log << "gender: " << male << " male, " << female << " female, "
         << (m.records.size() - male - female) << " unknown\n";
    for (const auto& [cls, n] : classes) *log << to_string(cls) << ": " << n << "\n";
  }
  return m;
}

}  // namespace reggap
