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

#ifndef REGGAP_PIPELINE_HPP
#define REGGAP_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reggap/backbone.hpp"
#include "reggap/checkpoint.hpp"
#include "reggap/dataset.hpp"
#include "reggap/embedding_cache.hpp"
#include "reggap/error.hpp"
#include "reggap/evaluation.hpp"
#include "reggap/head.hpp"
#include "reggap/pooling.hpp"
#include "reggap/segmentation.hpp"
#include "reggap/synthetic.hpp"

namespace reggap {

struct PipelineConfig {
  std::string backbone = "identity";
  /// ONNX weights for facenet / vggface.
  std::filesystem::path backbone_model;
  /// A face-parsing ONNX model, or `labels:<dir>` to take ground-truth
  /// `<dir>/<id>.labels.png` files as they are.
  std::string parser_model;
  /// Optional vocabulary file for the parser (`N -> region` lines).
  std::filesystem::path parser_vocabulary;
  /// Empty, `full-frame`, `boxes:<csv>` or `yunet:<onnx>`. A bare `.csv` or
  /// `.onnx` path selects boxes or yunet.
  std::string detector_model;
  PoolingKind pooling = PoolingKind::RegGap;
  RegionNorm region_norm = RegionNorm::Support;
  EmptyRegionPolicy empty_region_policy = EmptyRegionPolicy::FixedK;
  bool include_background = false;
  HeadConfig head;
  std::filesystem::path cache_dir = "reggap_cache";
  std::uint64_t seed = 7;
  /// Split policy text (see parse_split_policy). A random policy without an
  /// explicit seed uses `seed`.
  std::string split = "preassigned";
};

/// Every settable key, in display order. Head keys carry a `head.` prefix.
const std::vector<std::string>& config_keys();
/// Throws InvalidConfig for unknown keys or unparsable values.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& config, std::string_view key);

/// JSON object mirroring config_keys(); head keys may be nested under
/// "head" or written dotted. Throws InvalidConfig.
PipelineConfig config_from_json(std::string_view text);
PipelineConfig load_config_file(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

PoolingOptions pooling_options(const PipelineConfig& config);
SplitPolicy split_policy(const PipelineConfig& config);
/// Backbone spec with model_ref taken from backbone_model.
BackboneSpec resolved_backbone(const PipelineConfig& config);
/// HeadConfig with the pipeline seed applied.
HeadConfig head_config(const PipelineConfig& config);

std::filesystem::path labels_dir(const PipelineConfig& config);
std::filesystem::path label_path(const PipelineConfig& config, std::string_view record_id);
std::filesystem::path default_cache_path(const PipelineConfig& config);

struct StageOptions {
  bool force = false;
  std::size_t workers = 1;
  std::ostream* log = nullptr;
};

struct StageSummary {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  /// Output already existed and nothing was written.
  bool up_to_date = false;
  std::optional<ErrorCode> first_failure;

  int exit_code() const noexcept;
};

// ---------------------------------------------------------------------------
// Per-image building blocks
// ---------------------------------------------------------------------------

/// Face detection as configured; null when the pipeline runs on whole frames.
class DetectorSource {
 public:
  explicit DetectorSource(const PipelineConfig& config);
  ~DetectorSource();
  DetectorSource(DetectorSource&&) noexcept;
  DetectorSource& operator=(DetectorSource&&) noexcept;

  bool enabled() const noexcept;
  /// Throws NoFaceFound or DetectorFailure.
  Detection detect(const Image& image, const std::filesystem::path& image_path,
                   const BackboneSpec& spec);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Frames the image for the backbone: detector crop when detection runs,
/// a plain resize to the input size otherwise.
Image backbone_input(const Image& image, const std::filesystem::path& image_path,
                     const BackboneSpec& spec, DetectorSource& detector,
                     std::optional<FaceBox>* box = nullptr);

/// Extract, align to 32x32, resize masks and pool.
Embedding embed_input(const Image& input, const LabelMap* labels, const BackboneSpec& spec,
                      FeatureExtractor& extractor, PoolingKind kind,
                      const PoolingOptions& options);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Writes `<cache_dir>/labels/<id>.labels.png` per record.
StageSummary cmd_segment(const std::filesystem::path& manifest, const PipelineConfig& config,
                         const StageOptions& options = {});

/// Writes one embedding cache (plus sidecar). Records without a face are
/// skipped and counted in `skipped`.
StageSummary cmd_embed(const std::filesystem::path& manifest, const PipelineConfig& config,
                       const std::filesystem::path& cache, const StageOptions& options = {});

/// Trains on the train split and writes the checkpoint, its sidecar and a
/// `<checkpoint>.log` of per-epoch MSE.
StageSummary cmd_train(const std::filesystem::path& cache, const std::filesystem::path& manifest,
                       const PipelineConfig& config, const std::filesystem::path& checkpoint,
                       const StageOptions& options = {});

struct Comparison {
  std::filesystem::path checkpoint;
  /// Defaults to the primary cache.
  std::filesystem::path cache;
};

struct EvaluateResult {
  EvalReport report;
  std::vector<std::string> ids;
  std::vector<double> truth;
  std::vector<double> predicted;
  bool written = false;
};

/// Evaluates on the test split and writes `<out>.json`, `<out>.txt` and
/// `<out>.predictions.csv`. With a comparison, both models are scored on the
/// test records they share and a paired t-test on absolute errors is added.
/// Throws IncompatibleCheckpoint.
EvaluateResult cmd_evaluate(const std::filesystem::path& checkpoint,
                            const std::filesystem::path& cache,
                            const std::filesystem::path& manifest, const PipelineConfig& config,
                            const std::filesystem::path& out,
                            const std::optional<Comparison>& compare = std::nullopt,
                            const StageOptions& options = {});

struct PredictResult {
  double bmi = 0.0;
  std::optional<FaceBox> box;
  /// Mask-1 pixel counts at the label map's own resolution.
  std::optional<std::map<std::string, std::size_t>> region_pixels;
  std::string json;
};

/// Full pipeline on one image. Masks come from `labels` when given, else
/// from the configured parser. Throws NoFaceFound, ModelLoadFailure.
PredictResult cmd_predict(const std::filesystem::path& image,
                          const std::filesystem::path& checkpoint, const PipelineConfig& config,
                          const std::optional<std::filesystem::path>& labels = std::nullopt);

StageSummary cmd_export_embeddings(const std::filesystem::path& cache,
                                   const std::filesystem::path& out,
                                   const StageOptions& options = {});

StageSummary cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& dir,
                       const StageOptions& options = {});

/// Loads and validates a manifest and reports its split counts.
Manifest cmd_validate(const std::filesystem::path& manifest, const PipelineConfig& config,
                      std::ostream* log = nullptr);

/// Throws IncompatibleCheckpoint when the checkpoint was not trained on
/// embeddings like the cache's.
void check_compatible(const CheckpointMeta& checkpoint, std::size_t input_dim,
                      const CacheMeta& cache, std::size_t channels);

}  // namespace reggap

#endif  // REGGAP_PIPELINE_HPP
