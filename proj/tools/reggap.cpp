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

// Command-line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "reggap/error.hpp"
#include "reggap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace reggap;

namespace {

struct Globals {
  fs::path config_file;
  bool force = false;
  std::size_t workers = 1;
  bool quiet = false;
  std::map<std::string, std::string> overrides;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig config = g.config_file.empty() ? PipelineConfig{} : load_config_file(g.config_file);
  for (const auto& [key, value] : g.overrides) set_config_value(config, key, value);
  return config;
}

StageOptions stage_options(const Globals& g, std::ostream& log) {
  StageOptions o;
  o.force = g.force;
  o.workers = g.workers;
  o.log = g.quiet ? nullptr : &log;
  return o;
}

fs::path or_default(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback : fs::path(value);
}

fs::path default_checkpoint(const PipelineConfig& c) {
  return c.cache_dir / ("head_" + std::string(to_string(c.pooling)) + ".rgh");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-aware pooling for BMI regression from face images"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_flag("--force", g.force, "Recompute outputs that already exist");
  app.add_option("--workers", g.workers, "Parallel image workers")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress logging");
  for (const std::string& key : config_keys()) {
    app.add_option_function<std::string>(
           "--" + key, [&g, key](const std::string& v) { g.overrides[key] = v; },
           "Override configuration key " + key)
        ->type_name("VALUE");
  }

  std::string manifest, cache, out, checkpoint, compare_ckpt, compare_cache, image, labels,
      json_out;

  auto* segment = app.add_subcommand("segment", "Write per-record label maps");
  segment->add_option("--manifest", manifest, "Manifest CSV")->required();

  auto* embed = app.add_subcommand("embed", "Extract and pool embeddings into a cache");
  embed->add_option("--manifest", manifest, "Manifest CSV")->required();
  embed->add_option("--out", out, "Embedding cache (default <cache_dir>/embeddings_<pooling>.rge)");

  auto* train = app.add_subcommand("train", "Train the regression head");
  train->add_option("--manifest", manifest, "Manifest CSV")->required();
  train->add_option("--cache", cache, "Embedding cache");
  train->add_option("--checkpoint", checkpoint, "Output checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  evaluate->add_option("--manifest", manifest, "Manifest CSV")->required();
  evaluate->add_option("--cache", cache, "Embedding cache");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint");
  evaluate->add_option("--out", out, "Report prefix (default <cache_dir>/report_<pooling>)");
  evaluate->add_option("--compare-checkpoint", compare_ckpt, "Second checkpoint for a paired t-test");
  evaluate->add_option("--compare-cache", compare_cache, "Embedding cache of the second checkpoint");

  auto* predict = app.add_subcommand("predict", "Predict BMI for one image");
  predict->add_option("--image", image, "Input image")->required();
  predict->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  predict->add_option("--labels", labels, "Label map to use instead of the parser");
  predict->add_option("--json", json_out, "Write the JSON result here ('-' for stdout)");

  auto* export_cmd = app.add_subcommand("export-embeddings", "Export a cache as CSV");
  export_cmd->add_option("--cache", cache, "Embedding cache")->required();
  export_cmd->add_option("--out", out, "Output CSV")->required();

  SyntheticSpec synth_spec;
  std::string signal_region = "nose";
  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--n", synth_spec.n, "Number of records")->capture_default_str();
  synth->add_option("--image-size", synth_spec.image_size, "Image side")->capture_default_str();
  synth->add_option("--signal-region", signal_region, "Region carrying the BMI code")
      ->capture_default_str();
  synth->add_option("--noise-std", synth_spec.noise_std, "Noise level")->capture_default_str();
  synth->add_option("--bmi-low", synth_spec.bmi_low, "Lowest BMI")->capture_default_str();
  synth->add_option("--bmi-high", synth_spec.bmi_high, "Highest BMI")->capture_default_str();
  synth->add_option("--train-fraction", synth_spec.train_fraction, "Train share")
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check a manifest");
  validate->add_option("--manifest", manifest, "Manifest CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig config = resolve_config(g);
    const StageOptions opts = stage_options(g, std::cerr);

    if (*segment) return cmd_segment(manifest, config, opts).exit_code();
    if (*embed) {
      return cmd_embed(manifest, config, or_default(out, default_cache_path(config)), opts)
          .exit_code();
    }
    if (*train) {
      return cmd_train(or_default(cache, default_cache_path(config)), manifest, config,
                       or_default(checkpoint, default_checkpoint(config)), opts)
          .exit_code();
    }
    if (*evaluate) {
      std::optional<Comparison> compare;
      if (!compare_ckpt.empty()) compare = Comparison{compare_ckpt, compare_cache};
      StageOptions eval_opts = opts;
      eval_opts.log = g.quiet ? nullptr : &std::cout;
      cmd_evaluate(or_default(checkpoint, default_checkpoint(config)),
                   or_default(cache, default_cache_path(config)), manifest, config,
                   or_default(out, config.cache_dir /
                                       ("report_" + std::string(to_string(config.pooling)))),
                   compare, eval_opts);
      return 0;
    }
    if (*predict) {
      std::optional<fs::path> label_file;
      if (!labels.empty()) label_file = labels;
      const PredictResult r = cmd_predict(image, checkpoint, config, label_file);
      std::printf("%.2f\n", r.bmi);
      const fs::path target = json_out.empty()
                                  ? config.cache_dir / "predictions" /
                                        (fs::path(image).stem().string() + ".json")
                                  : fs::path(json_out);
      if (json_out == "-") {
        std::fputs(r.json.c_str(), stdout);
      } else {
        fs::create_directories(target.parent_path().empty() ? "." : target.parent_path());
        std::FILE* f = std::fopen(target.c_str(), "wb");
        if (!f) fail(ErrorCode::IoFailure, "cannot write " + target.string());
        std::fputs(r.json.c_str(), f);
        std::fclose(f);
      }
      return 0;
    }
    if (*export_cmd) return cmd_export_embeddings(cache, out, opts).exit_code();
    if (*synth) {
      const auto region = region_from_name(signal_region);
      if (!region) fail(ErrorCode::InvalidConfig, "unknown region '" + signal_region + "'");
      synth_spec.signal_region = *region;
      synth_spec.seed = config.seed;
      return cmd_synth(synth_spec, out, opts).exit_code();
    }
    if (*validate) {
      cmd_validate(manifest, config, &std::cout);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
