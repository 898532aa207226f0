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

#include <array>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "reggap/binary_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

using reggap::testing::TempDir;

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(REGGAP_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  std::FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("reggap_cli");
    ASSERT_EQ(run("-q synth --out " + q(data()) + " --n 64 --noise-std 0.05").code, 0);
    ASSERT_EQ(run(common() + " segment --manifest " + q(manifest())).code, 0);
    ASSERT_EQ(run(common() + " embed --manifest " + q(manifest())).code, 0);
    ASSERT_EQ(run(common() + " --head.epochs 30 train --manifest " + q(manifest())).code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path data() { return dir_->path() / "data"; }
  static fs::path cache() { return dir_->path() / "cache"; }
  static fs::path manifest() { return data() / "manifest.csv"; }
  static std::string common() {
    return "-q --cache_dir " + q(cache()) + " --parser_model " + q("labels:" + (data() / "masks").string());
  }
  static TempDir* dir_;
};

TempDir* Cli::dir_ = nullptr;

TEST(CliBasics, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_NE(run("--help").out.find("export-embeddings"), std::string::npos);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("segment").code, 1);
  EXPECT_EQ(run("--pooling max validate --manifest x.csv").code, 1);
}

TEST(CliBasics, DataErrorsExitFour) {
  TempDir dir;
  reggap::write_text_file(dir / "m.csv", "id,image_path,bmi,gender,identity,split\na,b,abc,,,train\n");
  EXPECT_EQ(run("validate --manifest " + q(dir / "m.csv")).code, 4);
  EXPECT_EQ(run("validate --manifest " + q(dir / "absent.csv")).code, 4);
}

TEST_F(Cli, StageOutputsExist) {
  EXPECT_TRUE(fs::exists(cache() / "embeddings_reg_gap.rge"));
  EXPECT_TRUE(fs::exists(cache() / "embeddings_reg_gap.rge.manifest"));
  EXPECT_TRUE(fs::exists(cache() / "head_reg_gap.rgh"));
  EXPECT_TRUE(fs::exists(cache() / "head_reg_gap.rgh.manifest"));
  EXPECT_TRUE(fs::exists(cache() / "head_reg_gap.rgh.log"));
  EXPECT_EQ(fs::directory_iterator(cache() / "labels") == fs::directory_iterator(), false);
}

TEST_F(Cli, ValidateReportsCounts) {
  const CliRun r = run("validate --manifest " + q(manifest()));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("64"), std::string::npos);
}

TEST_F(Cli, EvaluateWritesReports) {
  const fs::path out = dir_->path() / "rep";
  const CliRun r = run(common() + " --force evaluate --manifest " + q(manifest()) + " --out " + q(out));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(out.string() + ".json"));
  EXPECT_TRUE(fs::exists(out.string() + ".txt"));
  EXPECT_TRUE(fs::exists(out.string() + ".predictions.csv"));
  const CliRun loud = run("--cache_dir " + q(cache()) + " evaluate --manifest " + q(manifest()) +
                       " --out " + q(out));
  EXPECT_NE(loud.out.find("overall"), std::string::npos);
}

TEST_F(Cli, PredictPrintsTwoDecimalsAndJson) {
  const fs::path image = data() / "images" / "synth_0000.png";
  const fs::path ckpt = cache() / "head_reg_gap.rgh";
  const fs::path json = dir_->path() / "p.json";
  const CliRun r = run(common() + " predict --image " + q(image) + " --checkpoint " + q(ckpt) +
                    " --json " + q(json));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(std::regex_match(r.out, std::regex("-?[0-9]+\\.[0-9]{2}\n"))) << r.out;
  const std::string text = reggap::read_text_file(json);
  for (const char* key : {"\"bmi\"", "\"backbone\"", "\"pooling\"", "\"face_box\"", "\"region_pixels\"",
                          "\"mask_resolution\"", "\"image\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  const CliRun stdout_json = run(common() + " predict --image " + q(image) + " --checkpoint " +
                              q(ckpt) + " --json -");
  EXPECT_EQ(stdout_json.out.substr(0, r.out.size()), r.out);
  EXPECT_NE(stdout_json.out.find("\"region_pixels\""), std::string::npos);
}

TEST_F(Cli, PredictExitCodes) {
  const fs::path image = data() / "images" / "synth_0000.png";
  EXPECT_EQ(run(common() + " predict --image " + q(image) + " --checkpoint " +
                q(dir_->path() / "none.rgh")).code,
            3);
  const fs::path boxes = dir_->path() / "boxes.csv";
  reggap::write_text_file(boxes, "image,x,y,width,height,confidence\n");
  EXPECT_EQ(run(common() + " --detector_model " + q("boxes:" + boxes.string()) +
                " predict --image " + q(image) + " --checkpoint " +
                q(cache() / "head_reg_gap.rgh") + " --json -").code,
            2);
}

TEST_F(Cli, ExportEmbeddings) {
  const fs::path out = dir_->path() / "e.csv";
  EXPECT_EQ(run("export-embeddings --cache " + q(cache() / "embeddings_reg_gap.rge") + " --out " +
                q(out)).code,
            0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "id,gender,bmi,v0,v1,v2");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 64u);
}

TEST_F(Cli, RerunIsNoOp) {
  const fs::path ckpt = cache() / "head_reg_gap.rgh";
  const auto before = reggap::read_file_bytes(ckpt);
  const auto stamp = fs::last_write_time(ckpt);
  EXPECT_EQ(run(common() + " --head.epochs 3 train --manifest " + q(manifest())).code, 0);
  EXPECT_EQ(fs::last_write_time(ckpt), stamp);
  EXPECT_EQ(reggap::read_file_bytes(ckpt), before);
}

}  // namespace
