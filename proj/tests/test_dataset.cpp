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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "reggap/binary_io.hpp"
#include "reggap/dataset.hpp"
#include "reggap/error.hpp"
#include "support.hpp"

namespace reggap {
namespace {

using testing::TempDir;

const LoadOptions kNoImages{false};

std::string rows(std::size_t n, bool with_split = false, std::size_t identities = 0) {
  std::ostringstream out;
  out << kManifestHeader << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "r" << i << ",img/" << i << ".jpg," << 20.0 + static_cast<double>(i % 17) << ","
        << (i % 2 ? "female" : "male") << ",";
    if (identities) out << "person" << i % identities;
    out << "," << (with_split ? (i % 4 == 0 ? "test" : "train") : "") << "\n";
  }
  return out.str();
}

Manifest parse(const std::string& text, const SplitPolicy& policy = Preassigned{}) {
  return parse_manifest_csv(text, "m.csv", "", policy, kNoImages);
}

void expect_malformed(const std::string& text, const std::string& fragment) {
  try {
    parse(text);
    FAIL() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(SplitPolicy, ParseAndPrint) {
  EXPECT_TRUE(std::holds_alternative<Preassigned>(parse_split_policy("preassigned")));
  EXPECT_TRUE(std::holds_alternative<Preassigned>(parse_split_policy("")));
  const auto seq = parse_split_policy("sequential:3368");
  ASSERT_TRUE(std::holds_alternative<SequentialFirstK>(seq));
  EXPECT_EQ(std::get<SequentialFirstK>(seq).k, 3368u);
  const auto rnd = parse_split_policy("random:0.78:5");
  ASSERT_TRUE(std::holds_alternative<RandomFraction>(rnd));
  EXPECT_EQ(std::get<RandomFraction>(rnd).train_frac, 0.78);
  EXPECT_EQ(std::get<RandomFraction>(rnd).seed, 5u);
  EXPECT_FALSE(std::get<RandomFraction>(rnd).group_by_identity);
  EXPECT_TRUE(std::get<RandomFraction>(parse_split_policy("random-identity:0.5")).group_by_identity);
  EXPECT_EQ(to_string(seq), "sequential:3368");
  EXPECT_EQ(to_string(rnd), "random:0.78:5");
  for (const char* bad : {"sequential", "sequential:x", "random:abc", "shuffle:0.5"}) {
    EXPECT_THROW(parse_split_policy(bad), Error) << bad;
  }
}

TEST(Manifest, PreassignedSplits) {
  const Manifest m = parse(rows(12, true));
  EXPECT_EQ(m.records.size(), 12u);
  EXPECT_EQ(m.count(Split::Test), 3u);
  EXPECT_EQ(m.count(Split::Train), 9u);
  ASSERT_NE(m.find("r5"), nullptr);
  EXPECT_EQ(m.find("r5")->bmi, 25.0);
  EXPECT_EQ(m.find("r5")->gender, Gender::Female);
  EXPECT_EQ(m.find("nope"), nullptr);
}

TEST(Manifest, PreassignedWithoutSplitsFails) {
  try {
    parse(rows(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
  }
}

TEST(Manifest, SequentialFirstK) {
  const Manifest m = parse(rows(10), SequentialFirstK{8});
  EXPECT_EQ(m.count(Split::Train), 8u);
  EXPECT_EQ(m.count(Split::Test), 2u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(m.records[i].split, i < 8 ? Split::Train : Split::Test);
  EXPECT_THROW(parse(rows(10), SequentialFirstK{11}), Error);
}

TEST(Manifest, FullSizeSequentialSplit) {
  const Manifest m = parse(rows(4206), SequentialFirstK{3368});
  EXPECT_EQ(m.count(Split::Train), 3368u);
  EXPECT_EQ(m.count(Split::Test), 838u);
}

TEST(Manifest, MalformedRowsReportLine) {
  std::string text = rows(3, true);
  text += "r9,img/9.jpg,abc,male,,train\n";
  expect_malformed(text, "m.csv:5:");
  expect_malformed(rows(1, true) + "x,y,25\n", "expected 6 fields");
  expect_malformed(rows(1, true) + ",y,25,male,,train\n", "empty id");
  expect_malformed(rows(1, true) + "x,y,250,male,,train\n", "plausible");
  expect_malformed(rows(1, true) + "x,y,25,other,,train\n", "gender");
  expect_malformed(rows(1, true) + "x,y,25,male,,valid\n", "split");
  expect_malformed("id,path,bmi\n", "header");
  expect_malformed("", "header");
}

TEST(Manifest, DuplicateAndMissingImages) {
  try {
    parse(rows(2, true) + "r0,img/0.jpg,22,male,,train\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
  }
  TempDir dir;
  write_text_file(dir / "m.csv", rows(2, true));
  try {
    load_manifest(dir / "m.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingImage);
  }
  std::filesystem::create_directories(dir / "img");
  write_text_file(dir / "img/0.jpg", "x");
  write_text_file(dir / "img/1.jpg", "x");
  const Manifest m = load_manifest(dir / "m.csv");
  EXPECT_EQ(resolve_image(m, m.records[1]), dir.path() / "img/1.jpg");
  try {
    load_manifest(dir / "absent.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
  }
}

TEST(Manifest, FormatRoundTrip) {
  const Manifest m = parse(rows(20, true, 4));
  const Manifest back = parse(format_manifest_csv(m));
  ASSERT_EQ(back.records.size(), m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_EQ(back.records[i].id, m.records[i].id);
    EXPECT_EQ(back.records[i].bmi, m.records[i].bmi);
    EXPECT_EQ(back.records[i].identity, m.records[i].identity);
    EXPECT_EQ(back.records[i].split, m.records[i].split);
  }
  EXPECT_EQ(format_manifest_csv(back), format_manifest_csv(m));
}

TEST(RandomSplit, Sizes) {
  const Manifest m100 = parse(rows(100), RandomFraction{0.78, 1});
  EXPECT_EQ(m100.count(Split::Train), 78u);
  EXPECT_EQ(m100.count(Split::Test), 22u);
  const Manifest m10 = parse(rows(10), RandomFraction{0.999, 1});
  EXPECT_EQ(m10.count(Split::Train), 9u);
  EXPECT_EQ(m10.count(Split::Test), 1u);
  EXPECT_THROW(parse(rows(10), RandomFraction{1.0, 1}), Error);
  EXPECT_THROW(parse(rows(10), RandomFraction{0.0, 1}), Error);
}

TEST(RandomSplit, DeterministicAndSeedSensitive) {
  const Manifest base = parse(rows(200, true));
  const Manifest a = random_split(base, 0.7, 3), b = random_split(base, 0.7, 3);
  const Manifest c = random_split(base, 0.7, 4);
  bool differs = false;
  for (std::size_t i = 0; i < base.records.size(); ++i) {
    EXPECT_EQ(a.records[i].split, b.records[i].split);
    differs |= a.records[i].split != c.records[i].split;
    ASSERT_TRUE(a.records[i].split.has_value());
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.count(Split::Train) + a.count(Split::Test), base.records.size());
}

TEST(RandomSplit, IdentityGroupsStayTogether) {
  const Manifest m = parse(rows(300, false, 37), RandomFraction{0.78, 2, true});
  std::map<std::string, std::set<Split>> seen;
  for (const auto& r : m.records) seen[*r.identity].insert(*r.split);
  EXPECT_EQ(seen.size(), 37u);
  for (const auto& [ident, splits] : seen) EXPECT_EQ(splits.size(), 1u) << ident;
  EXPECT_GE(m.count(Split::Train), 234u);
  EXPECT_GT(m.count(Split::Test), 0u);
}

}  // namespace
}  // namespace reggap
