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

#ifndef REGGAP_DATASET_HPP
#define REGGAP_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reggap/types.hpp"

namespace reggap {

/// Use the manifest's own split column; every row must carry one.
struct Preassigned {};
/// The first k rows in file order train, the rest test.
struct SequentialFirstK {
  std::size_t k = 0;
};
/// Seeded shuffle; the first floor(n * train_frac) records train. With
/// group_by_identity, whole identities are assigned together (records
/// without an identity form their own group) until the train count reaches
/// the target.
struct RandomFraction {
  double train_frac = 0.78;
  std::uint64_t seed = 0;
  bool group_by_identity = false;
};

using SplitPolicy = std::variant<Preassigned, SequentialFirstK, RandomFraction>;

/// Parses `preassigned`, `sequential:K`, `random:FRAC[:SEED]` or
/// `random-identity:FRAC[:SEED]`. Throws InvalidConfig.
SplitPolicy parse_split_policy(std::string_view text);
std::string to_string(const SplitPolicy& policy);

struct Manifest {
  std::string name;
  std::vector<BmiRecord> records;
  SplitPolicy split_policy;
  /// Directory that relative image paths are resolved against.
  std::filesystem::path base_dir;

  std::vector<const BmiRecord*> records_in(Split split) const;
  std::size_t count(Split split) const;
  const BmiRecord* find(std::string_view id) const;
};

std::filesystem::path resolve_image(const Manifest& manifest, const BmiRecord& record);

struct LoadOptions {
  bool check_images = true;
};

/// Header columns, in order.
inline constexpr std::string_view kManifestHeader = "id,image_path,bmi,gender,identity,split";

/// Reads a manifest CSV (header `id,image_path,bmi,gender,identity,split`,
/// empty optional fields allowed) and applies `policy`.
/// Throws MalformedRow (with line number), DuplicateId, MissingImage.
Manifest load_manifest(const std::filesystem::path& path, const SplitPolicy& policy = Preassigned{},
                       const LoadOptions& options = {});

Manifest parse_manifest_csv(std::string_view text, std::string name,
                            std::filesystem::path base_dir, const SplitPolicy& policy,
                            const LoadOptions& options = {});

std::string format_manifest_csv(const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Returns a copy with splits assigned per `policy`.
Manifest apply_split(Manifest manifest, const SplitPolicy& policy);
Manifest random_split(Manifest manifest, double train_frac, std::uint64_t seed,
                      bool group_by_identity = false);

}  // namespace reggap

#endif  // REGGAP_DATASET_HPP
