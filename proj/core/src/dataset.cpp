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

#include "reggap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "reggap/binary_io.hpp"
#include "reggap/error.hpp"
#include "reggap/rng.hpp"

namespace reggap {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void malformed(const std::string& name, int line, const std::string& why) {
  fail(ErrorCode::MalformedRow, name + ":" + std::to_string(line) + ": " + why);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidConfig, "bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

Manifest assign_first_k(Manifest m, std::size_t k) {
  if (k > m.records.size()) {
    fail(ErrorCode::InvalidConfig, "sequential split of " + std::to_string(k) +
                                       " exceeds " + std::to_string(m.records.size()) +
                                       " records");
  }
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    m.records[i].split = i < k ? Split::Train : Split::Test;
  }
  m.split_policy = SequentialFirstK{k};
  return m;
}

}  // namespace

SplitPolicy parse_split_policy(std::string_view text) {
  if (text == "preassigned" || text.empty()) return Preassigned{};
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (kind == "sequential") {
    return SequentialFirstK{static_cast<std::size_t>(parse_u64(rest, "split size"))};
  }
  if (kind == "random" || kind == "random-identity") {
    RandomFraction r;
    r.group_by_identity = kind == "random-identity";
    const auto colon2 = rest.find(':');
    const auto frac = parse_double(rest.substr(0, colon2));
    if (!frac) fail(ErrorCode::InvalidConfig, "bad train fraction in '" + std::string(text) + "'");
    r.train_frac = *frac;
    if (colon2 != std::string_view::npos) r.seed = parse_u64(rest.substr(colon2 + 1), "split seed");
    return r;
  }
  fail(ErrorCode::InvalidConfig, "unknown split policy '" + std::string(text) + "'");
}

std::string to_string(const SplitPolicy& policy) {
  return std::visit(Overloaded{
                        [](const Preassigned&) { return std::string("preassigned"); },
                        [](const SequentialFirstK& s) { return "sequential:" + std::to_string(s.k); },
                        [](const RandomFraction& r) {
                          std::ostringstream ss;
                          ss << (r.group_by_identity ? "random-identity:" : "random:")
                             << r.train_frac << ":" << r.seed;
                          return ss.str();
                        },
                    },
                    policy);
}

std::vector<const BmiRecord*> Manifest::records_in(Split split) const {
  std::vector<const BmiRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

std::size_t Manifest::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                [&](const BmiRecord& r) { return r.split == split; }));
}

const BmiRecord* Manifest::find(std::string_view id) const {
  const auto it = std::find_if(records.begin(), records.end(),
                               [&](const BmiRecord& r) { return r.id == id; });
  return it == records.end() ? nullptr : &*it;
}

std::filesystem::path resolve_image(const Manifest& manifest, const BmiRecord& record) {
  if (record.image_ref.is_absolute() || manifest.base_dir.empty()) return record.image_ref;
  return manifest.base_dir / record.image_ref;
}

Manifest parse_manifest_csv(std::string_view text, std::string name,
                            std::filesystem::path base_dir, const SplitPolicy& policy,
                            const LoadOptions& options) {
  Manifest m;
  m.name = std::move(name);
  m.base_dir = std::move(base_dir);

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) malformed(m.name, 1, "empty manifest, header expected");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    malformed(m.name, line_no, "header must be '" + std::string(kManifestHeader) + "'");
  }

  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6) {
      malformed(m.name, line_no, "expected 6 fields, found " + std::to_string(f.size()));
    }
    BmiRecord r;
    r.id = detail::trim(f[0]);
    if (r.id.empty()) malformed(m.name, line_no, "empty id");
    if (r.id.size() > 0xFFFF) malformed(m.name, line_no, "id longer than 65535 bytes");
    r.image_ref = detail::trim(f[1]);
    if (r.image_ref.empty()) malformed(m.name, line_no, "empty image_path");
    const auto bmi = parse_double(detail::trim(f[2]));
    if (!bmi || !std::isfinite(*bmi)) {
      malformed(m.name, line_no, "bmi '" + f[2] + "' is not a number");
    }
    if (!is_plausible_bmi(*bmi)) {
      malformed(m.name, line_no, "bmi " + f[2] + " outside the plausible range (10, 100)");
    }
    r.bmi = *bmi;
    if (const auto g = detail::trim(f[3]); !g.empty()) {
      r.gender = gender_from_string(g);
      if (!r.gender) malformed(m.name, line_no, "gender '" + g + "' is not male/female");
    }
    if (const auto ident = detail::trim(f[4]); !ident.empty()) r.identity = ident;
    if (const auto s = detail::trim(f[5]); !s.empty()) {
      r.split = split_from_string(s);
      if (!r.split) malformed(m.name, line_no, "split '" + s + "' is not train/test");
    }
    if (!seen.insert(r.id).second) {
      fail(ErrorCode::DuplicateId, m.name + ":" + std::to_string(line_no) +
                                       ": duplicate id '" + r.id + "'");
    }
    if (options.check_images) {
      const auto path = resolve_image(m, r);
      if (!std::filesystem::exists(path)) {
        fail(ErrorCode::MissingImage, m.name + ":" + std::to_string(line_no) + ": " +
                                          path.string() + " does not exist");
      }
    }
    m.records.push_back(std::move(r));
  }
  return apply_split(std::move(m), policy);
}

Manifest load_manifest(const std::filesystem::path& path, const SplitPolicy& policy,
                       const LoadOptions& options) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::MalformedRow, "manifest " + path.string() + " does not exist");
  }
  return parse_manifest_csv(read_text_file(path), path.string(), path.parent_path(), policy,
                            options);
}

std::string format_manifest_csv(const Manifest& manifest) {
  std::string out(kManifestHeader);
  out += "\n";
  for (const auto& r : manifest.records) {
    std::ostringstream bmi;
    bmi.precision(17);
    bmi << r.bmi;
    out += detail::csv_escape(r.id) + "," + detail::csv_escape(r.image_ref.generic_string()) +
           "," + bmi.str() + "," + (r.gender ? std::string(to_string(*r.gender)) : "") + "," +
           (r.identity ? detail::csv_escape(*r.identity) : "") + "," +
           (r.split ? std::string(to_string(*r.split)) : "") + "\n";
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_text_file(path, format_manifest_csv(manifest));
}

Manifest random_split(Manifest manifest, double train_frac, std::uint64_t seed,
                      bool group_by_identity) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    fail(ErrorCode::InvalidConfig, "train fraction must lie in (0, 1)");
  }
  const std::size_t n = manifest.records.size();
  const auto target =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_frac + 1e-9));

  // Groups in first-appearance order; singleton groups without identity.
  std::vector<std::vector<std::size_t>> groups;
  if (group_by_identity) {
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ident = manifest.records[i].identity;
      if (!ident) {
        groups.push_back({i});
        continue;
      }
      auto [it, inserted] = group_of.emplace(*ident, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  }

  Rng rng(seed);
  rng.shuffle(std::span(groups));
  std::size_t train = 0;
  for (const auto& g : groups) {
    const Split s = train < target ? Split::Train : Split::Test;
    for (std::size_t i : g) manifest.records[i].split = s;
    if (s == Split::Train) train += g.size();
  }
  manifest.split_policy = RandomFraction{train_frac, seed, group_by_identity};
  return manifest;
}

Manifest apply_split(Manifest manifest, const SplitPolicy& policy) {
  return std::visit(
      Overloaded{
          [&](const Preassigned&) {
            for (std::size_t i = 0; i < manifest.records.size(); ++i) {
              if (!manifest.records[i].split) {
                fail(ErrorCode::MalformedRow,
                     manifest.name + ": record '" + manifest.records[i].id +
                         "' has no split and the policy is preassigned");
              }
            }
            manifest.split_policy = Preassigned{};
            return std::move(manifest);
          },
          [&](const SequentialFirstK& s) { return assign_first_k(std::move(manifest), s.k); },
          [&](const RandomFraction& r) {
            return random_split(std::move(manifest), r.train_frac, r.seed, r.group_by_identity);
          },
      },
      policy);
}

}  // namespace reggap
