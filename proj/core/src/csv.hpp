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

#ifndef REGGAP_SRC_CSV_HPP
#define REGGAP_SRC_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace reggap::detail {

/// Splits one line on commas. Fields may be wrapped in double quotes; a
/// doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::string trim(std::string_view s);

}  // namespace reggap::detail

#endif  // REGGAP_SRC_CSV_HPP
