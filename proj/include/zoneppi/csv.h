// Copyright 2026 The zoneppi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZONEPPI_CSV_H_
#define ZONEPPI_CSV_H_

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace zoneppi::csv {

// Reads one logical record (RFC 4180 quoting, quoted fields may span lines).
// Returns nullopt at end of input. `line` is advanced by the number of
// physical lines consumed.
std::optional<std::vector<std::string>> read_row(std::istream& in,
                                                 std::size_t& line);

// Quotes a field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace zoneppi::csv

#endif  // ZONEPPI_CSV_H_
