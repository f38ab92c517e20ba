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

#include "zoneppi/csv.h"

namespace zoneppi::csv {

std::optional<std::vector<std::string>> read_row(std::istream& in,
                                                 std::size_t& line) {
  std::string physical;
  if (!std::getline(in, physical)) return std::nullopt;
  ++line;

  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < physical.size(); ++i) {
      const char c = physical[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < physical.size() && physical[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r' && i + 1 == physical.size()) {
        // CRLF line ending
      } else {
        field.push_back(c);
      }
    }
    if (!quoted) break;
    if (!std::getline(in, physical)) break;  // unterminated quote: keep what we have
    ++line;
    field.push_back('\n');
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace zoneppi::csv
