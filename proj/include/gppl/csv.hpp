/*
 * Copyright 2026 The gppl authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GPPL_CSV_HPP
#define GPPL_CSV_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gppl/errors.hpp"

namespace gppl {

/// Shortest decimal string that round-trips the double exactly. All numeric
/// file output goes through here so that reruns are byte-identical.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ValidationError(context + ": cannot parse number '" +
                          std::string(s) + "'");
  }
  return value;
}

inline long parse_count(std::string_view s, const std::string& context) {
  long value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || value < 0) {
    throw ValidationError(context + ": cannot parse non-negative count '" +
                          std::string(s) + "'");
  }
  return value;
}

/// One logical CSV record (a row may span physical lines inside quotes).
using CsvRow = std::vector<std::string>;

/// RFC 4180-style parser: quoted fields, doubled quotes, embedded commas and
/// newlines. CRLF and lone CR are normalized to LF inside field values.
inline std::vector<CsvRow> parse_csv(std::string_view content,
                                     const std::string& source_name) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  std::size_t line = 1;

  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    row_started = false;
  };

  std::size_t i = 0;
  while (i < content.size()) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else if (c == '\r') {
        field.push_back('\n');
        ++line;
        i += (i + 1 < content.size() && content[i + 1] == '\n') ? 2 : 1;
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
        ++i;
      }
    } else {
      switch (c) {
        case '"':
          if (!field.empty()) {
            throw ValidationError(source_name + " line " +
                                  std::to_string(line) +
                                  ": quote in the middle of a bare field");
          }
          in_quotes = true;
          row_started = true;
          ++i;
          break;
        case ',':
          end_field();
          row_started = true;
          ++i;
          break;
        case '\r':
          ++line;
          end_row();
          i += (i + 1 < content.size() && content[i + 1] == '\n') ? 2 : 1;
          break;
        case '\n':
          ++line;
          end_row();
          ++i;
          break;
        default:
          field.push_back(c);
          row_started = true;
          ++i;
          break;
      }
    }
  }
  if (in_quotes) {
    throw ValidationError(source_name + ": unterminated quoted field");
  }
  if (row_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

inline std::string csv_quote(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ValidationError("write failed: " + path);
}

/// Splits one line on tabs. TSV files here never contain embedded tabs or
/// newlines in fields; writers enforce that.
inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

/// Splits file content into lines, treating \r\n and \n as separators and
/// dropping a trailing empty line.
inline std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= content.size()) {
    if (start == content.size()) {
      break;
    }
    std::size_t nl = content.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(content.substr(start));
      break;
    }
    std::size_t end = nl;
    if (end > start && content[end - 1] == '\r') --end;
    lines.push_back(content.substr(start, end - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace gppl

#endif  // GPPL_CSV_HPP
