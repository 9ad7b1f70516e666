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

#ifndef GPPL_CORPUS_HPP
#define GPPL_CORPUS_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gppl/csv.hpp"
#include "gppl/errors.hpp"
#include "gppl/utf8.hpp"

namespace gppl {

/// Ordinal vote counts for one instance: how many annotators said
/// "not humour" and how many gave each numeric rating 1..5.
struct AnnotationRecord {
  long votes_not_humour = 0;
  std::array<long, 5> votes = {0, 0, 0, 0, 0};  // index k-1 holds rating k

  long numeric_total() const {
    long n = 0;
    for (long v : votes) n += v;
    return n;
  }
  long weighted_sum() const {
    long s = 0;
    for (std::size_t k = 0; k < votes.size(); ++k) {
      s += static_cast<long>(k + 1) * votes[k];
    }
    return s;
  }
  long total_votes() const { return votes_not_humour + numeric_total(); }
};

struct Instance {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;                 // filled by tokenization
  std::optional<std::vector<std::string>> lemmas;  // optional, user-supplied
  std::optional<AnnotationRecord> annotation;
  std::optional<bool> gold_label;
  std::optional<double> gold_score;  // 0 for non-humorous, else in [1, 5]
};

/// Ordered collection of instances with an id index. Immutable once loaded;
/// safe for concurrent reads.
class Dataset {
 public:
  void add(Instance inst) {
    auto [it, inserted] = index_.emplace(inst.id, instances_.size());
    if (!inserted) {
      throw ValidationError("duplicate instance id '" + inst.id + "'");
    }
    instances_.push_back(std::move(inst));
  }

  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }
  Instance& operator[](std::size_t i) { return instances_[i]; }

  const Instance* find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &instances_[it->second];
  }

  auto begin() const { return instances_.begin(); }
  auto end() const { return instances_.end(); }
  auto begin() { return instances_.begin(); }
  auto end() { return instances_.end(); }

 private:
  std::vector<Instance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Average numeric rating; 0 by definition for the negative class.
inline double average_funniness(const AnnotationRecord& record,
                                bool is_humorous) {
  if (!is_humorous) return 0.0;
  const long n = record.numeric_total();
  if (n == 0) {
    throw ValidationError(
        "average funniness undefined: humorous instance has no numeric votes");
  }
  return static_cast<double>(record.weighted_sum()) / static_cast<double>(n);
}

enum class CorpusFormat { haha_csv, plain_tsv };

struct LoadOptions {
  /// Strict mode turns class-membership warnings (vote-count minimums,
  /// out-of-range scores) into load errors. Off by default: shared-task
  /// files contain edge rows and the pipeline must not drop data silently.
  bool strict = false;
  std::vector<std::string>* warnings = nullptr;
};

namespace detail {

inline void report(const LoadOptions& opts, const std::string& msg) {
  if (opts.strict) throw ValidationError(msg);
  if (opts.warnings) opts.warnings->push_back(msg);
}

inline void check_class_invariants(const Instance& inst,
                                   const LoadOptions& opts,
                                   const std::string& where) {
  if (!inst.annotation || !inst.gold_label) return;
  const AnnotationRecord& rec = *inst.annotation;
  if (*inst.gold_label) {
    if (rec.numeric_total() < 3 || rec.total_votes() < 5) {
      report(opts, where + ": positive-class instance '" + inst.id +
                       "' has fewer than 3 numeric votes or 5 total votes");
    }
  } else if (rec.votes_not_humour < 3) {
    report(opts, where + ": negative-class instance '" + inst.id +
                     "' has fewer than 3 'not humour' votes");
  }
}

inline const std::array<std::string, 10>& haha_csv_header() {
  static const std::array<std::string, 10> header = {
      "id",      "text",    "is_humorous", "votes_no",
      "votes_1", "votes_2", "votes_3",     "votes_4",
      "votes_5", "funniness_average"};
  return header;
}

}  // namespace detail

/// haha_csv: id,text,is_humorous,votes_no,votes_1..votes_5,funniness_average
/// with a mandatory header row and RFC 4180 quoting on the text field.
/// funniness_average may be empty; it is then computed from the votes.
inline Dataset load_instances_haha_csv(std::string_view content,
                                       const std::string& source_name,
                                       const LoadOptions& opts = {}) {
  const auto rows = parse_csv(content, source_name);
  if (rows.empty()) {
    throw ValidationError(source_name + ": missing header row");
  }
  const auto& expected = detail::haha_csv_header();
  const CsvRow& header = rows[0];
  if (header.size() != expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    throw ValidationError(source_name +
                          ": header does not match haha_csv format");
  }

  Dataset dataset;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string where = source_name + " row " + std::to_string(r + 1);
    if (row.size() != expected.size()) {
      throw ValidationError(where + ": expected " +
                            std::to_string(expected.size()) + " fields, got " +
                            std::to_string(row.size()));
    }
    Instance inst;
    inst.id = row[0];
    if (inst.id.empty()) throw ValidationError(where + ": empty id");
    inst.text = row[1];
    if (!utf8::is_valid(inst.text)) {
      throw ValidationError(where + ": text is not valid UTF-8");
    }
    const long humor_flag = parse_count(row[2], where + " column is_humorous");
    if (humor_flag != 0 && humor_flag != 1) {
      throw ValidationError(where + ": is_humorous must be 0 or 1");
    }
    inst.gold_label = humor_flag == 1;

    AnnotationRecord rec;
    rec.votes_not_humour = parse_count(row[3], where + " column votes_no");
    for (int k = 0; k < 5; ++k) {
      rec.votes[static_cast<std::size_t>(k)] = parse_count(
          row[static_cast<std::size_t>(4 + k)],
          where + " column votes_" + std::to_string(k + 1));
    }
    inst.annotation = rec;

    if (!row[9].empty()) {
      inst.gold_score = parse_double(row[9], where + " column funniness_average");
    } else if (*inst.gold_label && rec.numeric_total() == 0) {
      detail::report(opts, where + ": humorous instance '" + inst.id +
                               "' has no numeric votes; gold score left unset");
    } else {
      inst.gold_score = average_funniness(rec, *inst.gold_label);
    }
    if (inst.gold_score &&
        !(*inst.gold_score == 0.0 ||
          (*inst.gold_score >= 1.0 && *inst.gold_score <= 5.0))) {
      detail::report(opts, where + ": gold score " +
                               format_double(*inst.gold_score) +
                               " outside {0} U [1,5]");
    }
    if (inst.gold_score && (*inst.gold_score > 0.0) != *inst.gold_label) {
      detail::report(opts, where + ": gold score " +
                               format_double(*inst.gold_score) +
                               " inconsistent with class label");
    }
    detail::check_class_invariants(inst, opts, where);
    try {
      dataset.add(std::move(inst));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return dataset;
}

/// plain_tsv: id<TAB>text<TAB>gold_score, header required, score optional.
inline Dataset load_instances_plain_tsv(std::string_view content,
                                        const std::string& source_name,
                                        const LoadOptions& opts = {}) {
  const auto lines = split_lines(content);
  if (lines.empty()) {
    throw ValidationError(source_name + ": missing header row");
  }
  const auto header = split_tabs(lines[0]);
  if (header.size() < 2 || header.size() > 3 || header[0] != "id" ||
      header[1] != "text" || (header.size() == 3 && header[2] != "gold_score")) {
    throw ValidationError(source_name +
                          ": header does not match plain_tsv format");
  }

  Dataset dataset;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::string where = source_name + " row " + std::to_string(r + 1);
    const auto fields = split_tabs(lines[r]);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ValidationError(where + ": expected 2 or 3 tab-separated fields");
    }
    Instance inst;
    inst.id = std::string(fields[0]);
    if (inst.id.empty()) throw ValidationError(where + ": empty id");
    inst.text = std::string(fields[1]);
    if (!utf8::is_valid(inst.text)) {
      throw ValidationError(where + ": text is not valid UTF-8");
    }
    if (fields.size() == 3 && !fields[2].empty()) {
      inst.gold_score = parse_double(fields[2], where + " column gold_score");
      inst.gold_label = *inst.gold_score > 0.0;
      if (!(*inst.gold_score == 0.0 ||
            (*inst.gold_score >= 1.0 && *inst.gold_score <= 5.0))) {
        detail::report(opts, where + ": gold score " +
                                 format_double(*inst.gold_score) +
                                 " outside {0} U [1,5]");
      }
    }
    try {
      dataset.add(std::move(inst));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return dataset;
}

inline Dataset load_instances(const std::string& path, CorpusFormat format,
                              const LoadOptions& opts = {}) {
  const std::string content = read_file(path);
  switch (format) {
    case CorpusFormat::haha_csv:
      return load_instances_haha_csv(content, path, opts);
    case CorpusFormat::plain_tsv:
      return load_instances_plain_tsv(content, path, opts);
  }
  throw ValidationError("unknown corpus format");
}

inline std::string instances_to_haha_csv(const Dataset& dataset) {
  std::string out = "id,text,is_humorous,votes_no,votes_1,votes_2,votes_3,"
                    "votes_4,votes_5,funniness_average\n";
  for (const Instance& inst : dataset) {
    const AnnotationRecord rec = inst.annotation.value_or(AnnotationRecord{});
    out += csv_quote(inst.id);
    out += ',';
    out += csv_quote(inst.text);
    out += ',';
    out += inst.gold_label.value_or(false) ? '1' : '0';
    out += ',';
    out += std::to_string(rec.votes_not_humour);
    for (long v : rec.votes) {
      out += ',';
      out += std::to_string(v);
    }
    out += ',';
    if (inst.gold_score) out += format_double(*inst.gold_score);
    out += '\n';
  }
  return out;
}

inline std::string instances_to_plain_tsv(const Dataset& dataset) {
  std::string out = "id\ttext\tgold_score\n";
  for (const Instance& inst : dataset) {
    if (inst.id.find_first_of("\t\n") != std::string::npos ||
        inst.text.find_first_of("\t\n") != std::string::npos) {
      throw ValidationError("instance '" + inst.id +
                            "' contains a tab or newline; cannot write TSV");
    }
    out += inst.id;
    out += '\t';
    out += inst.text;
    out += '\t';
    if (inst.gold_score) out += format_double(*inst.gold_score);
    out += '\n';
  }
  return out;
}

inline void save_instances(const Dataset& dataset, const std::string& path,
                           CorpusFormat format) {
  switch (format) {
    case CorpusFormat::haha_csv:
      write_file(path, instances_to_haha_csv(dataset));
      return;
    case CorpusFormat::plain_tsv:
      write_file(path, instances_to_plain_tsv(dataset));
      return;
  }
  throw ValidationError("unknown corpus format");
}

}  // namespace gppl

#endif  // GPPL_CORPUS_HPP
