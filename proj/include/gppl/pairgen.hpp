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

#ifndef GPPL_PAIRGEN_HPP
#define GPPL_PAIRGEN_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gppl/corpus.hpp"
#include "gppl/csv.hpp"
#include "gppl/errors.hpp"
#include "gppl/random.hpp"

namespace gppl {

/// Ordered judgment: `better_id` is funnier than `worse_id`.
struct PreferencePair {
  std::string worse_id;
  std::string better_id;

  friend bool operator==(const PreferencePair&,
                         const PreferencePair&) = default;
};

struct PairGenConfig {
  long cap_per_better = 500;   // max retained pairs per funnier instance
  double keep_fraction = 1.0;  // random fraction kept after capping, (0, 1]
  std::uint64_t seed = 0;

  void validate() const {
    if (cap_per_better < 1) {
      throw ValidationError("cap_per_better must be >= 1");
    }
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
      throw ValidationError("keep_fraction must be in (0, 1]");
    }
  }
};

/// Instances sharing one gold score, in ascending score order.
struct ScoreLevel {
  double score = 0.0;
  std::vector<std::string> ids;  // dataset order within the level
};

/// Groups instances by gold score. Every instance must have one.
inline std::vector<ScoreLevel> score_levels(const Dataset& dataset) {
  std::map<double, std::vector<std::string>> by_score;
  for (const Instance& inst : dataset) {
    if (!inst.gold_score) {
      throw ValidationError("instance '" + inst.id + "' has no gold score");
    }
    by_score[*inst.gold_score].push_back(inst.id);
  }
  std::vector<ScoreLevel> levels;
  levels.reserve(by_score.size());
  for (auto& [score, ids] : by_score) {
    levels.push_back(ScoreLevel{score, std::move(ids)});
  }
  return levels;
}

/// Every cross pair between adjacent score levels, lower level as the worse
/// element. The transitive closure of this set recovers the full order; no
/// pair skips a level.
inline std::vector<PreferencePair> generate_minimal_pairs(
    std::span<const ScoreLevel> levels) {
  if (levels.empty()) {
    throw ValidationError("generate_minimal_pairs: no score levels");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i - 1].score < levels[i].score)) {
      throw ValidationError(
          "generate_minimal_pairs: levels not sorted ascending");
    }
  }
  std::vector<PreferencePair> pairs;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const ScoreLevel& lower = levels[i];
    const ScoreLevel& upper = levels[i + 1];
    for (const std::string& worse : lower.ids) {
      for (const std::string& better : upper.ids) {
        pairs.push_back(PreferencePair{worse, better});
      }
    }
  }
  return pairs;
}

struct SubsampleReport {
  std::size_t input_count = 0;
  std::size_t after_cap = 0;
  std::size_t after_fraction = 0;
};

/// Stage 1 caps how often each instance appears as the funnier element
/// (uniform choice without replacement among its pairs); stage 2 keeps a
/// uniform random fraction of the capped set (floor, but at least one pair
/// when the input is non-empty). Survivors keep their input order.
inline std::vector<PreferencePair> subsample_pairs(
    std::span<const PreferencePair> pairs, const PairGenConfig& config,
    SubsampleReport* report = nullptr) {
  config.validate();
  Rng rng(config.seed);

  std::unordered_map<std::string, std::vector<std::size_t>> by_better;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_better[pairs[i].better_id].push_back(i);
  }

  std::vector<char> keep(pairs.size(), 1);
  // Deterministic processing order: first appearance of each better_id.
  std::vector<const std::vector<std::size_t>*> groups;
  {
    std::unordered_map<std::string, bool> seen;
    for (const PreferencePair& p : pairs) {
      if (!seen[p.better_id]) {
        seen[p.better_id] = true;
        groups.push_back(&by_better[p.better_id]);
      }
    }
  }
  for (const auto* group : groups) {
    const std::size_t n = group->size();
    if (n <= static_cast<std::size_t>(config.cap_per_better)) continue;
    for (std::size_t idx : *group) keep[idx] = 0;
    const auto chosen = sample_without_replacement(
        n, static_cast<std::size_t>(config.cap_per_better), rng);
    for (std::size_t c : chosen) keep[(*group)[c]] = 1;
  }

  std::vector<std::size_t> capped;
  capped.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) capped.push_back(i);
  }

  std::size_t target =
      static_cast<std::size_t>(static_cast<double>(capped.size()) *
                               config.keep_fraction);
  if (target == 0 && !capped.empty()) target = 1;

  std::vector<PreferencePair> out;
  out.reserve(target);
  if (target >= capped.size()) {
    for (std::size_t i : capped) out.push_back(pairs[i]);
  } else {
    const auto chosen = sample_without_replacement(capped.size(), target, rng);
    for (std::size_t c : chosen) out.push_back(pairs[capped[c]]);
  }

  if (report) {
    report->input_count = pairs.size();
    report->after_cap = capped.size();
    report->after_fraction = out.size();
  }
  return out;
}

/// Pairs file: TSV with header worse_id<TAB>better_id.
inline std::string pairs_to_tsv(std::span<const PreferencePair> pairs) {
  std::string out = "worse_id\tbetter_id\n";
  for (const PreferencePair& p : pairs) {
    if (p.worse_id.find_first_of("\t\n") != std::string::npos ||
        p.better_id.find_first_of("\t\n") != std::string::npos) {
      throw ValidationError("pair ids contain tab or newline");
    }
    out += p.worse_id;
    out += '\t';
    out += p.better_id;
    out += '\n';
  }
  return out;
}

inline void save_pairs(std::span<const PreferencePair> pairs,
                       const std::string& path) {
  write_file(path, pairs_to_tsv(pairs));
}

inline std::vector<PreferencePair> parse_pairs_tsv(
    std::string_view content, const std::string& source_name) {
  const auto lines = split_lines(content);
  if (lines.empty() || lines[0] != "worse_id\tbetter_id") {
    throw ValidationError(source_name +
                          ": missing 'worse_id\\tbetter_id' header");
  }
  std::vector<PreferencePair> pairs;
  pairs.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_tabs(lines[r]);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ValidationError(source_name + " row " + std::to_string(r + 1) +
                            ": expected worse_id<TAB>better_id");
    }
    if (fields[0] == fields[1]) {
      throw ValidationError(source_name + " row " + std::to_string(r + 1) +
                            ": pair compares an instance with itself");
    }
    pairs.push_back(
        PreferencePair{std::string(fields[0]), std::string(fields[1])});
  }
  return pairs;
}

inline std::vector<PreferencePair> load_pairs(const std::string& path) {
  return parse_pairs_tsv(read_file(path), path);
}

}  // namespace gppl

#endif  // GPPL_PAIRGEN_HPP
