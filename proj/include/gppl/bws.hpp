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

#ifndef GPPL_BWS_HPP
#define GPPL_BWS_HPP

#include <map>
#include <span>
#include <string>
#include <string_view>

#include "gppl/csv.hpp"
#include "gppl/pairgen.hpp"

namespace gppl {

/// Best-worst-scaling counting scores. A pair is the degenerate 2-element
/// case: the preferred instance counts as "best", the other as "worst", so
/// score = (#best - #worst) / #appearances, in [-1, 1].
struct BwsScores {
  struct Entry {
    double score = 0.0;
    long appearances = 0;
  };
  std::map<std::string, Entry> by_id;  // ordered for deterministic output

  /// Instances never compared score 0 by convention.
  double score_or_zero(std::string_view id) const {
    const auto it = by_id.find(std::string(id));
    return it == by_id.end() ? 0.0 : it->second.score;
  }
};

inline BwsScores bws_scores(std::span<const PreferencePair> pairs) {
  std::map<std::string, std::pair<long, long>> counts;  // id -> (best, worst)
  for (const PreferencePair& p : pairs) {
    counts[p.better_id].first += 1;
    counts[p.worse_id].second += 1;
  }
  BwsScores out;
  for (const auto& [id, c] : counts) {
    const long appearances = c.first + c.second;
    out.by_id[id] = BwsScores::Entry{
        static_cast<double>(c.first - c.second) /
            static_cast<double>(appearances),
        appearances};
  }
  return out;
}

inline std::string bws_to_csv(const BwsScores& scores) {
  std::string out = "id,score,appearances\n";
  for (const auto& [id, entry] : scores.by_id) {
    out += csv_quote(id);
    out += ',';
    out += format_double(entry.score);
    out += ',';
    out += std::to_string(entry.appearances);
    out += '\n';
  }
  return out;
}

inline void save_bws_csv(const BwsScores& scores, const std::string& path) {
  write_file(path, bws_to_csv(scores));
}

}  // namespace gppl

#endif  // GPPL_BWS_HPP
