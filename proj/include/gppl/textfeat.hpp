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

#ifndef GPPL_TEXTFEAT_HPP
#define GPPL_TEXTFEAT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gppl/corpus.hpp"
#include "gppl/csv.hpp"
#include "gppl/errors.hpp"
#include "gppl/features.hpp"
#include "gppl/utf8.hpp"

namespace gppl {

namespace detail {

inline bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\f' || cp == U'\v' || cp == 0x00A0;
}

/// Punctuation stripped from token edges. Deliberately excludes '#', '@'
/// and '-' (protected token prefixes) so "(#jaja)" keeps its hashtag.
inline bool is_strippable_punct(char32_t cp) {
  switch (cp) {
    case U'!': case U'"': case U'$': case U'%': case U'&': case U'\'':
    case U'(': case U')': case U'*': case U'+': case U',': case U'.':
    case U'/': case U':': case U';': case U'<': case U'=': case U'>':
    case U'?': case U'[': case U'\\': case U']': case U'^': case U'_':
    case U'`': case U'{': case U'|': case U'}': case U'~':
    case 0x00A1:  // inverted exclamation
    case 0x00AB:  // left guillemet
    case 0x00BB:  // right guillemet
    case 0x00BF:  // inverted question mark
    case 0x2013: case 0x2014:              // dashes
    case 0x2018: case 0x2019:              // single quotes
    case 0x201C: case 0x201D:              // double quotes
    case 0x2026:                           // ellipsis
      return true;
    default:
      return false;
  }
}

inline bool has_protected_prefix(std::string_view token) {
  return token.starts_with("#") || token.starts_with("@") ||
         token.starts_with("http") || token.starts_with("www") ||
         token.starts_with("-");
}

}  // namespace detail

/// Whitespace split followed by separation of leading/trailing punctuation
/// into standalone tokens. Chunks beginning with #, @, http, www or - are
/// kept whole, as are exact members of `keep_whole` (e.g. emoticons, whose
/// characters would otherwise be split apart).
inline std::vector<std::string> tokenize(
    std::string_view text,
    const std::unordered_set<std::string>& keep_whole) {
  std::vector<std::string> out;
  std::vector<char32_t> chunk;
  std::string buf;
  auto flush = [&] {
    if (chunk.empty()) return;
    buf.clear();
    for (char32_t cp : chunk) utf8::append(buf, cp);
    if (detail::has_protected_prefix(buf) || keep_whole.contains(buf)) {
      out.push_back(buf);
    } else {
      std::size_t lo = 0;
      std::size_t hi = chunk.size();
      while (lo < hi && detail::is_strippable_punct(chunk[lo])) ++lo;
      while (hi > lo && detail::is_strippable_punct(chunk[hi - 1])) --hi;
      std::string piece;
      for (std::size_t i = 0; i < lo; ++i) {
        piece.clear();
        utf8::append(piece, chunk[i]);
        out.push_back(piece);
      }
      if (lo < hi) {
        piece.clear();
        for (std::size_t i = lo; i < hi; ++i) utf8::append(piece, chunk[i]);
        out.push_back(piece);
      }
      for (std::size_t i = hi; i < chunk.size(); ++i) {
        piece.clear();
        utf8::append(piece, chunk[i]);
        out.push_back(piece);
      }
    }
    chunk.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = utf8::decode(text, pos);
    if (cp == utf8::kInvalid) {
      throw ValidationError("tokenize: input is not valid UTF-8");
    }
    if (detail::is_space_cp(cp)) {
      flush();
    } else {
      chunk.push_back(cp);
    }
  }
  flush();
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  static const std::unordered_set<std::string> empty;
  return tokenize(text, empty);
}

// ---------------------------------------------------------------------------
// Resource tables. All are immutable after load and shareable across threads.
// ---------------------------------------------------------------------------

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Eigen::Index dimension) : dimension_(dimension) {}

  Eigen::Index dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  void add(const std::string& token, Eigen::VectorXd vec) {
    if (vec.size() != dimension_) {
      throw ValidationError("embedding for '" + token +
                            "' has wrong dimension");
    }
    if (!entries_.emplace(token, std::move(vec)).second) {
      throw ValidationError("duplicate embedding token '" + token + "'");
    }
    folded_.emplace(utf8::lowercase(token), token);  // first occurrence wins
  }

  /// Exact lookup, then case-folded fallback. Null when out of vocabulary.
  const Eigen::VectorXd* lookup(const std::string& token) const {
    auto it = entries_.find(token);
    if (it != entries_.end()) return &it->second;
    auto folded = folded_.find(utf8::lowercase(token));
    if (folded != folded_.end()) return &entries_.at(folded->second);
    return nullptr;
  }

 private:
  Eigen::Index dimension_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> entries_;
  std::unordered_map<std::string, std::string> folded_;
};

/// word2vec text format: header "count dim", then "token v1 ... vd".
inline EmbeddingTable load_embeddings(const std::string& path) {
  const std::string data = read_file(path);
  const std::vector<std::string_view> lines = split_lines(data);
  if (lines.empty()) throw ValidationError(path + ": empty embedding file");
  auto fields = [&](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ' ') {
        if (i > start) out.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    return out;
  };
  const auto header = fields(lines[0]);
  if (header.size() != 2) {
    throw ValidationError(path + ": malformed word2vec header");
  }
  const std::uint64_t count = parse_count(header[0], path + " header count");
  const std::uint64_t dim = parse_count(header[1], path + " header dim");
  if (dim == 0) throw ValidationError(path + ": embedding dimension is 0");
  EmbeddingTable table(static_cast<Eigen::Index>(dim));
  Eigen::VectorXd vec(static_cast<Eigen::Index>(dim));
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto f = fields(lines[ln]);
    if (f.size() != dim + 1) {
      throw ValidationError(path + " line " + std::to_string(ln + 1) +
                            ": expected token plus " + std::to_string(dim) +
                            " values");
    }
    for (std::uint64_t d = 0; d < dim; ++d) {
      vec[static_cast<Eigen::Index>(d)] =
          parse_double(f[d + 1], path + " line " + std::to_string(ln + 1));
    }
    table.add(std::string(f[0]), vec);
  }
  if (table.size() != count) {
    throw ValidationError(path + ": header promises " + std::to_string(count) +
                          " entries, file has " + std::to_string(table.size()));
  }
  return table;
}

enum class FrequencyMode { relative, raw, log_count };

inline std::string to_string(FrequencyMode mode) {
  switch (mode) {
    case FrequencyMode::relative: return "relative";
    case FrequencyMode::raw: return "raw";
    default: return "log";
  }
}

inline FrequencyMode frequency_mode_from_string(std::string_view s) {
  if (s == "relative") return FrequencyMode::relative;
  if (s == "raw") return FrequencyMode::raw;
  if (s == "log") return FrequencyMode::log_count;
  throw ValidationError("unknown frequency mode '" + std::string(s) + "'");
}

class FrequencyLexicon {
 public:
  void add(const std::string& token, double count) {
    if (!(count >= 0.0)) {
      throw ValidationError("negative frequency for token '" + token + "'");
    }
    if (!counts_.emplace(token, count).second) {
      throw ValidationError("duplicate frequency entry '" + token + "'");
    }
    total_ += count;
  }

  std::size_t size() const { return counts_.size(); }
  double total() const { return total_; }

  /// 0 for out-of-lexicon tokens under every mode.
  double value(const std::string& token, FrequencyMode mode) const {
    auto it = counts_.find(token);
    if (it == counts_.end()) return 0.0;
    switch (mode) {
      case FrequencyMode::raw: return it->second;
      case FrequencyMode::relative:
        return total_ > 0.0 ? it->second / total_ : 0.0;
      default: return std::log1p(it->second);
    }
  }

 private:
  std::unordered_map<std::string, double> counts_;
  double total_ = 0.0;
};

/// TSV `token<TAB>count`.
inline FrequencyLexicon load_frequency_lexicon(const std::string& path) {
  const std::string data = read_file(path);
  FrequencyLexicon lex;
  std::size_t ln = 0;
  for (std::string_view line : split_lines(data)) {
    ++ln;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 2) {
      throw ValidationError(path + " line " + std::to_string(ln) +
                            ": expected token<TAB>count");
    }
    lex.add(std::string(f[0]),
            parse_double(f[1], path + " line " + std::to_string(ln)));
  }
  return lex;
}

class PolysemyLexicon {
 public:
  void add(const std::string& lemma, std::uint64_t synsets) {
    if (synsets < 1) {
      throw ValidationError("synset count for '" + lemma + "' must be >= 1");
    }
    if (!counts_.emplace(lemma, static_cast<double>(synsets)).second) {
      throw ValidationError("duplicate polysemy entry '" + lemma + "'");
    }
    folded_.emplace(utf8::lowercase(lemma), static_cast<double>(synsets));
  }

  std::size_t size() const { return counts_.size(); }

  /// Exact lookup, then case-folded; 0 when absent.
  double value(const std::string& entry) const {
    auto it = counts_.find(entry);
    if (it != counts_.end()) return it->second;
    auto folded = folded_.find(utf8::lowercase(entry));
    return folded != folded_.end() ? folded->second : 0.0;
  }

 private:
  std::unordered_map<std::string, double> counts_;
  std::unordered_map<std::string, double> folded_;
};

/// TSV `lemma<TAB>synset_count`.
inline PolysemyLexicon load_polysemy_lexicon(const std::string& path) {
  const std::string data = read_file(path);
  PolysemyLexicon lex;
  std::size_t ln = 0;
  for (std::string_view line : split_lines(data)) {
    ++ln;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 2) {
      throw ValidationError(path + " line " + std::to_string(ln) +
                            ": expected lemma<TAB>synset_count");
    }
    lex.add(std::string(f[0]),
            parse_count(f[1], path + " line " + std::to_string(ln)));
  }
  return lex;
}

/// Built-in Western emoticon list; replaceable by a one-per-line file.
inline std::unordered_set<std::string> default_emoticons() {
  return {":)",  ":(",  ":D",  ":P",  ":p",  ":O",  ":o",  ":/",  ":|",
          ":*",  ":$",  ":3",  ";)",  ";D",  ";P",  ":-)", ":-(", ":-D",
          ":-P", ":-O", ":-/", ":-|", ":-*", ";-)", ":'(", ":'-(", ":\\",
          ":-\\", "=)",  "=(",  "=D",  "=P",  "xD",  "XD",  "xd",  "<3",
          "</3", "^^",  "^_^", "-_-", "o_O", "O_o"};
}

inline std::unordered_set<std::string> load_emoticons(
    const std::string& path) {
  std::unordered_set<std::string> out;
  const std::string data = read_file(path);
  for (std::string_view line : split_lines(data)) {
    if (!line.empty()) out.emplace(line);
  }
  if (out.empty()) throw ValidationError(path + ": empty emoticon list");
  return out;
}

// ---------------------------------------------------------------------------
// Per-instance feature computations.
// ---------------------------------------------------------------------------

/// Mean of in-vocabulary token vectors; zero vector when none match.
inline Eigen::VectorXd embedding_mean(std::span<const std::string> tokens,
                                      const EmbeddingTable& table) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dimension());
  Eigen::Index hits = 0;
  for (const std::string& tok : tokens) {
    if (const Eigen::VectorXd* vec = table.lookup(tok)) {
      sum += *vec;
      ++hits;
    }
  }
  if (hits > 0) sum /= static_cast<double>(hits);
  return sum;
}

/// Mean over all tokens with out-of-lexicon tokens contributing 0.
inline double mean_frequency(std::span<const std::string> tokens,
                             const FrequencyLexicon& lex,
                             FrequencyMode mode = FrequencyMode::relative) {
  if (tokens.empty()) return 0.0;
  double sum = 0.0;
  for (const std::string& tok : tokens) sum += lex.value(tok, mode);
  return sum / static_cast<double>(tokens.size());
}

/// Mean synset count over all entries (lemmas when available, else surface
/// forms), with entries absent from the lexicon contributing 0.
inline double mean_polysemy(std::span<const std::string> entries,
                            const PolysemyLexicon& lex) {
  if (entries.empty()) return 0.0;
  double sum = 0.0;
  for (const std::string& e : entries) sum += lex.value(e);
  return sum / static_cast<double>(entries.size());
}

struct DialogueFeatures {
  double turn_count = 0.0;
  double is_dialogue = 0.0;  // 1 iff turn_count > 2
};

inline DialogueFeatures dialogue_features(
    std::span<const std::string> tokens) {
  DialogueFeatures out;
  for (const std::string& tok : tokens) {
    if (!tok.empty() && tok.front() == '-') out.turn_count += 1.0;
  }
  out.is_dialogue = out.turn_count > 2.0 ? 1.0 : 0.0;
  return out;
}

struct SurfaceCounts {
  double hashtag_count = 0.0;
  double url_count = 0.0;
  double emoticon_count = 0.0;
  double char_count = 0.0;  // codepoints of the raw text
  double token_count = 0.0;
  double mean_token_length = 0.0;
  double exclamation_count = 0.0;  // '!' and U+00A1
  double punct_count = 0.0;        // . , ; ?
};

inline SurfaceCounts surface_counts(
    std::string_view text, std::span<const std::string> tokens,
    const std::unordered_set<std::string>& emoticons) {
  SurfaceCounts out;
  double length_sum = 0.0;
  for (const std::string& tok : tokens) {
    if (tok.starts_with("#")) out.hashtag_count += 1.0;
    if (tok.starts_with("www") || tok.starts_with("http")) {
      out.url_count += 1.0;
    }
    if (emoticons.contains(tok)) out.emoticon_count += 1.0;
    length_sum += static_cast<double>(utf8::codepoint_count(tok));
  }
  out.token_count = static_cast<double>(tokens.size());
  if (!tokens.empty()) {
    out.mean_token_length = length_sum / static_cast<double>(tokens.size());
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = utf8::decode(text, pos);
    if (cp == utf8::kInvalid) {
      throw ValidationError("surface_counts: input is not valid UTF-8");
    }
    out.char_count += 1.0;
    if (cp == U'!' || cp == 0x00A1) out.exclamation_count += 1.0;
    if (cp == U'.' || cp == U',' || cp == U';' || cp == U'?') {
      out.punct_count += 1.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full feature vector assembly.
// ---------------------------------------------------------------------------

struct FeatureResources {
  EmbeddingTable embeddings;
  FrequencyLexicon frequency;
  FrequencyMode frequency_mode = FrequencyMode::relative;
  PolysemyLexicon polysemy;
  std::unordered_set<std::string> emoticons = default_emoticons();
};

/// Fixed group order; every group after the embedding block is a scalar.
inline FeatureLayout feature_layout(Eigen::Index embedding_dim) {
  if (embedding_dim <= 0) {
    throw ValidationError("feature layout needs a positive embedding size");
  }
  FeatureLayout layout;
  auto push = [&](const char* name, Eigen::Index length) {
    layout.groups.push_back({name, layout.total, length});
    layout.total += length;
  };
  push("embedding_mean", embedding_dim);
  push("mean_frequency", 1);
  push("mean_polysemy", 1);
  push("turn_count", 1);
  push("is_dialogue", 1);
  push("hashtag_count", 1);
  push("url_count", 1);
  push("emoticon_count", 1);
  push("char_count", 1);
  push("token_count", 1);
  push("mean_token_length", 1);
  push("exclamation_count", 1);
  push("punct_count", 1);
  layout.validate();
  return layout;
}

/// Raw (unstandardized) feature vector for one tokenized instance.
inline Eigen::VectorXd featurize_raw(const Instance& inst,
                                     const FeatureResources& res) {
  const Eigen::Index dim = res.embeddings.dimension();
  Eigen::VectorXd out(dim + 12);
  out.head(dim) = embedding_mean(inst.tokens, res.embeddings);
  const std::span<const std::string> polysemy_entries =
      inst.lemmas ? std::span<const std::string>(*inst.lemmas)
                  : std::span<const std::string>(inst.tokens);
  const DialogueFeatures dia = dialogue_features(inst.tokens);
  const SurfaceCounts surf =
      surface_counts(inst.text, inst.tokens, res.emoticons);
  out[dim + 0] = mean_frequency(inst.tokens, res.frequency,
                                res.frequency_mode);
  out[dim + 1] = mean_polysemy(polysemy_entries, res.polysemy);
  out[dim + 2] = dia.turn_count;
  out[dim + 3] = dia.is_dialogue;
  out[dim + 4] = surf.hashtag_count;
  out[dim + 5] = surf.url_count;
  out[dim + 6] = surf.emoticon_count;
  out[dim + 7] = surf.char_count;
  out[dim + 8] = surf.token_count;
  out[dim + 9] = surf.mean_token_length;
  out[dim + 10] = surf.exclamation_count;
  out[dim + 11] = surf.punct_count;
  return out;
}

/// Tokenizes every instance in place, keeping configured emoticons whole.
inline void tokenize_dataset(Dataset& data, const FeatureResources& res) {
  for (Instance& inst : data) {
    inst.tokens = tokenize(inst.text, res.emoticons);
  }
}

/// Raw feature matrix over a dataset, aligned with dataset order.
inline FeatureSet featurize_all(const Dataset& data,
                                const FeatureResources& res) {
  const FeatureLayout layout = feature_layout(res.embeddings.dimension());
  Eigen::MatrixXd values(static_cast<Eigen::Index>(data.size()),
                         layout.total);
  std::vector<std::string> ids;
  ids.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Instance& inst = data[i];
    values.row(static_cast<Eigen::Index>(i)) =
        featurize_raw(inst, res).transpose();
    ids.push_back(inst.id);
  }
  return FeatureSet(std::move(ids), std::move(values), layout);
}

}  // namespace gppl

#endif  // GPPL_TEXTFEAT_HPP
