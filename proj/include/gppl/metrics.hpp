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

#ifndef GPPL_METRICS_HPP
#define GPPL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "gppl/errors.hpp"

namespace gppl {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
};

/// Binary classification metrics with positive class = humorous.
/// Zero-denominator convention: precision/recall/F1 report 0.
struct ClassificationReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  ConfusionCounts confusion;
};

inline ClassificationReport report_from_confusion(ConfusionCounts c) {
  if (c.total() == 0) {
    throw ValidationError("classification report over zero instances");
  }
  ClassificationReport r;
  r.confusion = c;
  r.precision = (c.tp + c.fp) > 0
                    ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)
                    : 0.0;
  r.recall = (c.tp + c.fn) > 0
                 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                 : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return r;
}

inline ClassificationReport classification_report(
    const std::vector<bool>& pred, const std::vector<bool>& gold) {
  if (pred.size() != gold.size() || pred.empty()) {
    throw ValidationError(
        "classification_report: prediction and gold vectors must have equal "
        "nonzero length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && gold[i]) ++c.tp;
    else if (pred[i] && !gold[i]) ++c.fp;
    else if (!pred[i] && gold[i]) ++c.fn;
    else ++c.tn;
  }
  return report_from_confusion(c);
}

inline double rmse(std::span<const double> pred, std::span<const double> gold) {
  if (pred.size() != gold.size() || pred.empty()) {
    throw ValidationError("rmse: vectors must have equal nonzero length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gold[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

namespace detail {

/// Average ranks (1-based); ties receive the mean of their rank range.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw ValidationError("correlation undefined for a constant vector");
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

/// Spearman rank correlation: Pearson correlation of average ranks.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("spearman: vectors must have equal length >= 2");
  }
  const auto ra = detail::average_ranks(a);
  const auto rb = detail::average_ranks(b);
  return detail::pearson(ra, rb);
}

}  // namespace gppl

#endif  // GPPL_METRICS_HPP
