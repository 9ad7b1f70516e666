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

#ifndef GPPL_CALIBRATE_HPP
#define GPPL_CALIBRATE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "gppl/errors.hpp"
#include "gppl/kernel.hpp"
#include "gppl/metrics.hpp"
#include "gppl/random.hpp"

namespace gppl {

/// 1-D GP regression from raw utilities to the bounded rating scale, plus a
/// decision threshold for the binary task. Predictions are clamped to
/// [range_min, range_max].
struct CalibrationMap {
  Eigen::VectorXd train_inputs;  // raw utilities used for fitting
  Eigen::VectorXd alpha;         // (K + noise I)^-1 (gold - target_mean)
  double target_mean = 0.0;
  double lengthscale = 1.0;
  double scale = 1.0;      // squared-exponential signal variance
  double noise_var = 1.0;  // observation noise picked on the grid
  double range_min = 0.0;
  double range_max = 5.0;
  double binary_threshold = std::numeric_limits<double>::quiet_NaN();

  bool has_threshold() const { return !std::isnan(binary_threshold); }
};

namespace detail {

inline Eigen::MatrixXd sqexp_1d(const Eigen::VectorXd& a,
                                const Eigen::VectorXd& b, double lengthscale,
                                double scale) {
  Eigen::MatrixXd k(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double d = (a[i] - b[j]) / lengthscale;
      k(i, j) = scale * std::exp(-0.5 * d * d);
    }
  }
  return k;
}

}  // namespace detail

/// Fits the GP regressor of gold scores on raw utilities. The lengthscale
/// comes from the median heuristic on raw; the signal variance is the gold
/// variance; the noise variance maximizes the exact 1-D marginal likelihood
/// over the fixed grid 2^-10 ... 2^2.
inline CalibrationMap fit_calibration(std::span<const double> raw,
                                      std::span<const double> gold,
                                      std::uint64_t seed = 0) {
  if (raw.size() != gold.size()) {
    throw ValidationError("calibration inputs have mismatched lengths");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(raw.size());
  if (n < 2) {
    throw ValidationError("calibration needs at least 2 points");
  }
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(raw[static_cast<std::size_t>(i)])) {
      throw ValidationError("calibration raw values must be finite");
    }
    x[i] = raw[static_cast<std::size_t>(i)];
    y[i] = gold[static_cast<std::size_t>(i)];
  }
  const double x_mean = x.mean();
  if ((x.array() - x_mean).square().sum() == 0.0) {
    throw ValidationError(
        "calibration raw values are all identical (degenerate input)");
  }

  CalibrationMap map;
  map.train_inputs = x;
  map.target_mean = y.mean();
  Rng rng(seed);
  map.lengthscale = median_heuristic_lengthscales(Eigen::MatrixXd(x), rng)[0];
  map.scale = std::max(
      (y.array() - map.target_mean).square().sum() / static_cast<double>(n),
      1e-12);

  const Eigen::MatrixXd k = detail::sqexp_1d(x, x, map.lengthscale, map.scale);
  const Eigen::VectorXd centered = y.array() - map.target_mean;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int e = -10; e <= 2; ++e) {
    const double noise = std::pow(2.0, e);
    Eigen::MatrixXd ky = k;
    ky.diagonal().array() += noise;
    Eigen::LLT<Eigen::MatrixXd> llt(ky);
    if (llt.info() != Eigen::Success) continue;
    const double logdet =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double ll =
        -0.5 * centered.dot(llt.solve(centered)) - 0.5 * logdet -
        0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (ll > best_ll) {
      best_ll = ll;
      map.noise_var = noise;
      map.alpha = llt.solve(centered);
    }
  }
  if (!std::isfinite(best_ll)) {
    throw NumericalError("calibration marginal likelihood never finite");
  }
  return map;
}

/// GP posterior mean at raw, clamped into [range_min, range_max].
inline double apply_calibration(const CalibrationMap& map, double raw) {
  double mean = map.target_mean;
  for (Eigen::Index i = 0; i < map.train_inputs.size(); ++i) {
    const double d = (raw - map.train_inputs[i]) / map.lengthscale;
    mean += map.scale * std::exp(-0.5 * d * d) * map.alpha[i];
  }
  return std::clamp(mean, map.range_min, map.range_max);
}

inline std::vector<double> apply_calibration(const CalibrationMap& map,
                                             std::span<const double> raw) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (double r : raw) out.push_back(apply_calibration(map, r));
  return out;
}

/// F1-optimal threshold for the rule (score >= threshold -> humorous), over
/// candidate thresholds at midpoints of consecutive sorted distinct scores.
/// Ties go to the smallest threshold.
inline double tune_threshold(std::span<const double> calibrated,
                             const std::vector<bool>& gold_labels) {
  if (calibrated.size() != gold_labels.size() || calibrated.empty()) {
    throw ValidationError("threshold tuning inputs have mismatched lengths");
  }
  bool any_pos = false;
  bool any_neg = false;
  for (bool b : gold_labels) (b ? any_pos : any_neg) = true;
  if (!any_pos || !any_neg) {
    throw ValidationError(
        "threshold tuning needs both a positive and a negative label");
  }
  std::vector<double> distinct(calibrated.begin(), calibrated.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  if (distinct.size() < 2) {
    throw ValidationError(
        "all calibrated scores identical; threshold is degenerate");
  }
  double best_threshold = 0.0;
  double best_f1 = -1.0;
  std::vector<bool> pred(calibrated.size());
  for (std::size_t c = 0; c + 1 < distinct.size(); ++c) {
    const double threshold = 0.5 * (distinct[c] + distinct[c + 1]);
    for (std::size_t i = 0; i < calibrated.size(); ++i) {
      pred[i] = calibrated[i] >= threshold;
    }
    const double f1 = classification_report(pred, gold_labels).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

/// Binary decision: calibrated score at or above the tuned threshold.
inline bool classify(const CalibrationMap& map, double raw) {
  if (!map.has_threshold()) {
    throw ValidationError("calibration map has no threshold set");
  }
  return apply_calibration(map, raw) >= map.binary_threshold;
}

}  // namespace gppl

#endif  // GPPL_CALIBRATE_HPP
