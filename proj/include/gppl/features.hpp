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

#ifndef GPPL_FEATURES_HPP
#define GPPL_FEATURES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "gppl/errors.hpp"

namespace gppl {

struct FeatureGroup {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

/// Named groups that partition [0, total) in declaration order.
struct FeatureLayout {
  std::vector<FeatureGroup> groups;
  Eigen::Index total = 0;

  void validate() const {
    Eigen::Index expected = 0;
    for (const FeatureGroup& g : groups) {
      if (g.offset != expected || g.length <= 0) {
        throw ValidationError("feature layout group '" + g.name +
                              "' leaves a gap or overlap");
      }
      expected += g.length;
    }
    if (expected != total) {
      throw ValidationError("feature layout groups do not cover the vector");
    }
  }

  const FeatureGroup& group(const std::string& name) const {
    for (const FeatureGroup& g : groups) {
      if (g.name == name) return g;
    }
    throw ValidationError("unknown feature group '" + name + "'");
  }
};

/// Feature matrix with one row per instance, aligned with ids.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::vector<std::string> ids, Eigen::MatrixXd values,
             FeatureLayout layout = {})
      : ids_(std::move(ids)),
        values_(std::move(values)),
        layout_(std::move(layout)) {
    if (static_cast<Eigen::Index>(ids_.size()) != values_.rows()) {
      throw ValidationError("feature matrix rows do not match id count");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) {
        throw ValidationError("duplicate feature row for id '" + ids_[i] +
                              "'");
      }
    }
  }

  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  const FeatureLayout& layout() const { return layout_; }
  Eigen::Index dimension() const { return values_.cols(); }
  Eigen::Index size() const { return values_.rows(); }

  Eigen::Index row_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw ValidationError("no feature vector for instance '" + id + "'");
    }
    return static_cast<Eigen::Index>(it->second);
  }

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd values_;
  FeatureLayout layout_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-column affine transform for the scalar tail of the feature vector.
/// The embedding block [0, scalar_offset) passes through untouched. Columns
/// that were constant on the fitting set map to exactly 0.
struct Standardization {
  Eigen::Index scalar_offset = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  bool empty() const { return mean.size() == 0; }

  void apply(Eigen::MatrixXd& values) const {
    if (values.cols() != scalar_offset + mean.size()) {
      throw ValidationError(
          "standardization was fitted for a different feature layout");
    }
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      auto col = values.col(scalar_offset + j);
      if (stddev[j] < 1e-12) {
        col.setZero();
      } else {
        col = (col.array() - mean[j]) / stddev[j];
      }
    }
  }
};

/// Population mean/stddev of the scalar block, column by column.
inline Standardization fit_standardization(const Eigen::MatrixXd& values,
                                           Eigen::Index scalar_offset) {
  if (values.rows() == 0 || scalar_offset > values.cols()) {
    throw ValidationError("cannot fit standardization on empty features");
  }
  Standardization out;
  out.scalar_offset = scalar_offset;
  const Eigen::Index k = values.cols() - scalar_offset;
  out.mean.resize(k);
  out.stddev.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto col = values.col(scalar_offset + j);
    const double m = col.mean();
    out.mean[j] = m;
    out.stddev[j] = std::sqrt((col.array() - m).square().sum() /
                              static_cast<double>(values.rows()));
  }
  return out;
}

}  // namespace gppl

#endif  // GPPL_FEATURES_HPP
