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

#ifndef GPPL_KERNEL_HPP
#define GPPL_KERNEL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "gppl/errors.hpp"
#include "gppl/random.hpp"

namespace gppl {

enum class KernelFamily { matern32, sqexp };

inline std::string to_string(KernelFamily family) {
  return family == KernelFamily::matern32 ? "matern32" : "sqexp";
}

inline KernelFamily kernel_family_from_string(std::string_view s) {
  if (s == "matern32") return KernelFamily::matern32;
  if (s == "sqexp") return KernelFamily::sqexp;
  throw ValidationError("unknown kernel family '" + std::string(s) + "'");
}

/// Stationary kernel with one lengthscale per input dimension. The output
/// scale is parameterised as the mean beta0/alpha0 of an inverse-gamma
/// prior over the scale, so k(x,x) = beta0/alpha0.
struct KernelParams {
  KernelFamily family = KernelFamily::matern32;
  std::vector<double> lengthscales;
  double alpha0 = 2.0;
  double beta0 = 200.0;

  double scale() const { return beta0 / alpha0; }

  void validate(Eigen::Index dim) const {
    if (alpha0 <= 0.0 || beta0 <= 0.0) {
      throw ValidationError("kernel scale hyperparameters must be positive");
    }
    if (static_cast<Eigen::Index>(lengthscales.size()) != dim) {
      throw ValidationError(
          "kernel has " + std::to_string(lengthscales.size()) +
          " lengthscales but inputs have " + std::to_string(dim) +
          " dimensions");
    }
    for (double l : lengthscales) {
      if (!(l > 0.0)) {
        throw ValidationError("kernel lengthscales must be positive");
      }
    }
  }
};

namespace detail {

/// Squared scaled distances r2(i,j) = sum_d ((x_id - y_jd) / l_d)^2 via one
/// GEMM on lengthscale-divided copies. Tiny negatives from cancellation are
/// clamped.
inline Eigen::MatrixXd scaled_sq_distances(const Eigen::MatrixXd& x,
                                           const Eigen::MatrixXd& y,
                                           const std::vector<double>& ls) {
  Eigen::MatrixXd xs = x;
  Eigen::MatrixXd ys = y;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    xs.col(d) /= ls[static_cast<std::size_t>(d)];
    ys.col(d) /= ls[static_cast<std::size_t>(d)];
  }
  Eigen::VectorXd xn = xs.rowwise().squaredNorm();
  Eigen::VectorXd yn = ys.rowwise().squaredNorm();
  Eigen::MatrixXd r2 = -2.0 * xs * ys.transpose();
  r2.colwise() += xn;
  r2.rowwise() += yn.transpose();
  return r2.cwiseMax(0.0);
}

}  // namespace detail

/// Dense cross-kernel matrix K(i,j) = k(x_i, y_j). Rows of x and y are
/// points; both must have one column per lengthscale.
inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& y,
                                     const KernelParams& params) {
  params.validate(x.cols());
  if (y.cols() != x.cols()) {
    throw ValidationError("kernel inputs have mismatched dimensions");
  }
  Eigen::MatrixXd r2 = detail::scaled_sq_distances(x, y, params.lengthscales);
  const double s = params.scale();
  if (params.family == KernelFamily::sqexp) {
    return s * (-0.5 * r2.array()).exp().matrix();
  }
  Eigen::ArrayXXd r = r2.array().sqrt() * std::sqrt(3.0);
  return (s * (1.0 + r) * (-r).exp()).matrix();
}

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x,
                                     const KernelParams& params) {
  return kernel_matrix(x, x, params);
}

/// Per-dimension median of absolute coordinate differences over all pairs of
/// a subset of at most max_subset rows (deterministic given the rng).
/// Degenerate dimensions fall back to a small positive floor so the kernel
/// stays well defined.
inline std::vector<double> median_heuristic_lengthscales(
    const Eigen::MatrixXd& x, Rng& rng, Eigen::Index max_subset = 1000) {
  if (x.rows() < 2) {
    throw ValidationError(
        "median heuristic needs at least two input points");
  }
  std::vector<std::size_t> rows;
  if (x.rows() > max_subset) {
    rows = sample_without_replacement(static_cast<std::size_t>(x.rows()),
                                      static_cast<std::size_t>(max_subset),
                                      rng);
  } else {
    rows.resize(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }
  const std::size_t n = rows.size();
  std::vector<double> diffs;
  diffs.reserve(n * (n - 1) / 2);
  std::vector<double> out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    diffs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        diffs.push_back(std::abs(x(static_cast<Eigen::Index>(rows[i]), d) -
                                 x(static_cast<Eigen::Index>(rows[j]), d)));
      }
    }
    const std::size_t mid = diffs.size() / 2;
    std::nth_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(mid),
                     diffs.end());
    double med = diffs[mid];
    if (diffs.size() % 2 == 0) {
      double lo = *std::max_element(
          diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(mid));
      med = 0.5 * (lo + med);
    }
    out[static_cast<std::size_t>(d)] = std::max(med, 1e-6);
  }
  return out;
}

}  // namespace gppl

#endif  // GPPL_KERNEL_HPP
