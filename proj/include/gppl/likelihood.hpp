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

#ifndef GPPL_LIKELIHOOD_HPP
#define GPPL_LIKELIHOOD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "gppl/errors.hpp"

namespace gppl {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

namespace detail {

/// Asymptotic series S(z) with Phi(z) = phi(z)/(-z) * S(z) for z -> -inf.
inline double cdf_tail_series(double z) {
  const double z2 = z * z;
  double term = 1.0;
  double sum = 1.0;
  // 1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - 945/z^10; safely decreasing
  // for |z| >= 20.
  for (int k = 1; k <= 5; ++k) {
    term *= -static_cast<double>(2 * k - 1) / z2;
    sum += term;
  }
  return sum;
}

}  // namespace detail

/// log Phi(z), stable for very negative z where Phi underflows.
inline double log_normal_cdf(double z) {
  if (z > -20.0) return std::log(normal_cdf(z));
  return -0.5 * z * z - kLogSqrt2Pi - std::log(-z) +
         std::log(detail::cdf_tail_series(z));
}

/// Inverse Mills ratio phi(z)/Phi(z); grows like -z for z -> -inf.
inline double mills_ratio(double z) {
  if (z > -20.0) return normal_pdf(z) / normal_cdf(z);
  return -z / detail::cdf_tail_series(z);
}

enum class PairLikelihood { thurstone_mosteller, bradley_terry };

inline std::string to_string(PairLikelihood lik) {
  return lik == PairLikelihood::thurstone_mosteller ? "thurstone_mosteller"
                                                    : "bradley_terry";
}

inline PairLikelihood pair_likelihood_from_string(std::string_view s) {
  if (s == "thurstone_mosteller") return PairLikelihood::thurstone_mosteller;
  if (s == "bradley_terry") return PairLikelihood::bradley_terry;
  throw ValidationError("unknown pair likelihood '" + std::string(s) + "'");
}

inline double logistic(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

/// P(better preferred over worse). Thurstone-Mosteller: Phi(diff / sqrt(2)),
/// unit latent noise per item so the pair noise scale is sqrt(2).
/// Bradley-Terry: logistic(diff).
inline double pair_likelihood(double f_better, double f_worse,
                              PairLikelihood lik) {
  const double d = f_better - f_worse;
  return lik == PairLikelihood::thurstone_mosteller
             ? normal_cdf(d / kSqrt2)
             : logistic(d);
}

/// Log likelihood of an observed preference at utility difference d, with
/// first and second derivatives in d. Both likelihoods are log-concave, so
/// d2 <= 0 everywhere.
struct LogLikDerivs {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline LogLikDerivs pair_loglik_derivs(double d, PairLikelihood lik) {
  LogLikDerivs out;
  if (lik == PairLikelihood::thurstone_mosteller) {
    const double z = d / kSqrt2;
    const double r = mills_ratio(z);
    out.value = log_normal_cdf(z);
    out.d1 = r / kSqrt2;
    out.d2 = -0.5 * r * (z + r);
  } else {
    const double s = logistic(d);
    out.value = d >= 0.0 ? -std::log1p(std::exp(-d))
                         : d - std::log1p(std::exp(d));
    out.d1 = 1.0 - s;
    out.d2 = -s * (1.0 - s);
  }
  return out;
}

/// Gauss-Hermite rule computed by Golub-Welsch on the Jacobi matrix of the
/// (physicists') Hermite polynomials. Exact node/weight values instead of a
/// typed-in table.
class GaussHermite {
 public:
  explicit GaussHermite(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int i = 1; i < n; ++i) {
      sub[i - 1] = std::sqrt(static_cast<double>(i) / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub,
                                  Eigen::ComputeEigenvectors);
    nodes_ = solver.eigenvalues();
    weights_.resize(n);
    for (int i = 0; i < n; ++i) {
      const double v = solver.eigenvectors()(0, i);
      weights_[i] = std::sqrt(std::numbers::pi) * v * v;
    }
  }

  /// Shared 32-node rule; plenty for probit expectations.
  static const GaussHermite& standard() {
    static const GaussHermite rule(32);
    return rule;
  }

  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// E[g(x)] for x ~ N(mu, var).
  template <typename F>
  double expect(double mu, double var, F&& g) const {
    const double sd = std::sqrt(var);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < nodes_.size(); ++k) {
      sum += weights_[k] * g(mu + kSqrt2 * sd * nodes_[k]);
    }
    return sum / std::sqrt(std::numbers::pi);
  }

 private:
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

/// Expected log pair likelihood under d ~ N(mu, var), with derivatives in mu
/// (Bonnet/Price: differentiate under the integral).
struct ExpectedLogLik {
  double value = 0.0;
  double dmu = 0.0;
  double d2mu = 0.0;
};

inline ExpectedLogLik expected_pair_loglik(
    double mu, double var, PairLikelihood lik,
    const GaussHermite& rule = GaussHermite::standard()) {
  ExpectedLogLik out;
  const double sd = std::sqrt(var);
  const auto& t = rule.nodes();
  const auto& w = rule.weights();
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const LogLikDerivs d = pair_loglik_derivs(mu + kSqrt2 * sd * t[k], lik);
    out.value += w[k] * d.value;
    out.dmu += w[k] * d.d1;
    out.d2mu += w[k] * d.d2;
  }
  const double norm = 1.0 / std::sqrt(std::numbers::pi);
  out.value *= norm;
  out.dmu *= norm;
  out.d2mu *= norm;
  return out;
}

}  // namespace gppl

#endif  // GPPL_LIKELIHOOD_HPP
