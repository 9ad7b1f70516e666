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

#ifndef GPPL_MODEL_HPP
#define GPPL_MODEL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gppl/errors.hpp"
#include "gppl/features.hpp"
#include "gppl/kernel.hpp"
#include "gppl/likelihood.hpp"
#include "gppl/pairgen.hpp"
#include "gppl/random.hpp"

namespace gppl {

struct SviConfig {
  Eigen::Index batch_size = 200;
  Eigen::Index num_inducing = 500;
  Eigen::Index max_iterations = 2000;
  double convergence_tol = 1e-6;
  double learning_delay = 1.0;
  double forgetting_rate = 0.9;
  PairLikelihood likelihood = PairLikelihood::thurstone_mosteller;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (num_inducing < 1) throw ValidationError("num_inducing must be >= 1");
    if (max_iterations < 1) {
      throw ValidationError("max_iterations must be >= 1");
    }
    if (!(convergence_tol > 0.0)) {
      throw ValidationError("convergence_tol must be positive");
    }
    if (!(learning_delay > 0.0)) {
      throw ValidationError("learning_delay must be positive");
    }
    if (!(forgetting_rate > 0.5 && forgetting_rate <= 1.0)) {
      throw ValidationError("forgetting_rate must lie in (0.5, 1]");
    }
  }
};

struct TrainingMetadata {
  Eigen::Index iterations = 0;
  double final_elbo = 0.0;
  std::uint64_t seed = 0;
};

/// Variational sparse-GP posterior over utilities. Immutable once fitted;
/// safe for concurrent predict calls.
struct GpplModel {
  KernelParams kernel;
  PairLikelihood likelihood = PairLikelihood::thurstone_mosteller;
  Eigen::MatrixXd inducing_inputs;   // M x D, rows of the training features
  Eigen::VectorXd variational_mean;  // m, length M
  Eigen::MatrixXd variational_cov;   // S, M x M symmetric positive definite
  Standardization standardization;
  TrainingMetadata metadata;
};

struct UtilityPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

namespace detail {

struct JitteredChol {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Factor K + jitter*I, starting at 1e-6 relative to the kernel scale and
/// doubling up to 10 times before giving up.
inline JitteredChol chol_with_jitter(const Eigen::MatrixXd& k, double scale) {
  double jitter = 1e-6 * scale;
  Eigen::MatrixXd work;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    work = k;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(std::move(work));
    if (llt.info() == Eigen::Success) return {std::move(llt), jitter};
    jitter *= 2.0;
  }
  throw NumericalError(
      "Cholesky factorization failed after 10 jitter doublings");
}

inline double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// k-means++ seeding over the rows of x: the selected indices are actual
/// data rows, spread out by the usual distance-proportional sampling.
inline std::vector<Eigen::Index> kmeanspp_select(const Eigen::MatrixXd& x,
                                                 Eigen::Index m, Rng& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> chosen;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  chosen.reserve(static_cast<std::size_t>(m));
  const Eigen::Index first =
      static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  chosen.push_back(first);
  taken[static_cast<std::size_t>(first)] = 1;
  Eigen::VectorXd d2 =
      (x.rowwise() - x.row(first)).rowwise().squaredNorm();
  while (static_cast<Eigen::Index>(chosen.size()) < m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += d2[i];
    Eigen::Index next = -1;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          next = i;
          break;
        }
      }
      if (next == -1) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (!taken[static_cast<std::size_t>(i)] && d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    }
    if (next == -1) {
      // All remaining points coincide with chosen ones; fall back to a
      // uniform pick among the unchosen.
      std::uint64_t remaining = 0;
      for (char t : taken) remaining += t == 0 ? 1 : 0;
      std::uint64_t skip = rng.uniform_int(remaining);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (skip == 0) {
          next = i;
          break;
        }
        --skip;
      }
    }
    chosen.push_back(next);
    taken[static_cast<std::size_t>(next)] = 1;
    d2 = d2.cwiseMin((x.rowwise() - x.row(next)).rowwise().squaredNorm());
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Working quantities of the inducing-point approximation shared by fitting,
/// ELBO evaluation and gradients. For pair p = (w, b):
///   alpha_p = a_b - a_w            (projection of the difference onto u)
///   pair_resid_p = residual variance of f_b - f_w not explained by u.
struct SparseState {
  Eigen::MatrixXd kinv;        // (K_ZZ + jitter I)^-1
  double logdet_khat = 0.0;    // log det of the jittered K_ZZ
  double jitter = 0.0;
  Eigen::MatrixXd a;           // N x M projection K_XZ kinv
  Eigen::VectorXd resid;       // per-instance conditional variance
  Eigen::MatrixXd alpha;       // P x M
  Eigen::VectorXd pair_resid;  // P
};

inline SparseState make_state(const Eigen::MatrixXd& z,
                              const KernelParams& kernel,
                              const Eigen::MatrixXd& x,
                              std::span<const Eigen::Index> worse,
                              std::span<const Eigen::Index> better) {
  SparseState st;
  const Eigen::Index m = z.rows();
  const Eigen::MatrixXd kzz = kernel_matrix(z, kernel);
  JitteredChol chol = chol_with_jitter(kzz, kernel.scale());
  st.jitter = chol.jitter;
  st.logdet_khat = logdet_from_llt(chol.llt);
  st.kinv = chol.llt.solve(Eigen::MatrixXd::Identity(m, m));
  st.kinv = 0.5 * (st.kinv + st.kinv.transpose());
  const Eigen::MatrixXd kxz = kernel_matrix(x, z, kernel);
  st.a = kxz * st.kinv;
  st.resid = (kernel.scale() -
              st.a.cwiseProduct(kxz).rowwise().sum().array())
                 .cwiseMax(0.0)
                 .matrix();
  const Eigen::Index p = static_cast<Eigen::Index>(worse.size());
  st.alpha.resize(p, m);
  st.pair_resid.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index b = better[static_cast<std::size_t>(i)];
    const Eigen::Index w = worse[static_cast<std::size_t>(i)];
    st.alpha.row(i) = st.a.row(b) - st.a.row(w);
    const double kbw = kernel_matrix(x.row(b), x.row(w), kernel)(0, 0);
    const double cross = kbw - st.a.row(b).dot(kxz.row(w));
    st.pair_resid[i] = std::max(st.resid[b] + st.resid[w] - 2.0 * cross, 0.0);
  }
  return st;
}

inline void resolve_pair_rows(std::span<const PreferencePair> pairs,
                              const FeatureSet& features,
                              std::vector<Eigen::Index>& worse,
                              std::vector<Eigen::Index>& better) {
  worse.reserve(pairs.size());
  better.reserve(pairs.size());
  for (const PreferencePair& pr : pairs) {
    worse.push_back(features.row_of(pr.worse_id));
    better.push_back(features.row_of(pr.better_id));
  }
}

inline double kl_to_prior(const SparseState& st, const Eigen::VectorXd& m,
                          const Eigen::MatrixXd& s, double logdet_s) {
  const double dim = static_cast<double>(m.size());
  return 0.5 * (st.kinv.cwiseProduct(s).sum() + m.dot(st.kinv * m) - dim +
                st.logdet_khat - logdet_s);
}

/// Per-pair marginal moments of the utility difference under q.
inline void pair_moments(const SparseState& st, const Eigen::MatrixXd& ab,
                         const Eigen::VectorXd& prb, const Eigen::VectorXd& m,
                         const Eigen::MatrixXd& s, Eigen::VectorXd& mu,
                         Eigen::VectorXd& var) {
  mu = ab * m;
  var = (prb + (ab * s).cwiseProduct(ab).rowwise().sum()).cwiseMax(1e-12);
}

}  // namespace detail

/// Natural-gradient stochastic variational inference for the inducing-point
/// posterior. The variational state is kept in precision form
/// (Lambda = S^-1, nu = Lambda m); each step blends the current state with
/// the fixed-point target
///   Lambda* = K_ZZ^-1 + w sum_p (-E[l''_p]) alpha_p alpha_p^T
///   nu*     = w sum_p (E[l'_p] - E[l''_p] mu_p) alpha_p
/// at rate rho_t = (t + learning_delay)^(-forgetting_rate), where w rescales
/// the batch to the full pair set. Both pair likelihoods are log-concave, so
/// -E[l''] >= 0 and Lambda stays positive definite. When batch_size covers
/// all pairs the batch is the exact pair set (no sampling, w = 1).
inline GpplModel fit_svi(std::span<const PreferencePair> pairs,
                         const FeatureSet& features, const SviConfig& config,
                         const KernelParams& kernel,
                         std::vector<double>* elbo_trace = nullptr) {
  config.validate();
  kernel.validate(features.dimension());
  if (pairs.empty()) {
    throw ValidationError("fit_svi needs at least one preference pair");
  }
  std::vector<Eigen::Index> worse;
  std::vector<Eigen::Index> better;
  detail::resolve_pair_rows(pairs, features, worse, better);

  Rng rng(config.seed);
  const Eigen::Index n = features.size();
  const Eigen::Index m_count = std::min(config.num_inducing, n);
  const std::vector<Eigen::Index> picks =
      detail::kmeanspp_select(features.values(), m_count, rng);
  Eigen::MatrixXd z(m_count, features.dimension());
  for (Eigen::Index i = 0; i < m_count; ++i) {
    z.row(i) = features.values().row(picks[static_cast<std::size_t>(i)]);
  }

  const detail::SparseState st =
      detail::make_state(z, kernel, features.values(), worse, better);

  const Eigen::Index total = static_cast<Eigen::Index>(pairs.size());
  const bool full_batch = config.batch_size >= total;
  const Eigen::Index batch = full_batch ? total : config.batch_size;
  const double weight =
      full_batch ? 1.0
                 : static_cast<double>(total) / static_cast<double>(batch);

  Eigen::MatrixXd lambda = st.kinv;  // precision; prior == initial posterior
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m_count);
  std::vector<double> local_trace;
  std::vector<double>& trace = elbo_trace ? *elbo_trace : local_trace;
  trace.clear();

  const GaussHermite& gh = GaussHermite::standard();
  Eigen::MatrixXd ab_storage;
  Eigen::VectorXd prb_storage;
  Eigen::VectorXd mu, var, g, h;
  Eigen::MatrixXd s(m_count, m_count);
  Eigen::VectorXd mvec(m_count);
  Eigen::Index iters = 0;

  auto mean_of = [&trace](std::size_t from) {
    double sum = 0.0;
    for (std::size_t k = from; k < from + 10; ++k) sum += trace[k];
    return sum / 10.0;
  };

  for (Eigen::Index t = 1; t <= config.max_iterations; ++t) {
    iters = t;
    Eigen::LLT<Eigen::MatrixXd> lam_llt(lambda);
    if (lam_llt.info() != Eigen::Success) {
      throw NumericalError(
          "variational precision lost positive definiteness");
    }
    s = lam_llt.solve(Eigen::MatrixXd::Identity(m_count, m_count));
    s = 0.5 * (s + s.transpose());
    mvec = lam_llt.solve(nu);
    const double logdet_s = -detail::logdet_from_llt(lam_llt);

    if (!full_batch) {
      ab_storage.resize(batch, m_count);
      prb_storage.resize(batch);
      for (Eigen::Index j = 0; j < batch; ++j) {
        const Eigen::Index p = static_cast<Eigen::Index>(
            rng.uniform_int(static_cast<std::uint64_t>(total)));
        ab_storage.row(j) = st.alpha.row(p);
        prb_storage[j] = st.pair_resid[p];
      }
    }
    const Eigen::MatrixXd& ab = full_batch ? st.alpha : ab_storage;
    const Eigen::VectorXd& prb = full_batch ? st.pair_resid : prb_storage;

    detail::pair_moments(st, ab, prb, mvec, s, mu, var);
    g.resize(batch);
    h.resize(batch);
    double exp_sum = 0.0;
    for (Eigen::Index j = 0; j < batch; ++j) {
      const ExpectedLogLik ell =
          expected_pair_loglik(mu[j], var[j], config.likelihood, gh);
      exp_sum += ell.value;
      g[j] = ell.dmu;
      h[j] = ell.d2mu;
    }
    trace.push_back(weight * exp_sum -
                    detail::kl_to_prior(st, mvec, s, logdet_s));

    const Eigen::MatrixXd q =
        ab.transpose() *
        (weight * (-h.array()).max(0.0)).sqrt().matrix().asDiagonal();
    const Eigen::VectorXd nu_target =
        weight * (ab.transpose() * (g - h.cwiseProduct(mu)));
    const double rho = std::pow(static_cast<double>(t) + config.learning_delay,
                                -config.forgetting_rate);
    lambda = (1.0 - rho) * lambda + rho * (st.kinv + q * q.transpose());
    lambda = 0.5 * (lambda + lambda.transpose());
    nu = (1.0 - rho) * nu + rho * nu_target;

    if (trace.size() >= 20 &&
        std::abs(mean_of(trace.size() - 10) - mean_of(trace.size() - 20)) <
            config.convergence_tol) {
      break;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> lam_llt(lambda);
  if (lam_llt.info() != Eigen::Success) {
    throw NumericalError("variational precision lost positive definiteness");
  }
  s = lam_llt.solve(Eigen::MatrixXd::Identity(m_count, m_count));
  s = 0.5 * (s + s.transpose());
  mvec = lam_llt.solve(nu);

  GpplModel model;
  model.kernel = kernel;
  model.likelihood = config.likelihood;
  model.inducing_inputs = std::move(z);
  model.variational_mean = std::move(mvec);
  model.variational_cov = std::move(s);
  model.metadata.seed = config.seed;
  model.metadata.iterations = iters;

  detail::pair_moments(st, st.alpha, st.pair_resid, model.variational_mean,
                       model.variational_cov, mu, var);
  double exp_sum = 0.0;
  for (Eigen::Index j = 0; j < total; ++j) {
    exp_sum += expected_pair_loglik(mu[j], var[j], config.likelihood, gh).value;
  }
  model.metadata.final_elbo =
      exp_sum - detail::kl_to_prior(st, model.variational_mean,
                                    model.variational_cov,
                                    -detail::logdet_from_llt(lam_llt));
  return model;
}

/// Posterior over utilities at query feature rows:
///   mean = K_qZ Khat^-1 m
///   var  = k(x,x) - diag(K_qZ Khat^-1 (Khat - S) Khat^-1 K_Zq)
/// clamped below at 1e-10.
inline UtilityPosterior predict(const GpplModel& model,
                                const Eigen::MatrixXd& query) {
  if (query.cols() != model.inducing_inputs.cols()) {
    throw ValidationError(
        "query features have " + std::to_string(query.cols()) +
        " dimensions, model expects " +
        std::to_string(model.inducing_inputs.cols()));
  }
  const Eigen::MatrixXd kzz = kernel_matrix(model.inducing_inputs, model.kernel);
  const detail::JitteredChol chol =
      detail::chol_with_jitter(kzz, model.kernel.scale());
  const Eigen::MatrixXd kqz =
      kernel_matrix(query, model.inducing_inputs, model.kernel);
  const Eigen::MatrixXd aq = chol.llt.solve(kqz.transpose()).transpose();
  UtilityPosterior out;
  out.mean = aq * model.variational_mean;
  out.variance =
      (model.kernel.scale() - aq.cwiseProduct(kqz).rowwise().sum().array() +
       (aq * model.variational_cov).cwiseProduct(aq).rowwise().sum().array())
          .cwiseMax(1e-10)
          .matrix();
  return out;
}

/// Full-data evidence lower bound of a model state:
/// sum_p E_q[log p(pair)] - KL(q || prior).
inline double elbo(const GpplModel& model,
                   std::span<const PreferencePair> pairs,
                   const FeatureSet& features) {
  std::vector<Eigen::Index> worse;
  std::vector<Eigen::Index> better;
  detail::resolve_pair_rows(pairs, features, worse, better);
  const detail::SparseState st = detail::make_state(
      model.inducing_inputs, model.kernel, features.values(), worse, better);
  Eigen::VectorXd mu, var;
  detail::pair_moments(st, st.alpha, st.pair_resid, model.variational_mean,
                       model.variational_cov, mu, var);
  double exp_sum = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    exp_sum += expected_pair_loglik(mu[j], var[j], model.likelihood).value;
  }
  Eigen::LLT<Eigen::MatrixXd> s_llt(model.variational_cov);
  if (s_llt.info() != Eigen::Success) {
    throw NumericalError("variational covariance is not positive definite");
  }
  return exp_sum - detail::kl_to_prior(st, model.variational_mean,
                                       model.variational_cov,
                                       detail::logdet_from_llt(s_llt));
}

/// Analytic gradient of elbo() with respect to the variational mean:
/// sum_p E[l'_p] alpha_p - Khat^-1 m.
inline Eigen::VectorXd elbo_grad_mean(const GpplModel& model,
                                      std::span<const PreferencePair> pairs,
                                      const FeatureSet& features) {
  std::vector<Eigen::Index> worse;
  std::vector<Eigen::Index> better;
  detail::resolve_pair_rows(pairs, features, worse, better);
  const detail::SparseState st = detail::make_state(
      model.inducing_inputs, model.kernel, features.values(), worse, better);
  Eigen::VectorXd mu, var;
  detail::pair_moments(st, st.alpha, st.pair_resid, model.variational_mean,
                       model.variational_cov, mu, var);
  Eigen::VectorXd g(mu.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    g[j] = expected_pair_loglik(mu[j], var[j], model.likelihood).dmu;
  }
  return st.alpha.transpose() * g - st.kinv * model.variational_mean;
}

}  // namespace gppl

#endif  // GPPL_MODEL_HPP
