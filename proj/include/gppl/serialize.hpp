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

#ifndef GPPL_SERIALIZE_HPP
#define GPPL_SERIALIZE_HPP

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "gppl/calibrate.hpp"
#include "gppl/csv.hpp"
#include "gppl/errors.hpp"
#include "gppl/model.hpp"

namespace gppl {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kCalibrationFormatVersion = 1;

namespace detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c =
      r == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw ValidationError("serialized matrix is not rectangular");
    }
    Eigen::Index j = 0;
    for (const auto& x : row) m(i, j++) = x.get<double>();
    ++i;
  }
  return m;
}

inline void check_container(const nlohmann::json& j, const char* format,
                            int version) {
  if (!j.is_object() || j.value("format", std::string()) != format) {
    throw ValidationError(std::string("not a ") + format + " container");
  }
  const int got = j.value("version", -1);
  if (got != version) {
    throw ValidationError(std::string(format) + " version " +
                          std::to_string(got) + " unsupported (expected " +
                          std::to_string(version) + ")");
  }
}

}  // namespace detail

inline nlohmann::json model_to_json(const GpplModel& model) {
  nlohmann::json j;
  j["format"] = "gppl-model";
  j["version"] = kModelFormatVersion;
  j["kernel"] = {{"family", to_string(model.kernel.family)},
                 {"lengthscales", model.kernel.lengthscales},
                 {"alpha0", model.kernel.alpha0},
                 {"beta0", model.kernel.beta0}};
  j["likelihood"] = to_string(model.likelihood);
  j["inducing_inputs"] = detail::matrix_to_json(model.inducing_inputs);
  j["variational_mean"] = detail::vector_to_json(model.variational_mean);
  j["variational_cov"] = detail::matrix_to_json(model.variational_cov);
  j["standardization"] = {
      {"scalar_offset", model.standardization.scalar_offset},
      {"mean", detail::vector_to_json(model.standardization.mean)},
      {"stddev", detail::vector_to_json(model.standardization.stddev)}};
  j["metadata"] = {{"iterations", model.metadata.iterations},
                   {"final_elbo", model.metadata.final_elbo},
                   {"seed", model.metadata.seed}};
  return j;
}

inline GpplModel model_from_json(const nlohmann::json& j) {
  detail::check_container(j, "gppl-model", kModelFormatVersion);
  try {
    GpplModel model;
    const auto& k = j.at("kernel");
    model.kernel.family =
        kernel_family_from_string(k.at("family").get<std::string>());
    model.kernel.lengthscales = k.at("lengthscales").get<std::vector<double>>();
    model.kernel.alpha0 = k.at("alpha0").get<double>();
    model.kernel.beta0 = k.at("beta0").get<double>();
    model.likelihood =
        pair_likelihood_from_string(j.at("likelihood").get<std::string>());
    model.inducing_inputs = detail::matrix_from_json(j.at("inducing_inputs"));
    model.variational_mean = detail::vector_from_json(j.at("variational_mean"));
    model.variational_cov = detail::matrix_from_json(j.at("variational_cov"));
    const auto& st = j.at("standardization");
    model.standardization.scalar_offset =
        st.at("scalar_offset").get<Eigen::Index>();
    model.standardization.mean = detail::vector_from_json(st.at("mean"));
    model.standardization.stddev = detail::vector_from_json(st.at("stddev"));
    const auto& meta = j.at("metadata");
    model.metadata.iterations = meta.at("iterations").get<Eigen::Index>();
    model.metadata.final_elbo = meta.at("final_elbo").get<double>();
    model.metadata.seed = meta.at("seed").get<std::uint64_t>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model container: ") +
                          e.what());
  }
}

inline nlohmann::json calibration_to_json(const CalibrationMap& map) {
  nlohmann::json j;
  j["format"] = "gppl-calibration";
  j["version"] = kCalibrationFormatVersion;
  j["train_inputs"] = detail::vector_to_json(map.train_inputs);
  j["alpha"] = detail::vector_to_json(map.alpha);
  j["target_mean"] = map.target_mean;
  j["lengthscale"] = map.lengthscale;
  j["scale"] = map.scale;
  j["noise_var"] = map.noise_var;
  j["range_min"] = map.range_min;
  j["range_max"] = map.range_max;
  if (map.has_threshold()) {
    j["binary_threshold"] = map.binary_threshold;
  } else {
    j["binary_threshold"] = nullptr;
  }
  return j;
}

inline CalibrationMap calibration_from_json(const nlohmann::json& j) {
  detail::check_container(j, "gppl-calibration", kCalibrationFormatVersion);
  try {
    CalibrationMap map;
    map.train_inputs = detail::vector_from_json(j.at("train_inputs"));
    map.alpha = detail::vector_from_json(j.at("alpha"));
    map.target_mean = j.at("target_mean").get<double>();
    map.lengthscale = j.at("lengthscale").get<double>();
    map.scale = j.at("scale").get<double>();
    map.noise_var = j.at("noise_var").get<double>();
    map.range_min = j.at("range_min").get<double>();
    map.range_max = j.at("range_max").get<double>();
    const auto& thr = j.at("binary_threshold");
    map.binary_threshold = thr.is_null()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : thr.get<double>();
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed calibration container: ") +
                          e.what());
  }
}

inline nlohmann::json parse_json(const std::string& text,
                                 const std::string& source_name) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source_name + ": " + e.what());
  }
}

inline void save_model(const GpplModel& model, const std::string& path) {
  write_file(path, model_to_json(model).dump(2) + "\n");
}

inline GpplModel load_model(const std::string& path) {
  return model_from_json(parse_json(read_file(path), path));
}

inline void save_calibration(const CalibrationMap& map,
                             const std::string& path) {
  write_file(path, calibration_to_json(map).dump(2) + "\n");
}

inline CalibrationMap load_calibration(const std::string& path) {
  return calibration_from_json(parse_json(read_file(path), path));
}

}  // namespace gppl

#endif  // GPPL_SERIALIZE_HPP
