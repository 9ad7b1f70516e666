/*
 * Copyright 2026 The gppl authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Pipeline driver: pairs -> featurize -> train -> predict -> calibrate ->
// evaluate. Every subcommand takes a flat key=value config file via
// --config (command-line flags win), a --seed that is split per stage, and
// --print-config to echo the effective configuration.
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gppl/gppl.hpp"

namespace {

using gppl::NumericalError;
using gppl::ValidationError;

gppl::CorpusFormat parse_format(const std::string& name) {
  if (name == "haha_csv") return gppl::CorpusFormat::haha_csv;
  if (name == "plain_tsv") return gppl::CorpusFormat::plain_tsv;
  throw ValidationError("unknown corpus format '" + name +
                        "' (expected haha_csv or plain_tsv)");
}

void require_input(const std::string& path, const char* flag) {
  if (path.empty()) {
    throw ValidationError(std::string("missing required ") + flag);
  }
  if (!std::filesystem::exists(path)) {
    throw ValidationError(std::string(flag) + " file not found: " + path);
  }
}

void require_output(const std::string& path, const char* flag) {
  if (path.empty()) {
    throw ValidationError(std::string("missing required ") + flag);
  }
}

gppl::Dataset load_data(const std::string& path, const std::string& format) {
  require_input(path, "--instances");
  std::vector<std::string> warnings;
  gppl::LoadOptions opts;
  opts.warnings = &warnings;
  gppl::Dataset data = gppl::load_instances(path, parse_format(format), opts);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  return data;
}

// Shared feature-resource flags for featurize/train/predict.
struct ResourceOpts {
  std::string embeddings;
  std::string frequency;
  std::string frequency_mode = "relative";
  std::string polysemy;
  std::string emoticons;  // empty -> built-in default list

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--embeddings", embeddings,
                    "Word embeddings, word2vec text format");
    cmd->add_option("--frequency", frequency,
                    "Token frequency lexicon, TSV token<TAB>count");
    cmd->add_option("--frequency-mode", frequency_mode,
                    "Frequency feature form: relative, raw or log")
        ->capture_default_str()
        ->check(CLI::IsMember({"relative", "raw", "log"}));
    cmd->add_option("--polysemy", polysemy,
                    "Polysemy lexicon, TSV lemma<TAB>synset_count");
    cmd->add_option("--emoticons", emoticons,
                    "Emoticon list, one per line (default: built-in)");
  }

  gppl::FeatureResources load() const {
    require_input(embeddings, "--embeddings");
    require_input(frequency, "--frequency");
    require_input(polysemy, "--polysemy");
    gppl::FeatureResources res;
    res.embeddings = gppl::load_embeddings(embeddings);
    res.frequency = gppl::load_frequency_lexicon(frequency);
    res.frequency_mode = gppl::frequency_mode_from_string(frequency_mode);
    res.polysemy = gppl::load_polysemy_lexicon(polysemy);
    if (!emoticons.empty()) {
      require_input(emoticons, "--emoticons");
      res.emoticons = gppl::load_emoticons(emoticons);
    }
    return res;
  }
};

nlohmann::json layout_to_json(const gppl::FeatureLayout& layout) {
  nlohmann::json groups = nlohmann::json::array();
  for (const gppl::FeatureGroup& g : layout.groups) {
    groups.push_back(
        {{"name", g.name}, {"offset", g.offset}, {"length", g.length}});
  }
  return {{"format", "gppl-feature-layout"},
          {"version", 1},
          {"total", layout.total},
          {"groups", groups}};
}

// ---------------------------------------------------------------------------
// pairs
// ---------------------------------------------------------------------------

struct PairsOpts {
  std::string instances;
  std::string format = "haha_csv";
  std::string output;
  std::string sidecar;
  long cap_per_better = 500;
  double keep_fraction = 1.0;
};

void run_pairs(const PairsOpts& o, std::uint64_t master) {
  const gppl::Dataset data = load_data(o.instances, o.format);
  require_output(o.output, "--output");

  const std::vector<gppl::ScoreLevel> levels = gppl::score_levels(data);
  const std::vector<gppl::PreferencePair> minimal =
      gppl::generate_minimal_pairs(levels);
  gppl::PairGenConfig cfg;
  cfg.cap_per_better = o.cap_per_better;
  cfg.keep_fraction = o.keep_fraction;
  cfg.seed = gppl::stage_seed(master, "pairgen");
  gppl::SubsampleReport report;
  const std::vector<gppl::PreferencePair> kept =
      gppl::subsample_pairs(minimal, cfg, &report);

  gppl::save_pairs(kept, o.output);
  const nlohmann::json side = {{"format", "gppl-pairs-report"},
                               {"version", 1},
                               {"input_count", report.input_count},
                               {"after_cap", report.after_cap},
                               {"after_fraction", report.after_fraction}};
  gppl::write_file(o.sidecar.empty() ? o.output + ".json" : o.sidecar,
                   side.dump(2) + "\n");
  std::cout << "pairs: minimal=" << report.input_count
            << " after_cap=" << report.after_cap
            << " after_fraction=" << report.after_fraction << "\n";
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

struct FeaturizeOpts {
  std::string instances;
  std::string format = "haha_csv";
  std::string output;
  std::string layout_out;
  ResourceOpts res;
};

void run_featurize(const FeaturizeOpts& o) {
  gppl::Dataset data = load_data(o.instances, o.format);
  const gppl::FeatureResources res = o.res.load();
  require_output(o.output, "--output");

  gppl::tokenize_dataset(data, res);
  const gppl::FeatureSet features = gppl::featurize_all(data, res);

  std::string csv = "id";
  for (const gppl::FeatureGroup& g : features.layout().groups) {
    if (g.length == 1) {
      csv += "," + g.name;
    } else {
      for (Eigen::Index i = 0; i < g.length; ++i) {
        csv += "," + g.name + "_" + std::to_string(i);
      }
    }
  }
  csv += "\n";
  for (Eigen::Index r = 0; r < features.size(); ++r) {
    csv += gppl::csv_quote(features.ids()[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < features.dimension(); ++c) {
      csv += ",";
      csv += gppl::format_double(features.values()(r, c));
    }
    csv += "\n";
  }
  gppl::write_file(o.output, csv);
  gppl::write_file(
      o.layout_out.empty() ? o.output + ".layout.json" : o.layout_out,
      layout_to_json(features.layout()).dump(2) + "\n");
  std::cout << "featurized: instances=" << features.size()
            << " dimensions=" << features.dimension() << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string instances;
  std::string format = "haha_csv";
  std::string pairs;
  std::string output;
  std::string elbo_trace;
  ResourceOpts res;
  std::string kernel = "matern32";
  std::string likelihood = "thurstone_mosteller";
  double alpha0 = 2.0;
  double beta0 = 200.0;
  long batch_size = 200;
  long num_inducing = 500;
  long max_iterations = 2000;
  double convergence_tol = 1e-6;
  double learning_delay = 1.0;
  double forgetting_rate = 0.9;
};

void run_train(const TrainOpts& o, std::uint64_t master) {
  gppl::Dataset data = load_data(o.instances, o.format);
  require_input(o.pairs, "--pairs");
  const gppl::FeatureResources res = o.res.load();
  require_output(o.output, "--output");
  const std::vector<gppl::PreferencePair> pairs = gppl::load_pairs(o.pairs);

  gppl::tokenize_dataset(data, res);
  const gppl::FeatureSet raw = gppl::featurize_all(data, res);
  const gppl::Standardization standardization =
      gppl::fit_standardization(raw.values(), res.embeddings.dimension());
  Eigen::MatrixXd values = raw.values();
  standardization.apply(values);
  const gppl::FeatureSet features(raw.ids(), std::move(values), raw.layout());

  gppl::KernelParams kernel;
  kernel.family = gppl::kernel_family_from_string(o.kernel);
  kernel.alpha0 = o.alpha0;
  kernel.beta0 = o.beta0;
  gppl::Rng lengthscale_rng(gppl::stage_seed(master, "lengthscales"));
  kernel.lengthscales =
      gppl::median_heuristic_lengthscales(features.values(), lengthscale_rng);

  gppl::SviConfig svi;
  svi.batch_size = o.batch_size;
  svi.num_inducing = o.num_inducing;
  svi.max_iterations = o.max_iterations;
  svi.convergence_tol = o.convergence_tol;
  svi.learning_delay = o.learning_delay;
  svi.forgetting_rate = o.forgetting_rate;
  svi.likelihood = gppl::pair_likelihood_from_string(o.likelihood);
  svi.seed = gppl::stage_seed(master, "svi");

  std::vector<double> trace;
  gppl::GpplModel model = gppl::fit_svi(pairs, features, svi, kernel, &trace);
  model.standardization = standardization;

  gppl::save_model(model, o.output);
  std::string trace_csv = "iteration,elbo\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    trace_csv += std::to_string(i + 1);
    trace_csv += ",";
    trace_csv += gppl::format_double(trace[i]);
    trace_csv += "\n";
  }
  gppl::write_file(o.elbo_trace.empty() ? o.output + ".elbo.csv"
                                        : o.elbo_trace,
                   trace_csv);
  std::cout << "trained: pairs=" << pairs.size()
            << " inducing=" << model.inducing_inputs.rows()
            << " iterations=" << model.metadata.iterations
            << " final_elbo=" << gppl::format_double(model.metadata.final_elbo)
            << "\n";
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOpts {
  std::string model;
  std::string instances;
  std::string format = "haha_csv";
  std::string output;
  ResourceOpts res;
};

void run_predict(const PredictOpts& o) {
  require_input(o.model, "--model");
  const gppl::GpplModel model = gppl::load_model(o.model);
  gppl::Dataset data = load_data(o.instances, o.format);
  const gppl::FeatureResources res = o.res.load();
  require_output(o.output, "--output");

  gppl::tokenize_dataset(data, res);
  const gppl::FeatureSet raw = gppl::featurize_all(data, res);
  Eigen::MatrixXd values = raw.values();
  if (!model.standardization.empty()) model.standardization.apply(values);
  const gppl::UtilityPosterior post = gppl::predict(model, values);

  std::string csv = "id,raw_mean,raw_variance\n";
  for (Eigen::Index i = 0; i < post.mean.size(); ++i) {
    csv += gppl::csv_quote(raw.ids()[static_cast<std::size_t>(i)]);
    csv += ",";
    csv += gppl::format_double(post.mean[i]);
    csv += ",";
    csv += gppl::format_double(post.variance[i]);
    csv += "\n";
  }
  gppl::write_file(o.output, csv);
  std::cout << "predicted: instances=" << post.mean.size() << "\n";
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct PredColumns {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> row_of;
  std::vector<double> raw_mean;
  std::vector<double> score;
  std::vector<double> label;
  bool has_raw_mean = false;
  bool has_score = false;
  bool has_label = false;
};

PredColumns read_predictions(const std::string& path, const char* flag) {
  require_input(path, flag);
  const std::vector<gppl::CsvRow> rows =
      gppl::parse_csv(gppl::read_file(path), path);
  if (rows.empty()) {
    throw ValidationError(path + ": prediction file has no header");
  }
  const gppl::CsvRow& header = rows.front();
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  if (!col.contains("id")) {
    throw ValidationError(path + ": prediction header needs an 'id' column");
  }
  PredColumns out;
  out.has_raw_mean = col.contains("raw_mean");
  out.has_score = col.contains("score");
  out.has_label = col.contains("label");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const gppl::CsvRow& row = rows[r];
    if (row.size() != header.size()) {
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            " has " + std::to_string(row.size()) +
                            " fields, header has " +
                            std::to_string(header.size()));
    }
    const std::string& id = row[col.at("id")];
    if (!out.row_of.emplace(id, out.ids.size()).second) {
      throw ValidationError(path + ": duplicate prediction id '" + id + "'");
    }
    out.ids.push_back(id);
    const std::string where = path + " row " + std::to_string(r + 1);
    if (out.has_raw_mean) {
      out.raw_mean.push_back(gppl::parse_double(row[col.at("raw_mean")], where));
    }
    if (out.has_score) {
      out.score.push_back(gppl::parse_double(row[col.at("score")], where));
    }
    if (out.has_label) {
      out.label.push_back(gppl::parse_double(row[col.at("label")], where));
    }
  }
  return out;
}

/// Per-dataset-instance lookup into a prediction file; missing ids are a
/// single error naming the first few offenders.
std::vector<std::size_t> align_ids(const gppl::Dataset& data,
                                   const PredColumns& pred,
                                   const std::string& pred_path) {
  std::vector<std::size_t> rows;
  std::vector<std::string> missing;
  rows.reserve(data.size());
  for (const gppl::Instance& inst : data) {
    const auto it = pred.row_of.find(inst.id);
    if (it == pred.row_of.end()) {
      missing.push_back(inst.id);
    } else {
      rows.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    std::string msg = pred_path + ": missing predictions for " +
                      std::to_string(missing.size()) + " instance(s):";
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) {
      msg += " " + missing[i];
    }
    if (missing.size() > 5) msg += " ...";
    throw ValidationError(msg);
  }
  return rows;
}

struct CalibrateOpts {
  std::string raw;
  std::string instances;
  std::string format = "haha_csv";
  std::string output;
  double threshold = 0.0;
  bool threshold_set = false;
};

void run_calibrate(const CalibrateOpts& o, std::uint64_t master) {
  const PredColumns pred = read_predictions(o.raw, "--raw");
  if (!pred.has_raw_mean) {
    throw ValidationError(o.raw + ": calibration needs a 'raw_mean' column");
  }
  const gppl::Dataset data = load_data(o.instances, o.format);
  require_output(o.output, "--output");
  const std::vector<std::size_t> rows = align_ids(data, pred, o.raw);

  std::vector<double> raw_scores, gold_scores;
  std::vector<bool> gold_labels;
  bool labels_complete = true;
  raw_scores.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const gppl::Instance& inst = data[i];
    if (!inst.gold_score) {
      throw ValidationError("instance '" + inst.id +
                            "' has no gold score; cannot calibrate");
    }
    raw_scores.push_back(pred.raw_mean[rows[i]]);
    gold_scores.push_back(*inst.gold_score);
    if (inst.gold_label) {
      gold_labels.push_back(*inst.gold_label);
    } else {
      labels_complete = false;
    }
  }

  gppl::CalibrationMap map = gppl::fit_calibration(
      raw_scores, gold_scores, gppl::stage_seed(master, "calibrate"));
  const std::vector<double> calibrated =
      gppl::apply_calibration(map, raw_scores);
  const double dev_rmse = gppl::rmse(calibrated, gold_scores);

  if (o.threshold_set) {
    map.binary_threshold = o.threshold;
  } else {
    if (!labels_complete) {
      throw ValidationError(
          "threshold tuning needs gold labels on every instance "
          "(or pass --threshold)");
    }
    map.binary_threshold = gppl::tune_threshold(calibrated, gold_labels);
  }

  std::string f1_text = "n/a";
  if (labels_complete) {
    std::vector<bool> decisions(calibrated.size());
    for (std::size_t i = 0; i < calibrated.size(); ++i) {
      decisions[i] = calibrated[i] >= map.binary_threshold;
    }
    f1_text = gppl::format_double(
        gppl::classification_report(decisions, gold_labels).f1);
  }

  gppl::save_calibration(map, o.output);
  std::cout << "calibrated: instances=" << calibrated.size()
            << " threshold=" << gppl::format_double(map.binary_threshold)
            << " dev_f1=" << f1_text
            << " dev_rmse=" << gppl::format_double(dev_rmse) << "\n";
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOpts {
  std::string pred;
  std::string calibration;
  std::string instances;
  std::string format = "haha_csv";
  std::string mode = "both";
  std::string json_out;
};

void run_evaluate(const EvaluateOpts& o) {
  const PredColumns pred = read_predictions(o.pred, "--pred");
  const gppl::Dataset data = load_data(o.instances, o.format);
  const bool want_binary = o.mode == "binary" || o.mode == "both";
  const bool want_score = o.mode == "score" || o.mode == "both";

  gppl::CalibrationMap map;
  bool have_map = false;
  if (!o.calibration.empty()) {
    require_input(o.calibration, "--calibration");
    map = gppl::load_calibration(o.calibration);
    have_map = true;
  }
  const std::vector<std::size_t> rows = align_ids(data, pred, o.pred);

  // Calibrated score per instance: an explicit column wins, otherwise the
  // raw posterior mean is passed through the calibration map.
  std::vector<double> scores;
  const bool can_score =
      pred.has_score || (pred.has_raw_mean && have_map);
  if (can_score) {
    scores.reserve(rows.size());
    for (std::size_t row : rows) {
      scores.push_back(pred.has_score
                           ? pred.score[row]
                           : gppl::apply_calibration(map, pred.raw_mean[row]));
    }
  } else if (want_score) {
    throw ValidationError(
        "score evaluation needs a 'score' column or a 'raw_mean' column "
        "plus --calibration");
  }

  nlohmann::json out;
  out["instances"] = data.size();
  std::string text;
  char line[128];

  if (want_binary) {
    std::vector<bool> decisions;
    decisions.reserve(rows.size());
    if (pred.has_label) {
      for (std::size_t row : rows) decisions.push_back(pred.label[row] != 0.0);
    } else if (can_score && have_map && map.has_threshold()) {
      for (double s : scores) decisions.push_back(s >= map.binary_threshold);
    } else {
      throw ValidationError(
          "binary evaluation needs a 'label' column or scores plus a "
          "calibration with a tuned threshold");
    }
    std::vector<bool> gold;
    gold.reserve(data.size());
    for (const gppl::Instance& inst : data) {
      if (!inst.gold_label) {
        throw ValidationError("instance '" + inst.id +
                              "' has no gold label; cannot evaluate binary");
      }
      gold.push_back(*inst.gold_label);
    }
    const gppl::ClassificationReport rep =
        gppl::classification_report(decisions, gold);
    out["accuracy"] = rep.accuracy;
    out["precision"] = rep.precision;
    out["recall"] = rep.recall;
    out["f1"] = rep.f1;
    std::snprintf(line, sizeof(line),
                  "accuracy %.6f\nprecision %.6f\nrecall %.6f\nf1 %.6f\n",
                  rep.accuracy, rep.precision, rep.recall, rep.f1);
    text += line;
  }

  if (want_score) {
    std::vector<double> gold;
    gold.reserve(data.size());
    for (const gppl::Instance& inst : data) {
      if (!inst.gold_score) {
        throw ValidationError("instance '" + inst.id +
                              "' has no gold score; cannot evaluate scores");
      }
      gold.push_back(*inst.gold_score);
    }
    const double score_rmse = gppl::rmse(scores, gold);
    out["rmse"] = score_rmse;
    std::snprintf(line, sizeof(line), "rmse %.6f\n", score_rmse);
    text += line;
    // Spearman is undefined for constant inputs; report it only when both
    // sides actually vary.
    const auto varies = [](const std::vector<double>& v) {
      for (double x : v) {
        if (x != v.front()) return true;
      }
      return false;
    };
    if (varies(scores) && varies(gold)) {
      const double rho = gppl::spearman(scores, gold);
      out["spearman"] = rho;
      std::snprintf(line, sizeof(line), "spearman %.6f\n", rho);
      text += line;
    } else {
      out["spearman"] = nullptr;
      text += "spearman n/a\n";
    }
  }

  if (!o.json_out.empty()) {
    gppl::write_file(o.json_out, out.dump(2) + "\n");
  }
  std::cout << "evaluated: instances=" << data.size() << " mode=" << o.mode
            << "\n"
            << text;
}

// ---------------------------------------------------------------------------
// wiring
// ---------------------------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  std::string config_path;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path,
                  "Flat key=value config file (command-line flags win)")
      ->configurable(false);
  cmd->add_option("--seed", common.seed,
                  "Master seed, split deterministically per stage")
      ->capture_default_str();
  cmd->add_flag("--print-config", common.print_config,
                "Print the effective configuration and exit")
      ->configurable(false);
}

// CLI11 only ingests config files while parsing the root command, so the
// per-subcommand file is applied by hand: every key fills its option unless
// that flag was also given on the command line (flags win). Keys with empty
// values mirror unset options in the --print-config echo and are skipped,
// which keeps the echo reparseable.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw gppl::ValidationError("--config file not found: " + path);
  }
  std::vector<CLI::ConfigItem> items;
  try {
    items = cmd->get_config_formatter()->from_file(path);
  } catch (const CLI::Error& e) {
    throw gppl::ValidationError(std::string("--config: ") + e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (!item.parents.empty()) {
      throw gppl::ValidationError(
          "--config: file must be flat, found sectioned key '" +
          item.fullname() + "'");
    }
    CLI::Option* opt = cmd->get_option_no_throw("--" + item.name);
    if (opt == nullptr || !opt->get_configurable()) {
      throw gppl::ValidationError("--config: unknown key '" + item.name +
                                  "' for subcommand '" + cmd->get_name() +
                                  "'");
    }
    if (opt->count() > 0) continue;
    if (item.inputs.size() == 1 && item.inputs.front().empty()) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

void add_format_flag(CLI::App* cmd, std::string& format) {
  cmd->add_option("--format", format,
                  "Instance file format: haha_csv or plain_tsv")
      ->capture_default_str()
      ->check(CLI::IsMember({"haha_csv", "plain_tsv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process preference learning for funniness ranking"};
  app.require_subcommand(1);

  Common common;

  PairsOpts pairs_opts;
  CLI::App* pairs_cmd = app.add_subcommand(
      "pairs", "Convert gold scores into capped, subsampled preference pairs");
  add_common(pairs_cmd, common);
  pairs_cmd->add_option("--instances", pairs_opts.instances,
                        "Instance file with gold scores");
  add_format_flag(pairs_cmd, pairs_opts.format);
  pairs_cmd->add_option("--output", pairs_opts.output, "Pairs TSV to write");
  pairs_cmd->add_option("--sidecar", pairs_opts.sidecar,
                        "Count report JSON (default: <output>.json)");
  pairs_cmd
      ->add_option("--cap-per-better", pairs_opts.cap_per_better,
                   "Max pairs kept per funnier instance")
      ->capture_default_str();
  pairs_cmd
      ->add_option("--keep-fraction", pairs_opts.keep_fraction,
                   "Random fraction of capped pairs to keep, in (0, 1]")
      ->capture_default_str();

  FeaturizeOpts feat_opts;
  CLI::App* feat_cmd = app.add_subcommand(
      "featurize", "Write the raw feature matrix and its layout sidecar");
  add_common(feat_cmd, common);
  feat_cmd->add_option("--instances", feat_opts.instances, "Instance file");
  add_format_flag(feat_cmd, feat_opts.format);
  feat_opts.res.add_flags(feat_cmd);
  feat_cmd->add_option("--output", feat_opts.output, "Feature CSV to write");
  feat_cmd->add_option("--layout", feat_opts.layout_out,
                       "Layout JSON (default: <output>.layout.json)");

  TrainOpts train_opts;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Fit the preference model on a pair file");
  add_common(train_cmd, common);
  train_cmd->add_option("--instances", train_opts.instances, "Instance file");
  add_format_flag(train_cmd, train_opts.format);
  train_cmd->add_option("--pairs", train_opts.pairs, "Training pairs TSV");
  train_opts.res.add_flags(train_cmd);
  train_cmd->add_option("--output", train_opts.output, "Model JSON to write");
  train_cmd->add_option("--elbo-trace", train_opts.elbo_trace,
                        "Objective trace CSV (default: <output>.elbo.csv)");
  train_cmd
      ->add_option("--kernel", train_opts.kernel,
                   "Kernel family: matern32 or sqexp")
      ->capture_default_str()
      ->check(CLI::IsMember({"matern32", "sqexp"}));
  train_cmd
      ->add_option("--likelihood", train_opts.likelihood,
                   "Pair likelihood: thurstone_mosteller or bradley_terry")
      ->capture_default_str()
      ->check(CLI::IsMember({"thurstone_mosteller", "bradley_terry"}));
  train_cmd->add_option("--alpha0", train_opts.alpha0, "Kernel scale shape")
      ->capture_default_str();
  train_cmd->add_option("--beta0", train_opts.beta0, "Kernel scale rate")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train_opts.batch_size,
                        "Pairs sampled per iteration")
      ->capture_default_str();
  train_cmd->add_option("--num-inducing", train_opts.num_inducing,
                        "Inducing point budget")
      ->capture_default_str();
  train_cmd->add_option("--max-iterations", train_opts.max_iterations,
                        "Iteration cap")
      ->capture_default_str();
  train_cmd->add_option("--convergence-tol", train_opts.convergence_tol,
                        "Objective-plateau stopping tolerance")
      ->capture_default_str();
  train_cmd->add_option("--learning-delay", train_opts.learning_delay,
                        "Step-size delay offset")
      ->capture_default_str();
  train_cmd->add_option("--forgetting-rate", train_opts.forgetting_rate,
                        "Step-size decay exponent, in (0.5, 1]")
      ->capture_default_str();

  PredictOpts predict_opts;
  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "Emit raw utility posteriors for an instance file");
  add_common(predict_cmd, common);
  predict_cmd->add_option("--model", predict_opts.model, "Trained model JSON");
  predict_cmd->add_option("--instances", predict_opts.instances,
                          "Instance file");
  add_format_flag(predict_cmd, predict_opts.format);
  predict_opts.res.add_flags(predict_cmd);
  predict_cmd->add_option("--output", predict_opts.output,
                          "Predictions CSV to write (id,raw_mean,raw_variance)");

  CalibrateOpts cal_opts;
  CLI::App* cal_cmd = app.add_subcommand(
      "calibrate", "Map raw utilities onto [0,5] and tune the F1 threshold");
  add_common(cal_cmd, common);
  cal_cmd->add_option("--raw", cal_opts.raw,
                      "Raw predictions CSV from the predict step");
  cal_cmd->add_option("--instances", cal_opts.instances,
                      "Dev instance file with gold scores/labels");
  add_format_flag(cal_cmd, cal_opts.format);
  cal_cmd->add_option("--output", cal_opts.output,
                      "Calibration JSON to write");
  CLI::Option* thr_opt = cal_cmd->add_option(
      "--threshold", cal_opts.threshold,
      "Fixed decision threshold (skips F1 tuning)");

  EvaluateOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand(
      "evaluate", "Score predictions against gold labels and ratings");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--pred", eval_opts.pred,
                       "Predictions CSV (id plus raw_mean/score/label)");
  eval_cmd->add_option("--calibration", eval_opts.calibration,
                       "Calibration JSON used to derive scores and labels");
  eval_cmd->add_option("--instances", eval_opts.instances,
                       "Gold instance file");
  add_format_flag(eval_cmd, eval_opts.format);
  eval_cmd
      ->add_option("--mode", eval_opts.mode,
                   "What to score: binary, score or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"binary", "score", "both"}));
  eval_cmd->add_option("--json", eval_opts.json_out,
                       "Also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (!common.config_path.empty()) {
      apply_config_file(active, common.config_path);
    }
    if (common.print_config) {
      std::cout << active->config_to_str(true, false);
      return 0;
    }
    cal_opts.threshold_set = thr_opt->count() > 0;
    if (active == pairs_cmd) {
      run_pairs(pairs_opts, common.seed);
    } else if (active == feat_cmd) {
      run_featurize(feat_opts);
    } else if (active == train_cmd) {
      run_train(train_opts, common.seed);
    } else if (active == predict_cmd) {
      run_predict(predict_opts);
    } else if (active == cal_cmd) {
      run_calibrate(cal_opts, common.seed);
    } else if (active == eval_cmd) {
      run_evaluate(eval_opts);
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
