/*
 * Copyright 2026 The condrank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// condrank command-line driver.
//
// Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
// 4 solver failure.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "condrank/ec.hpp"
#include "condrank/errors.hpp"
#include "condrank/harness.hpp"
#include "condrank/kernel.hpp"
#include "condrank/matrix.hpp"
#include "condrank/model_io.hpp"
#include "condrank/providers/providers.hpp"
#include "condrank/providers/synth.hpp"
#include "condrank/report.hpp"

namespace {

using namespace condrank;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw DataError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw DataError("write failed for " + path);
}

SimilarityMatrix load_similarity(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_similarity_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_similarity(const SimilarityMatrix& s, const std::string& path) {
  auto out = open_out(path);
  write_similarity_csv(out, s);
  finish(out, path);
}

// Experiment flags are collected separately and applied over the --config
// file, so an explicit flag always wins over the file.
class ExperimentFlags {
 public:
  void add(CLI::App* app, bool supervised) {
    app->add_option("--config", config_path_, "JSON file with experiment settings")->check(CLI::ExistingFile);
    bind(app, "--similarity", &ExperimentConfig::similarity_path, "similarity matrix CSV");
    bind(app, "--labels", &ExperimentConfig::labels_path, "EC label TSV (id<TAB>ec)");
    bind(app, "--out-dir", &ExperimentConfig::output_dir, "output directory for the report files");
    bind(app, "--method", &ExperimentConfig::method, "method name used in the report");
    bind(app, "--seed", &ExperimentConfig::seed, "fold assignment seed");
    bind(app, "--outer-folds", &ExperimentConfig::outer_folds, "outer cross-validation folds");
    bind(app, "--threshold", &ExperimentConfig::relevance_threshold, "relevance threshold for AUC and MAP");
    bind(app, "--workers", &ExperimentConfig::workers, "worker threads (0 = all hardware threads)");
    auto gain = std::make_shared<std::string>();
    auto* gopt = app->add_option("--gain", *gain, "nDCG gain: linear or exponential")
                     ->check(CLI::IsMember({"linear", "exponential"}));
    apply_.push_back([gain, gopt](ExperimentConfig& c) {
      if (gopt->count()) c.gain = parse_gain(*gain);
    });
    app->add_option("--truncation-file", truncation_path_, "MCS truncation TSV to record in the manifest")
        ->check(CLI::ExistingFile);
    if (!supervised) return;
    bind(app, "--lambda-grid", &ExperimentConfig::lambda_grid, "regularization grid");
    bind(app, "--inner-folds", &ExperimentConfig::inner_folds, "inner cross-validation folds");
    auto mode = std::make_shared<std::string>();
    auto* mopt = app->add_option("--solver", *mode, "direct, iterative or auto")
                     ->check(CLI::IsMember({"direct", "iterative", "auto"}));
    apply_.push_back([mode, mopt](ExperimentConfig& c) {
      if (mopt->count()) c.solver.mode = parse_solver_mode(*mode);
    });
    bind_solver(app, "--tol", &SolverOptions::cg_tol, "iterative solver relative residual");
    bind_solver(app, "--max-iters", &SolverOptions::max_iters, "iterative solver iteration cap");
    bind_solver(app, "--direct-threshold", &SolverOptions::direct_threshold,
                "largest pair count solved densely in auto mode");
    bind_solver(app, "--restart", &SolverOptions::restart, "GMRES restart length");
    auto* np = app->add_flag("--no-precondition", "disable the iterative solver preconditioner");
    apply_.push_back([np](ExperimentConfig& c) {
      if (np->count()) c.solver.precondition = false;
    });
    app->add_flag("--save-models", save_models_, "write each outer fold's model into the output directory");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path_.empty()) {
      auto in = open_in(config_path_);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_path_ + ": " + e.what());
      }
      cfg = config_from_json(j);
    }
    for (const auto& f : apply_) f(cfg);
    if (cfg.similarity_path.empty()) throw ConfigError("--similarity is required");
    if (cfg.labels_path.empty()) throw ConfigError("--labels is required");
    if (cfg.output_dir.empty()) throw ConfigError("--out-dir is required");
    cfg.validate();
    return cfg;
  }

  const std::string& truncation_path() const { return truncation_path_; }
  bool save_models() const { return save_models_; }

 private:
  template <class T>
  void bind(CLI::App* app, const std::string& name, T ExperimentConfig::*field, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    apply_.push_back([value, opt, field](ExperimentConfig& c) {
      if (opt->count()) c.*field = *value;
    });
  }

  template <class T>
  void bind_solver(CLI::App* app, const std::string& name, T SolverOptions::*field, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    apply_.push_back([value, opt, field](ExperimentConfig& c) {
      if (opt->count()) c.solver.*field = *value;
    });
  }

  std::string config_path_;
  std::string truncation_path_;
  bool save_models_ = false;
  std::vector<std::function<void(ExperimentConfig&)>> apply_;
};

nlohmann::json read_truncation(const std::string& path) {
  nlohmann::json pairs = nlohmann::json::array();
  if (path.empty()) return pairs;
  auto in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path + ": expected 'id<TAB>id' lines");
    pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return pairs;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  const SimilarityMatrix s = load_similarity(cfg.similarity_path);
  auto in = open_in(cfg.labels_path);
  std::vector<EcLabel> labels;
  try {
    labels = read_labels(in);
  } catch (const DataError& e) {
    throw DataError(cfg.labels_path + ": " + e.what());
  }
  return prepare_dataset(s, labels);
}

nlohmann::json fold_sizes(const FoldPlan& plan) {
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& f : plan.folds) sizes.push_back(f.split.test.size());
  return sizes;
}

void print_summary(const EvalReport& r) {
  std::cout << r.method;
  for (Metric m : kAllMetrics) {
    const auto& mr = r.metric(m);
    std::cout << "  " << metric_name(m) << '=';
    if (mr.defined)
      std::cout << mr.summary.mean << " (" << mr.summary.std << ')';
    else
      std::cout << "n/a";
  }
  std::cout << '\n';
}

int run_rank(const ExperimentFlags& flags, bool supervised) {
  const ExperimentConfig cfg = flags.resolve();
  const Dataset data = load_dataset(cfg);
  const FoldPlan plan = make_folds(data.kernel.ids(), cfg);
  nlohmann::json manifest = base_manifest(cfg);
  manifest["protocol"] = supervised ? "supervised" : "unsupervised";
  manifest["objects"] = data.kernel.size();
  manifest["fold_sizes"] = fold_sizes(plan);
  manifest["truncation"]["mcs_lower_bound_pairs"] = read_truncation(flags.truncation_path());
  if (!supervised) {
    const EvalReport r = run_unsupervised(data, plan, cfg);
    emit_report({r}, std::move(manifest), cfg.output_dir);
    print_summary(r);
    return 0;
  }
  const SupervisedResult res = run_supervised(data, plan, cfg);
  manifest["model_selection"] = selections_json(res, cfg.lambda_grid);
  if (flags.save_models()) {
    for (std::size_t f = 0; f < res.folds.size(); ++f) {
      const std::string stem = (fs::path(cfg.output_dir) / ("model_fold" + std::to_string(f))).string();
      auto csv = open_out(stem + ".csv");
      write_model_coefficients(csv, res.folds[f].model);
      finish(csv, stem + ".csv");
      auto meta = open_out(stem + ".json");
      meta << model_metadata(res.folds[f].model).dump(2) << '\n';
      finish(meta, stem + ".json");
    }
  }
  emit_report({res.report}, std::move(manifest), cfg.output_dir);
  print_summary(res.report);
  for (std::size_t f = 0; f < res.folds.size(); ++f)
    std::cout << "fold " << f << ": lambda=" << res.folds[f].lambda << '\n';
  return 0;
}

int run_app(int argc, char** argv) {
  CLI::App app{"Conditional ranking of objects by learned pairwise similarity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // sanitize
  std::string san_in, san_out;
  auto* san = app.add_subcommand("sanitize", "symmetrize, PSD-project and normalize a similarity matrix");
  san->add_option("-i,--input", san_in, "similarity matrix CSV")->required()->check(CLI::ExistingFile);
  san->add_option("-o,--output", san_out, "kernel matrix CSV")->required();

  // provider
  auto* prov = app.add_subcommand("provider", "compute a similarity matrix");
  prov->require_subcommand(1);
  unsigned workers = 0;
  std::string out_path;

  std::string fasta;
  AlignmentParams ap;
  std::string denominator = "alignment";
  auto* sw = prov->add_subcommand("sw", "Smith-Waterman sequence identity");
  sw->add_option("--fasta", fasta, "sequences")->required()->check(CLI::ExistingFile);
  sw->add_option("--gap-open", ap.gap_open, "gap opening penalty")->capture_default_str();
  sw->add_option("--gap-extend", ap.gap_extend, "gap extension penalty")->capture_default_str();
  sw->add_option("--denominator", denominator, "identity denominator: alignment or shorter")
      ->check(CLI::IsMember({"alignment", "shorter"}))
      ->capture_default_str();

  std::string clouds;
  double epsilon = kDefaultEdgeTolerance;
  double budget = static_cast<double>(kDefaultCliqueBudget);
  std::string truncated_out;
  auto* mcs = prov->add_subcommand("mcs", "maximum common labelled subgraph of pseudocenter clouds");
  mcs->add_option("--clouds", clouds, "point-cloud JSON")->required()->check(CLI::ExistingFile);
  mcs->add_option("--epsilon", epsilon, "edge length tolerance in Angstrom")->capture_default_str();
  mcs->add_option("--budget", budget, "clique search expansions per pair")->capture_default_str();
  mcs->add_option("--truncated", truncated_out, "write pairs that hit the budget to this TSV");

  double bin_width = kDefaultBinWidth, max_dist = kDefaultMaxDistance;
  auto* fp = prov->add_subcommand("fp", "labelled-triangle fingerprint Jaccard similarity");
  fp->add_option("--clouds", clouds, "point-cloud JSON")->required()->check(CLI::ExistingFile);
  fp->add_option("--bin-width", bin_width, "distance bin width in Angstrom")->capture_default_str();
  fp->add_option("--max-distance", max_dist, "distances beyond this share the last bin")->capture_default_str();

  SynthConfig sc;
  sc.total = 200;
  std::string labels_out, set = "II";
  std::vector<double> weights;
  auto* syn = prov->add_subcommand("synth", "synthetic EC-structured benchmark");
  syn->add_option("--labels-out", labels_out, "label TSV to write")->required();
  syn->add_option("--total", sc.total, "number of objects (0 keeps the reference counts)")->capture_default_str();
  syn->add_option("--set", set, "reference class proportions: I or II")
      ->check(CLI::IsMember({"I", "II"}))
      ->capture_default_str();
  syn->add_option("--dim", sc.dim, "embedding dimension")->capture_default_str();
  syn->add_option("--sigma", sc.sigma, "per-object embedding noise")->capture_default_str();
  syn->add_option("--obs-noise", sc.obs_noise, "per-pair observation noise")->capture_default_str();
  syn->add_option("--level-weights", weights, "four per-level latent weights")->expected(4);
  syn->add_option("--seed", sc.seed, "generator seed")->capture_default_str();

  for (auto* sub : {sw, mcs, fp, syn}) {
    sub->add_option("-o,--output", out_path, "similarity matrix CSV to write")->required();
    if (sub != syn) sub->add_option("--workers", workers, "worker threads (0 = all hardware threads)");
  }

  ExperimentFlags unsup_flags, sup_flags;
  auto* unsup = app.add_subcommand("rank-unsup", "evaluate the similarity itself as a ranker");
  unsup_flags.add(unsup, false);
  auto* sup = app.add_subcommand("rank-sup", "nested cross-validation of the learned ranker");
  sup_flags.add(sup, true);

  std::vector<std::string> summaries;
  std::string report_dir;
  auto* rep = app.add_subcommand("report", "merge summary.json files into one report");
  rep->add_option("--summary", summaries, "summary.json files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out-dir", report_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*san) {
    const KernelMatrix k = sanitize(load_similarity(san_in));
    auto out = open_out(san_out);
    write_kernel_csv(out, k);
    finish(out, san_out);
    return 0;
  }
  if (*sw) {
    ap.denominator =
        denominator == "alignment" ? IdentityDenominator::kAlignmentLength : IdentityDenominator::kShorterSequence;
    auto in = open_in(fasta);
    const auto seqs = read_fasta(in);
    save_similarity(sw_similarity_matrix(seqs, ap, workers), out_path);
    return 0;
  }
  if (*mcs || *fp) {
    auto in = open_in(clouds);
    const auto pcs = read_point_clouds(in);
    if (*fp) {
      save_similarity(fp_similarity_matrix(pcs, bin_width, max_dist, workers), out_path);
      return 0;
    }
    if (!(budget >= 1.0)) throw ConfigError("--budget must be >= 1");
    const McsMatrix m = mcs_similarity_matrix(pcs, epsilon, static_cast<long long>(budget), workers);
    save_similarity(m.similarity, out_path);
    if (!truncated_out.empty()) {
      auto out = open_out(truncated_out);
      for (const auto& [a, b] : m.truncated) out << a << '\t' << b << '\n';
      finish(out, truncated_out);
    }
    if (!m.truncated.empty())
      std::cerr << "warning: " << m.truncated.size() << " pairs hit the clique budget; their values are lower bounds\n";
    return 0;
  }
  if (*syn) {
    sc.classes = reference_classes(set == "II");
    if (!weights.empty()) std::copy(weights.begin(), weights.end(), sc.level_weights.begin());
    const SynthData d = synth_generate(sc);
    save_similarity(d.similarity, out_path);
    auto out = open_out(labels_out);
    write_labels(out, d.labels);
    finish(out, labels_out);
    return 0;
  }
  if (*unsup) return run_rank(unsup_flags, false);
  if (*sup) return run_rank(sup_flags, true);
  if (*rep) {
    std::vector<EvalReport> reports;
    for (const auto& path : summaries) {
      auto in = open_in(path);
      nlohmann::json j;
      try {
        in >> j;
        for (const auto& m : j.at("methods")) reports.push_back(report_from_json(m));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
      }
    }
    nlohmann::json manifest = {{"inputs", summaries},
                               {"versions", base_manifest(ExperimentConfig{})["versions"]}};
    emit_report(reports, std::move(manifest), report_dir);
    for (const auto& r : reports) print_summary(r);
    return 0;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
