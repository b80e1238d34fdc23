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

// Report files written into an output directory:
//   summary.csv        one row per metric, one "mean (std)" column per method
//   summary.json       full reports, including per-query values and skips
//   roc_<method>.csv   pooled ROC curve per method
//   manifest.json      caller-supplied run description plus versions
// Nothing time-dependent is written, so reruns are byte-identical.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "condrank/errors.hpp"
#include "condrank/harness.hpp"
#include "condrank/metrics.hpp"

namespace condrank {

inline constexpr const char* kVersion = "0.1.0";

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    const MetricReport& mr = r.metric(m);
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& qv : mr.per_query) per_query.push_back({{"query", qv.query}, {"value", qv.value}});
    nlohmann::json entry = {{"per_query", std::move(per_query)}, {"skipped", mr.skipped}, {"count", mr.summary.count}};
    if (mr.defined) {
      entry["mean"] = mr.summary.mean;
      entry["std"] = mr.summary.std;
    } else {
      entry["mean"] = nullptr;
      entry["std"] = nullptr;
    }
    metrics[std::string(metric_name(m))] = std::move(entry);
  }
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr});
  return {{"method", r.method},
          {"queries", r.queries},
          {"metrics", std::move(metrics)},
          {"pooled_auc", r.pooled_auc},
          {"roc", std::move(roc)}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.queries = j.at("queries").get<std::size_t>();
    r.pooled_auc = j.at("pooled_auc").get<double>();
    for (const auto& p : j.at("roc")) r.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (Metric m : kAllMetrics) {
      const auto& e = j.at("metrics").at(std::string(metric_name(m)));
      MetricReport& mr = r.metric(m);
      for (const auto& qv : e.at("per_query")) mr.per_query.push_back({qv.at("query"), qv.at("value")});
      mr.skipped = e.at("skipped").get<std::vector<std::string>>();
      mr.defined = !e.at("mean").is_null();
      mr.summary.count = e.at("count").get<std::size_t>();
      if (mr.defined) {
        mr.summary.mean = e.at("mean").get<double>();
        mr.summary.std = e.at("std").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report JSON: ") + e.what());
  }
  return r;
}

// Versions and the preprocessing note common to every manifest.
inline nlohmann::json base_manifest(const ExperimentConfig& cfg) {
  return {{"config", to_json(cfg)},
          {"seed", cfg.seed},
          {"versions",
           {{"condrank", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}}},
          {"sanitization",
           {{"mode", "transductive"},
            {"eigenvalue_clip", kEigenvalueClip},
            {"note",
             "symmetrization, PSD projection and diagonal normalization were applied once to the full "
             "similarity matrix before fold splitting; test objects' similarities were visible, labels were not"}}},
          {"truncation", {{"mcs_lower_bound_pairs", nlohmann::json::array()}}}};
}

namespace detail {

inline std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

inline void check_written(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw DataError("write failed for " + p.string());
}

}  // namespace detail

inline void write_summary_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "metric";
  for (const auto& r : reports) out << ',' << r.method;
  out << '\n';
  for (Metric m : kAllMetrics) {
    out << metric_name(m);
    for (const auto& r : reports) {
      const MetricReport& mr = r.metric(m);
      out << ',';
      if (mr.defined)
        out << detail::fmt("%.4f", mr.summary.mean) << " (" << detail::fmt("%.4f", mr.summary.std) << ')';
      else
        out << "n/a";
    }
    out << '\n';
  }
}

inline void write_roc_csv(std::ostream& out, const EvalReport& r) {
  out << "fpr,tpr\n";
  for (const auto& p : r.roc) out << detail::fmt("%.17g", p.fpr) << ',' << detail::fmt("%.17g", p.tpr) << '\n';
}

inline void emit_report(const std::vector<EvalReport>& reports, nlohmann::json manifest,
                        const std::filesystem::path& out_dir) {
  if (reports.empty()) throw DataError("no reports to emit");
  for (std::size_t i = 0; i < reports.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (detail::file_safe(reports[i].method) == detail::file_safe(reports[j].method))
        throw DataError("reports '" + reports[j].method + "' and '" + reports[i].method +
                        "' would share output files; give them distinct method names");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  {
    const auto p = out_dir / "summary.csv";
    auto out = detail::open_output(p);
    write_summary_csv(out, reports);
    detail::check_written(out, p);
  }
  {
    const auto p = out_dir / "summary.json";
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& r : reports) methods.push_back(to_json(r));
    auto out = detail::open_output(p);
    out << nlohmann::json{{"methods", std::move(methods)}}.dump(2) << '\n';
    detail::check_written(out, p);
  }
  for (const auto& r : reports) {
    const auto p = out_dir / ("roc_" + detail::file_safe(r.method) + ".csv");
    auto out = detail::open_output(p);
    write_roc_csv(out, r);
    detail::check_written(out, p);
  }
  {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& r : reports) methods.push_back(r.method);
    manifest["methods"] = std::move(methods);
    const auto p = out_dir / "manifest.json";
    auto out = detail::open_output(p);
    out << manifest.dump(2) << '\n';
    detail::check_written(out, p);
  }
}

// Per-fold selection record for the manifest.
inline nlohmann::json selections_json(const SupervisedResult& r, const std::vector<double>& grid) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json inner = nlohmann::json::array();
    for (const auto& s : f.inner) {
      nlohmann::json ra = nlohmann::json::array();
      for (double v : s.mean_ra) ra.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
      inner.push_back({{"best_lambda", s.best_lambda}, {"validation_ra", std::move(ra)}});
    }
    folds.push_back({{"lambda", f.lambda},
                     {"solver", std::string(to_string(f.model.solver))},
                     {"residual", f.model.residual},
                     {"iterations", f.model.iterations},
                     {"inner", std::move(inner)}});
  }
  return {{"lambda_grid", grid}, {"folds", std::move(folds)}};
}

}  // namespace condrank
