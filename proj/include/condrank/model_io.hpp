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

// A trained model is stored as two files: the coefficient matrix in the
// similarity CSV layout (rows and columns labelled by training ids) and a
// JSON sidecar with the solve metadata.

#pragma once

#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "condrank/ids.hpp"
#include "condrank/matrix.hpp"
#include "condrank/rankrls.hpp"

namespace condrank {

inline void write_model_coefficients(std::ostream& out, const RankModel& model) {
  write_matrix_csv(out, model.train_ids, model.coefficients);
}

inline nlohmann::json model_metadata(const RankModel& model) {
  return {{"lambda", model.lambda},
          {"solver_mode", std::string(to_string(model.solver))},
          {"residual", model.residual},
          {"iterations", model.iterations},
          {"train_ids_hash", hash_ids(model.train_ids)}};
}

inline RankModel read_model(std::istream& coefficients, std::istream& metadata) {
  LabeledMatrix m = read_matrix_csv(coefficients);
  RankModel model;
  model.train_ids = m.ids.ids();
  model.coefficients = std::move(m.values);
  nlohmann::json j;
  try {
    metadata >> j;
    model.lambda = j.at("lambda").get<double>();
    model.solver = parse_solver_mode(j.at("solver_mode").get<std::string>());
    model.residual = j.at("residual").get<double>();
    model.iterations = j.value("iterations", 0);
    const std::string hash = j.at("train_ids_hash").get<std::string>();
    if (hash != hash_ids(model.train_ids))
      throw DataError("model sidecar train_ids_hash " + hash + " does not match the coefficient ids");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model sidecar: ") + e.what());
  }
  return model;
}

}  // namespace condrank
