// Copyright 2026 The rscl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <set>
#include <sstream>

#include "rscl/error.h"
#include "rscl/runner.h"

namespace rscl {
namespace {

using nlohmann::json;

void CheckKeys(const json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  if (!j.is_object()) throw ContractError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ContractError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void ReadOptional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

DatasetKind ParseDatasetKind(const std::string& s) {
  if (s == "gaussian_mixture") return DatasetKind::kGaussianMixture;
  if (s == "csv") return DatasetKind::kCsv;
  if (s == "idx") return DatasetKind::kIdx;
  throw ContractError("unknown dataset kind '" + s + "'");
}

std::string DatasetKindName(DatasetKind k) {
  switch (k) {
    case DatasetKind::kGaussianMixture: return "gaussian_mixture";
    case DatasetKind::kCsv: return "csv";
    case DatasetKind::kIdx: return "idx";
  }
  return "";
}

ContaminationMode ParseContaminationMode(const std::string& s) {
  if (s == "from_tau_formula") return ContaminationMode::kFromTauFormula;
  if (s == "explicit") return ContaminationMode::kExplicit;
  throw ContractError("unknown tau_fp_mode '" + s + "'");
}

WeightMode ParseWeightMode(const std::string& s) {
  if (s == "count") return WeightMode::kCount;
  if (s == "explicit") return WeightMode::kExplicit;
  throw ContractError("unknown weight mode '" + s + "'");
}

}  // namespace

void TrainConfig::Validate() const {
  if (!seed) throw ContractError("a seed is required (config 'seed' or --seed)");
  noise.Validate();
  loss.Validate();
  if (encoder_dims.empty()) throw ContractError("encoder_dims must not be empty");
  for (std::size_t d : encoder_dims) {
    if (d == 0) throw ContractError("encoder_dims entries must be positive");
  }
  if (optimizer.epochs < 0) throw ContractError("epochs must be non-negative");
  if (!(optimizer.lr >= 0.0)) throw ContractError("lr must be non-negative");
  if (batch.samples_per_class < 2 || batch.batch_size % batch.samples_per_class != 0) {
    throw ContractError("batch_size must be a multiple of samples_per_class >= 2");
  }
  if (checkpoint_every < 0 || probe.every < 0) {
    throw ContractError("checkpoint_every and probe.every must be non-negative");
  }
  if (dataset.kind == DatasetKind::kCsv &&
      (dataset.train_path.empty() || dataset.test_path.empty())) {
    throw ContractError("csv dataset needs train_path and test_path");
  }
  if (dataset.kind == DatasetKind::kIdx &&
      (dataset.train_images.empty() || dataset.train_labels.empty() ||
       dataset.test_images.empty() || dataset.test_labels.empty())) {
    throw ContractError("idx dataset needs train/test images and labels paths");
  }
}

std::uint64_t TrainConfig::RunSeed() const {
  if (!seed) throw ContractError("a seed is required (config 'seed' or --seed)");
  return *seed;
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig cfg;
  try {
    CheckKeys(j, {"dataset", "noise", "noise_seed", "loss", "encoder_dims", "optimizer",
                  "batch", "probe", "seed", "output_dir", "checkpoint_every"},
              "config");
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      CheckKeys(d, {"kind", "class_count", "dim", "n_per_class", "n_test_per_class",
                    "class_sep", "intra_std", "seed", "train_path", "test_path",
                    "train_images", "train_labels", "test_images", "test_labels"},
                "dataset");
      DatasetRef& r = cfg.dataset;
      if (d.contains("kind")) r.kind = ParseDatasetKind(d.at("kind").get<std::string>());
      ReadOptional(d, "class_count", r.class_count);
      if (r.class_count) r.mixture.class_count = *r.class_count;
      Read(d, "dim", r.mixture.dim);
      Read(d, "n_per_class", r.mixture.n_per_class);
      Read(d, "n_test_per_class", r.mixture.n_test_per_class);
      Read(d, "class_sep", r.mixture.class_sep);
      Read(d, "intra_std", r.mixture.intra_std);
      ReadOptional(d, "seed", r.seed);
      Read(d, "train_path", r.train_path);
      Read(d, "test_path", r.test_path);
      Read(d, "train_images", r.train_images);
      Read(d, "train_labels", r.train_labels);
      Read(d, "test_images", r.test_images);
      Read(d, "test_labels", r.test_labels);
    }
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      CheckKeys(n, {"model", "rate", "gamma", "seed"}, "noise");
      if (n.contains("model")) cfg.noise.model = ParseNoiseModel(n.at("model").get<std::string>());
      Read(n, "rate", cfg.noise.rate);
      Read(n, "gamma", cfg.noise.gamma);
      ReadOptional(n, "seed", cfg.noise_seed);
    }
    ReadOptional(j, "noise_seed", cfg.noise_seed);
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      CheckKeys(l, {"objective", "beta", "temperature", "tau", "class_count", "tau_fp_mode",
                    "tau_fp", "tau_fn", "q_weight_mode", "w_weight_mode", "q_value",
                    "w_value", "clamp_floor", "positive_weighting"},
                "loss");
      LossConfig& c = cfg.loss;
      if (l.contains("objective")) c.objective = ParseObjective(l.at("objective").get<std::string>());
      Read(l, "beta", c.beta);
      Read(l, "temperature", c.temperature);
      if (l.contains("tau") && !l.at("tau").is_null()) {
        c.tau = l.at("tau").get<double>();
        cfg.loss_tau_explicit = true;
      }
      if (l.contains("class_count") && !l.at("class_count").is_null()) {
        c.class_count = l.at("class_count").get<int>();
        cfg.loss_class_count_explicit = true;
      }
      if (l.contains("tau_fp_mode")) {
        c.tau_fp_mode = ParseContaminationMode(l.at("tau_fp_mode").get<std::string>());
      }
      Read(l, "tau_fp", c.tau_fp);
      Read(l, "tau_fn", c.tau_fn);
      if (l.contains("q_weight_mode")) c.q_weight_mode = ParseWeightMode(l.at("q_weight_mode").get<std::string>());
      if (l.contains("w_weight_mode")) c.w_weight_mode = ParseWeightMode(l.at("w_weight_mode").get<std::string>());
      Read(l, "q_value", c.q_value);
      Read(l, "w_value", c.w_value);
      ReadOptional(l, "clamp_floor", c.clamp_floor);
      if (l.contains("positive_weighting")) {
        c.positive_weighting = ParsePositiveWeighting(l.at("positive_weighting").get<std::string>());
      }
    }
    Read(j, "encoder_dims", cfg.encoder_dims);
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      CheckKeys(o, {"kind", "lr", "epochs"}, "optimizer");
      if (o.contains("kind")) {
        const std::string kind = o.at("kind").get<std::string>();
        if (kind == "adam") {
          cfg.optimizer.kind = OptimizerKind::kAdam;
        } else if (kind == "sgd") {
          cfg.optimizer.kind = OptimizerKind::kSgd;
        } else {
          throw ContractError("unknown optimizer '" + kind + "'");
        }
      }
      Read(o, "lr", cfg.optimizer.lr);
      Read(o, "epochs", cfg.optimizer.epochs);
    }
    if (j.contains("batch")) {
      const json& b = j.at("batch");
      CheckKeys(b, {"batch_size", "samples_per_class"}, "batch");
      Read(b, "batch_size", cfg.batch.batch_size);
      Read(b, "samples_per_class", cfg.batch.samples_per_class);
    }
    if (j.contains("probe")) {
      const json& p = j.at("probe");
      CheckKeys(p, {"epochs", "lr", "every"}, "probe");
      Read(p, "epochs", cfg.probe.epochs);
      Read(p, "lr", cfg.probe.lr);
      Read(p, "every", cfg.probe.every);
    }
    ReadOptional(j, "seed", cfg.seed);
    Read(j, "output_dir", cfg.output_dir);
    Read(j, "checkpoint_every", cfg.checkpoint_every);
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
  return cfg;
}

json TrainConfigToJson(const TrainConfig& cfg) {
  const DatasetRef& r = cfg.dataset;
  json dataset = {{"kind", DatasetKindName(r.kind)}};
  if (r.kind == DatasetKind::kGaussianMixture) {
    dataset["class_count"] = r.mixture.class_count;
    dataset["dim"] = r.mixture.dim;
    dataset["n_per_class"] = r.mixture.n_per_class;
    dataset["n_test_per_class"] = r.mixture.n_test_per_class;
    dataset["class_sep"] = r.mixture.class_sep;
    dataset["intra_std"] = r.mixture.intra_std;
    if (r.seed) dataset["seed"] = *r.seed;
  } else if (r.kind == DatasetKind::kCsv) {
    dataset["train_path"] = r.train_path;
    dataset["test_path"] = r.test_path;
    if (r.class_count) dataset["class_count"] = *r.class_count;
  } else {
    dataset["train_images"] = r.train_images;
    dataset["train_labels"] = r.train_labels;
    dataset["test_images"] = r.test_images;
    dataset["test_labels"] = r.test_labels;
    if (r.class_count) dataset["class_count"] = *r.class_count;
  }
  const LossConfig& l = cfg.loss;
  json loss = {
      {"objective", ObjectiveName(l.objective)},
      {"beta", l.beta},
      {"temperature", l.temperature},
      {"tau_fp_mode", l.tau_fp_mode == ContaminationMode::kExplicit ? "explicit"
                                                                     : "from_tau_formula"},
      {"tau_fp", l.tau_fp},
      {"tau_fn", l.tau_fn},
      {"q_weight_mode", l.q_weight_mode == WeightMode::kCount ? "count" : "explicit"},
      {"w_weight_mode", l.w_weight_mode == WeightMode::kCount ? "count" : "explicit"},
      {"q_value", l.q_value},
      {"w_value", l.w_value},
      {"positive_weighting", PositiveWeightingName(l.positive_weighting)},
  };
  if (cfg.loss_tau_explicit) loss["tau"] = l.tau;
  if (cfg.loss_class_count_explicit) loss["class_count"] = l.class_count;
  if (l.clamp_floor) loss["clamp_floor"] = *l.clamp_floor;
  json noise = {{"model", NoiseModelName(cfg.noise.model)},
                {"rate", cfg.noise.rate},
                {"gamma", cfg.noise.gamma}};
  if (cfg.noise_seed) noise["seed"] = *cfg.noise_seed;
  json out = {
      {"dataset", dataset},
      {"noise", noise},
      {"loss", loss},
      {"encoder_dims", cfg.encoder_dims},
      {"optimizer",
       {{"kind", cfg.optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd"},
        {"lr", cfg.optimizer.lr},
        {"epochs", cfg.optimizer.epochs}}},
      {"batch",
       {{"batch_size", cfg.batch.batch_size},
        {"samples_per_class", cfg.batch.samples_per_class}}},
      {"probe",
       {{"epochs", cfg.probe.epochs}, {"lr", cfg.probe.lr}, {"every", cfg.probe.every}}},
      {"output_dir", cfg.output_dir},
      {"checkpoint_every", cfg.checkpoint_every},
  };
  if (cfg.seed) out["seed"] = *cfg.seed;
  return out;
}

TrainConfig LoadTrainConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::kOpenFailed, path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ContractError(path + ": " + e.what());
  }
  return TrainConfigFromJson(j);
}

}  // namespace rscl
