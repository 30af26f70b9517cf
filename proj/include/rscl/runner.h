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

#ifndef RSCL_RUNNER_H_
#define RSCL_RUNNER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rscl/analysis.h"
#include "rscl/datasets.h"
#include "rscl/encoder.h"
#include "rscl/losses.h"
#include "rscl/noise.h"

namespace rscl {

enum class DatasetKind { kGaussianMixture, kCsv, kIdx };

struct DatasetRef {
  DatasetKind kind = DatasetKind::kGaussianMixture;
  // kGaussianMixture. The mixture seed defaults to the run seed.
  GaussianMixtureSpec mixture;
  std::optional<std::uint64_t> seed;
  // kCsv: train_path/test_path. kIdx: *_images/*_labels.
  std::string train_path;
  std::string test_path;
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::optional<int> class_count;
};

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  int epochs = 100;
};

struct BatchConfig {
  std::size_t batch_size = 64;
  std::size_t samples_per_class = 4;
};

struct ProbeConfig {
  int epochs = 300;
  double lr = 2.0;
  // Probe the encoder every this many epochs during training (0 = never).
  int every = 0;
};

// Defaults are the desk-scale recipe: 20-class mixture in 64 dims, 200
// samples per class, MLP 64-128-32, Adam at 1e-3 for 100 epochs, batches of
// 64 with 4 samples per class.
struct TrainConfig {
  DatasetRef dataset;
  NoiseSpec noise;
  std::optional<std::uint64_t> noise_seed;
  LossConfig loss;
  // Loss tau and class count follow the noise rate and dataset unless set.
  bool loss_tau_explicit = false;
  bool loss_class_count_explicit = false;
  // Hidden widths followed by the embedding width; the input width comes
  // from the dataset.
  std::vector<std::size_t> encoder_dims = {128, 32};
  OptimizerConfig optimizer;
  BatchConfig batch;
  ProbeConfig probe;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  int checkpoint_every = 0;

  // Throws ContractError when a sub-config is invalid or the seed is missing.
  void Validate() const;
  std::uint64_t RunSeed() const;
};

// JSON keys mirror the field names above in snake_case; unknown keys are
// rejected.
TrainConfig TrainConfigFromJson(const nlohmann::json& j);
nlohmann::json TrainConfigToJson(const TrainConfig& cfg);
TrainConfig LoadTrainConfig(const std::string& path);

// The dataset with noise injected into the train split's assigned labels.
DatasetSplit PrepareData(const TrainConfig& cfg);

// Loss config with run-derived defaults filled in (tau, class count).
LossConfig EffectiveLossConfig(const TrainConfig& cfg, int class_count);

struct MetricsRecord {
  int epoch = 0;
  double loss_value = 0.0;
  std::uint64_t clamp_count = 0;
  double wall_ms = 0.0;
  std::optional<double> probe_top1;
};

// The deterministic fields (everything except wall_ms).
nlohmann::json MetricsToJson(const MetricsRecord& record);

struct TrainResult {
  MlpEncoder encoder;
  std::vector<MetricsRecord> metrics;
  DatasetSplit data;
};

// Trains the encoder. With a non-empty output_dir writes config.json,
// metrics.jsonl (one record per epoch), timing.jsonl (wall clock per epoch),
// checkpoint.scle and checkpoint_epoch_NNNN.scle every checkpoint_every
// epochs. A non-finite loss or gradient saves the last good parameters,
// writes failure.json and rethrows as NumericError.
TrainResult RunTraining(const TrainConfig& cfg);

// Encodes both splits with the frozen encoder, fits the probe on the train
// split's assigned labels and scores it on the test split's latent labels.
ProbeReport RunProbe(const MlpEncoder& encoder, const DatasetSplit& data,
                     const ProbeConfig& probe, std::uint64_t seed);

struct GridRow {
  std::string objective;
  std::uint64_t seed = 0;
  double probe_top1 = 0.0;
  double final_loss = 0.0;
};

struct GridSummary {
  std::string objective;
  double mean_top1 = 0.0;
  double std_top1 = 0.0;  // sample standard deviation, 0 for one seed
  std::size_t runs = 0;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::vector<GridSummary> summary;
};

// One training + probe per (objective, seed), objectives outermost. Writes
// grid.csv and grid.json to base.output_dir when it is set, with each run in
// <output_dir>/<objective>_seed<seed>.
GridResult RunExperimentGrid(const TrainConfig& base,
                             const std::vector<Objective>& objectives,
                             const std::vector<std::uint64_t>& seeds);

nlohmann::json GridToJson(const GridResult& grid);
void WriteGridCsv(const GridResult& grid, const std::string& path);

}  // namespace rscl

#endif  // RSCL_RUNNER_H_
