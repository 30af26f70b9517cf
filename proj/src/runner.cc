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

#include "rscl/runner.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rscl/checkpoint.h"
#include "rscl/error.h"
#include "rscl/optimizer.h"
#include "rscl/rng.h"

namespace rscl {
namespace {

using nlohmann::json;

// Stream ids under the run seed.
constexpr std::uint64_t kEncoderInitStream = 20;
constexpr std::uint64_t kBatchSeedSalt = 0x62617463ull;

DatasetSplit LoadSplit(const TrainConfig& cfg) {
  const DatasetRef& r = cfg.dataset;
  switch (r.kind) {
    case DatasetKind::kGaussianMixture: {
      GaussianMixtureSpec spec = r.mixture;
      spec.seed = r.seed ? *r.seed : cfg.RunSeed();
      return GenGaussianMixtureSplit(spec);
    }
    case DatasetKind::kCsv: {
      DatasetSplit s{LoadCsv(r.train_path, r.class_count),
                     LoadCsv(r.test_path, r.class_count)};
      const int classes = std::max(s.train.class_count, s.test.class_count);
      s.train.class_count = s.test.class_count = classes;
      s.test.split = SplitTag::kTest;
      for (auto& id : s.test.sample_ids) id += static_cast<std::int64_t>(s.train.size());
      return s;
    }
    case DatasetKind::kIdx: {
      DatasetSplit s{LoadIdx(r.train_images, r.train_labels, r.class_count),
                     LoadIdx(r.test_images, r.test_labels, r.class_count)};
      const int classes = std::max(s.train.class_count, s.test.class_count);
      s.train.class_count = s.test.class_count = classes;
      s.test.split = SplitTag::kTest;
      for (auto& id : s.test.sample_ids) id += static_cast<std::int64_t>(s.train.size());
      return s;
    }
  }
  throw ContractError("unknown dataset kind");
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kOpenFailed, path);
  out << text;
  if (!out) throw DataError(DataErrorKind::kWriteFailed, path);
}

std::string EpochCheckpointName(int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "checkpoint_epoch_%04d.scle", epoch);
  return buf;
}

}  // namespace

DatasetSplit PrepareData(const TrainConfig& cfg) {
  DatasetSplit data = LoadSplit(cfg);
  data.train.Validate();
  data.test.Validate();
  if (cfg.noise.rate > 0.0) {
    const std::uint64_t noise_seed = cfg.noise_seed ? *cfg.noise_seed : cfg.RunSeed();
    const int classes = data.train.class_count;
    if (cfg.noise.model == NoiseModel::kUniform) {
      data.train.assigned_labels =
          InjectUniformNoise(data.train.latent_labels, cfg.noise.rate, classes, noise_seed);
    } else {
      const Matrix centroids =
          ClassCentroids(data.train.features, data.train.latent_labels, classes);
      data.train.assigned_labels =
          InjectConfusionNoise(data.train.latent_labels, centroids, cfg.noise.rate,
                               cfg.noise.gamma, noise_seed);
    }
  }
  return data;
}

LossConfig EffectiveLossConfig(const TrainConfig& cfg, int class_count) {
  LossConfig loss = cfg.loss;
  if (!cfg.loss_tau_explicit) loss.tau = cfg.noise.rate;
  if (!cfg.loss_class_count_explicit) loss.class_count = class_count;
  return loss;
}

json MetricsToJson(const MetricsRecord& record) {
  json j = {{"epoch", record.epoch},
            {"loss_value", record.loss_value},
            {"clamp_count", record.clamp_count}};
  j["probe_top1"] = record.probe_top1 ? json(*record.probe_top1) : json(nullptr);
  return j;
}

TrainResult RunTraining(const TrainConfig& cfg) {
  cfg.Validate();
  const std::uint64_t seed = cfg.RunSeed();
  DatasetSplit data = PrepareData(cfg);
  const LossConfig loss_cfg = EffectiveLossConfig(cfg, data.train.class_count);
  loss_cfg.Validate();
  // Surface a bad tau / class-count combination before training starts.
  (void)loss_cfg.Rates();

  std::vector<std::size_t> dims = {data.train.dim()};
  dims.insert(dims.end(), cfg.encoder_dims.begin(), cfg.encoder_dims.end());
  RngStream init_rng(seed, kEncoderInitStream);
  MlpEncoder encoder(dims, init_rng);

  const bool write = !cfg.output_dir.empty();
  std::ofstream metrics_out, timing_out;
  if (write) {
    std::filesystem::create_directories(cfg.output_dir);
    WriteText(cfg.output_dir + "/config.json", TrainConfigToJson(cfg).dump(2) + "\n");
    metrics_out.open(cfg.output_dir + "/metrics.jsonl", std::ios::trunc);
    timing_out.open(cfg.output_dir + "/timing.jsonl", std::ios::trunc);
    if (!metrics_out || !timing_out) {
      throw DataError(DataErrorKind::kOpenFailed, cfg.output_dir + "/metrics.jsonl");
    }
  }

  AdamState adam;
  std::vector<MetricsRecord> metrics;
  for (int epoch = 1; epoch <= cfg.optimizer.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const BatchPlan plan = ClassBalancedBatches(
        data.train.assigned_labels, cfg.batch.batch_size, cfg.batch.samples_per_class,
        Mix64(seed ^ kBatchSeedSalt) + static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::uint64_t clamps = 0;
    std::size_t batch_index = 0;
    try {
      for (const auto& indices : plan.batches) {
        EncoderForward fwd = EncoderForwardPass(encoder, data.train.features.Gather(indices));
        EmbeddingBatch batch;
        batch.embeddings = std::move(fwd.embeddings);
        batch.class_count = data.train.class_count;
        std::vector<int> latent;
        for (std::size_t i : indices) {
          batch.assigned_labels.push_back(data.train.assigned_labels[i]);
          latent.push_back(data.train.latent_labels[i]);
          batch.sample_ids.push_back(data.train.sample_ids[i]);
        }
        batch.latent_labels = std::move(latent);
        const LossOutput loss = ComputeLoss(batch, loss_cfg);
        if (!std::isfinite(loss.value)) throw NumericError("non-finite loss value");
        ParameterGradients grads = EncoderBackward(encoder, fwd.cache, loss.grad_embeddings);
        if (cfg.optimizer.kind == OptimizerKind::kAdam) {
          AdamStep(encoder.mutable_parameters(), grads, adam, cfg.optimizer.lr);
        } else {
          SgdStep(encoder.mutable_parameters(), grads, cfg.optimizer.lr);
        }
        loss_sum += loss.value;
        clamps += loss.diagnostics.clamp_count;
        ++batch_index;
      }
    } catch (const NumericError& e) {
      // Parameters are only written after every check has passed, so the
      // encoder still holds the last good state.
      if (write) {
        SaveCheckpoint(encoder, cfg.output_dir + "/checkpoint.scle");
        json failure = {{"epoch", epoch}, {"batch", batch_index}, {"error", e.what()}};
        WriteText(cfg.output_dir + "/failure.json", failure.dump(2) + "\n");
      }
      throw NumericError("training stopped at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batch_index) + ": " + e.what());
    }
    MetricsRecord record;
    record.epoch = epoch;
    record.loss_value =
        plan.batches.empty() ? 0.0 : loss_sum / static_cast<double>(plan.batches.size());
    record.clamp_count = clamps;
    if (cfg.probe.every > 0 && epoch % cfg.probe.every == 0) {
      record.probe_top1 = RunProbe(encoder, data, cfg.probe, seed).top1_accuracy;
    }
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    metrics.push_back(record);
    if (write) {
      metrics_out << MetricsToJson(record).dump() << '\n';
      timing_out << json{{"epoch", epoch}, {"wall_ms", record.wall_ms}}.dump() << '\n';
      metrics_out.flush();
      if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
        SaveCheckpoint(encoder, cfg.output_dir + "/" + EpochCheckpointName(epoch));
      }
    }
  }
  if (write) SaveCheckpoint(encoder, cfg.output_dir + "/checkpoint.scle");
  return TrainResult{std::move(encoder), std::move(metrics), std::move(data)};
}

ProbeReport RunProbe(const MlpEncoder& encoder, const DatasetSplit& data,
                     const ProbeConfig& probe, std::uint64_t seed) {
  const Matrix train = Encode(encoder, data.train.features);
  const Matrix test = Encode(encoder, data.test.features);
  const int classes = std::max(data.train.class_count, data.test.class_count);
  const ProbeModel model = TrainLinearProbe(train, data.train.assigned_labels, classes,
                                            probe.epochs, probe.lr, seed);
  return EvaluateProbe(model, test, data.test.latent_labels);
}

GridResult RunExperimentGrid(const TrainConfig& base,
                             const std::vector<Objective>& objectives,
                             const std::vector<std::uint64_t>& seeds) {
  if (objectives.empty() || seeds.empty()) {
    throw ContractError("grid needs at least one objective and one seed");
  }
  GridResult grid;
  for (Objective objective : objectives) {
    GridSummary summary;
    summary.objective = ObjectiveName(objective);
    std::vector<double> scores;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.loss.objective = objective;
      cfg.seed = seed;
      if (!base.output_dir.empty()) {
        cfg.output_dir = base.output_dir + "/" + summary.objective + "_seed" +
                         std::to_string(seed);
      }
      const TrainResult run = RunTraining(cfg);
      const ProbeReport report = RunProbe(run.encoder, run.data, cfg.probe, seed);
      GridRow row{summary.objective, seed, report.top1_accuracy,
                  run.metrics.empty() ? 0.0 : run.metrics.back().loss_value};
      grid.rows.push_back(row);
      scores.push_back(report.top1_accuracy);
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    summary.mean_top1 = mean;
    summary.std_top1 =
        scores.size() > 1 ? std::sqrt(var / static_cast<double>(scores.size() - 1)) : 0.0;
    summary.runs = scores.size();
    grid.summary.push_back(summary);
  }
  if (!base.output_dir.empty()) {
    std::filesystem::create_directories(base.output_dir);
    WriteGridCsv(grid, base.output_dir + "/grid.csv");
    WriteText(base.output_dir + "/grid.json", GridToJson(grid).dump(2) + "\n");
  }
  return grid;
}

json GridToJson(const GridResult& grid) {
  json rows = json::array();
  for (const GridRow& r : grid.rows) {
    rows.push_back({{"objective", r.objective},
                    {"seed", r.seed},
                    {"probe_top1", r.probe_top1},
                    {"final_loss", r.final_loss}});
  }
  json summary = json::array();
  for (const GridSummary& s : grid.summary) {
    summary.push_back({{"objective", s.objective},
                       {"mean_top1", s.mean_top1},
                       {"std_top1", s.std_top1},
                       {"runs", s.runs}});
  }
  return {{"rows", rows}, {"summary", summary}};
}

void WriteGridCsv(const GridResult& grid, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kOpenFailed, path);
  out.precision(17);
  out << "objective,seed,probe_top1,final_loss\n";
  for (const GridRow& r : grid.rows) {
    out << r.objective << ',' << r.seed << ',' << r.probe_top1 << ',' << r.final_loss << '\n';
  }
  out << "\nobjective,mean_top1,std_top1,runs\n";
  for (const GridSummary& s : grid.summary) {
    out << s.objective << ',' << s.mean_top1 << ',' << s.std_top1 << ',' << s.runs << '\n';
  }
  if (!out) throw DataError(DataErrorKind::kWriteFailed, path);
}

}  // namespace rscl
