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

#include "cli.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rscl/analysis.h"
#include "rscl/checkpoint.h"
#include "rscl/datasets.h"
#include "rscl/encoder.h"
#include "rscl/error.h"
#include "rscl/losses.h"
#include "rscl/noise.h"
#include "rscl/runner.h"

namespace rscl::cli {
namespace {

using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

// Box-drawn table; column widths count code points, not bytes.
std::size_t DisplayWidth(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

void PrintTable(std::ostream& out, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = DisplayWidth(header[c]);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], DisplayWidth(row[c]));
    }
  }
  auto rule = [&](const char* left, const char* mid, const char* right) {
    out << left;
    for (std::size_t c = 0; c < width.size(); ++c) {
      for (std::size_t i = 0; i < width[c] + 2; ++i) out << "─";
      out << (c + 1 < width.size() ? mid : right);
    }
    out << '\n';
  };
  auto line = [&](const std::vector<std::string>& cells) {
    out << "│";
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : std::string();
      out << ' ' << std::string(width[c] - DisplayWidth(cell), ' ') << cell << " │";
    }
    out << '\n';
  };
  rule("┌", "┬", "┐");
  line(header);
  rule("├", "┼", "┤");
  for (const auto& row : rows) line(row);
  rule("└", "┴", "┘");
}

void WriteJsonFile(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError(DataErrorKind::kOpenFailed, path);
  f << j.dump(2) << '\n';
  if (!f) throw DataError(DataErrorKind::kWriteFailed, path);
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(DataErrorKind::kOpenFailed, dir + ": " + ec.message());
}

TrainConfig BaseConfig(const GlobalOptions& g) {
  TrainConfig cfg = g.config_path.empty() ? TrainConfig{} : LoadTrainConfig(g.config_path);
  if (g.seed) cfg.seed = g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  return cfg;
}

std::uint64_t RequireSeed(const GlobalOptions& g, const TrainConfig& cfg) {
  if (g.seed) return *g.seed;
  if (cfg.seed) return *cfg.seed;
  throw ContractError("a seed is required (--seed or config 'seed')");
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

json ProbeReportJson(const ProbeReport& r) {
  return {{"top1_accuracy", r.top1_accuracy},
          {"per_class_accuracy", r.per_class_accuracy},
          {"per_class_count", r.per_class_count},
          {"n_test", r.n_test}};
}

json HistogramJson(const Histogram& h) {
  return {{"total", h.total}, {"counts", h.counts}};
}

json TaxonomyJson(const PairTaxonomy& t) {
  return {{"true_positive", t.true_positive},
          {"fp_case_i", t.fp_case_i},
          {"fp_case_ii", t.fp_case_ii},
          {"fp_case_iii", t.fp_case_iii},
          {"true_negative", t.true_negative},
          {"fn_case_iv", t.fn_case_iv},
          {"fn_case_v", t.fn_case_v},
          {"fn_case_vi", t.fn_case_vi},
          {"false_positives", t.false_positives()},
          {"false_negatives", t.false_negatives()},
          {"assigned_positive_total", t.assigned_positive_total},
          {"assigned_negative_total", t.assigned_negative_total}};
}

// ---------------------------------------------------------------- gen-data

struct GenDataOptions {
  std::optional<int> classes;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> n_per_class;
  std::optional<std::size_t> n_test_per_class;
  std::optional<double> class_sep;
  std::optional<double> intra_std;
};

int GenData(const GlobalOptions& g, const GenDataOptions& o, std::ostream& out) {
  const TrainConfig cfg = BaseConfig(g);
  GaussianMixtureSpec spec = cfg.dataset.mixture;
  if (o.classes) spec.class_count = *o.classes;
  if (o.dim) spec.dim = *o.dim;
  if (o.n_per_class) spec.n_per_class = *o.n_per_class;
  if (o.n_test_per_class) spec.n_test_per_class = *o.n_test_per_class;
  if (o.class_sep) spec.class_sep = *o.class_sep;
  if (o.intra_std) spec.intra_std = *o.intra_std;
  spec.seed = cfg.dataset.seed ? *cfg.dataset.seed : RequireSeed(g, cfg);
  if (g.out.empty()) throw ContractError("gen-data needs --out <dir>");
  const DatasetSplit data = GenGaussianMixtureSplit(spec);
  EnsureDir(g.out);
  json summary = json::object();
  for (const DatasetBundle* b : {&data.train, &data.test}) {
    const std::string name = b == &data.train ? "train" : "test";
    const std::string csv = g.out + "/" + name + ".csv";
    WriteCsv(*b, csv, /*include_assigned=*/false);
    WriteManifest({csv, "csv", b->class_count, b->dim(), b->size()},
                  g.out + "/" + name + ".manifest.json");
    summary[name] = {{"path", csv}, {"n", b->size()}};
  }
  summary["C"] = spec.class_count;
  summary["D"] = spec.dim;
  summary["seed"] = spec.seed;
  out << summary.dump(2) << '\n';
  return 0;
}

// ------------------------------------------------------------ inject-noise

struct InjectOptions {
  std::string input;
  std::string output;
  std::string model = "uniform";
  double rate = 0.0;
  double gamma = 10.0;
  std::optional<int> classes;
};

int InjectNoise(const GlobalOptions& g, const InjectOptions& o, std::ostream& out) {
  const TrainConfig cfg = BaseConfig(g);
  const std::uint64_t seed = RequireSeed(g, cfg);
  DatasetBundle bundle = LoadCsv(o.input, o.classes);
  NoiseSpec spec;
  spec.model = ParseNoiseModel(o.model);
  spec.rate = o.rate;
  spec.gamma = o.gamma;
  spec.Validate();
  if (spec.model == NoiseModel::kUniform) {
    bundle.assigned_labels =
        InjectUniformNoise(bundle.latent_labels, spec.rate, bundle.class_count, seed);
  } else {
    const Matrix centroids =
        ClassCentroids(bundle.features, bundle.latent_labels, bundle.class_count);
    bundle.assigned_labels = InjectConfusionNoise(bundle.latent_labels, centroids,
                                                  spec.rate, spec.gamma, seed);
  }
  std::string path = o.output;
  if (path.empty()) {
    if (g.out.empty()) throw ContractError("inject-noise needs --output or --out");
    EnsureDir(g.out);
    path = g.out + "/noisy.csv";
  }
  WriteCsv(bundle, path, /*include_assigned=*/true);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    flips += bundle.assigned_labels[i] != bundle.latent_labels[i];
  }
  out << json{{"path", path},
              {"model", NoiseModelName(spec.model)},
              {"rate", spec.rate},
              {"n", bundle.size()},
              {"flipped", flips}}
             .dump(2)
      << '\n';
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::string objective;
  std::optional<int> epochs;
};

int Train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out) {
  TrainConfig cfg = BaseConfig(g);
  if (!o.objective.empty()) cfg.loss.objective = ParseObjective(o.objective);
  if (o.epochs) cfg.optimizer.epochs = *o.epochs;
  const TrainResult run = RunTraining(cfg);
  json summary = {{"epochs", run.metrics.size()},
                  {"objective", ObjectiveName(cfg.loss.objective)},
                  {"seed", cfg.RunSeed()}};
  if (!run.metrics.empty()) summary["final"] = MetricsToJson(run.metrics.back());
  if (!cfg.output_dir.empty()) {
    summary["checkpoint"] = cfg.output_dir + "/checkpoint.scle";
    summary["metrics"] = cfg.output_dir + "/metrics.jsonl";
  }
  out << summary.dump(2) << '\n';
  return 0;
}

// ------------------------------------------------------------------- probe

int Probe(const GlobalOptions& g, const std::string& checkpoint, std::ostream& out) {
  const TrainConfig cfg = BaseConfig(g);
  cfg.Validate();
  const MlpEncoder encoder = LoadCheckpoint(checkpoint);
  const DatasetSplit data = PrepareData(cfg);
  if (encoder.input_dim() != data.train.dim()) {
    throw ContractError("checkpoint input width " + std::to_string(encoder.input_dim()) +
                        " does not match dataset width " + std::to_string(data.train.dim()));
  }
  const ProbeReport report = RunProbe(encoder, data, cfg.probe, cfg.RunSeed());
  const json j = ProbeReportJson(report);
  if (!g.out.empty()) {
    EnsureDir(g.out);
    WriteJsonFile(g.out + "/probe.json", j);
  }
  out << j.dump(2) << '\n';
  return 0;
}

// -------------------------------------------------------------------- grid

struct GridOptions {
  std::string objectives = "supcon_in_modified,scl_rhe";
  std::string seeds = "1,2,3";
};

int Grid(const GlobalOptions& g, const GridOptions& o, std::ostream& out) {
  TrainConfig base = BaseConfig(g);
  std::vector<Objective> objectives;
  for (const auto& name : SplitList(o.objectives)) objectives.push_back(ParseObjective(name));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : SplitList(o.seeds)) {
    try {
      seeds.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw ContractError("bad seed '" + s + "' in --seeds");
    }
  }
  if (!base.seed && !seeds.empty()) base.seed = seeds.front();
  const GridResult grid = RunExperimentGrid(base, objectives, seeds);
  std::vector<std::vector<std::string>> rows;
  for (const GridSummary& s : grid.summary) {
    rows.push_back({s.objective, Format("%.4f", s.mean_top1), Format("%.4f", s.std_top1),
                    std::to_string(s.runs)});
  }
  PrintTable(out, {"objective", "mean top-1", "std", "runs"}, rows);
  return 0;
}

// ----------------------------------------------------------- analyze-pairs

struct AnalyzeOptions {
  std::string checkpoint;
  std::string split = "train";
  std::size_t bins = kDefaultHistogramBins;
};

int AnalyzePairs(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out) {
  const TrainConfig cfg = BaseConfig(g);
  cfg.Validate();
  const DatasetSplit data = PrepareData(cfg);
  if (o.split != "train" && o.split != "test") {
    throw ContractError("--split must be train or test");
  }
  const DatasetBundle& bundle = o.split == "train" ? data.train : data.test;
  Matrix embeddings;
  if (o.checkpoint.empty()) {
    embeddings = RowNormalize(bundle.features).output;
  } else {
    embeddings = Encode(LoadCheckpoint(o.checkpoint), bundle.features);
  }
  const SimilarityHistograms h = ComputeSimilarityHistograms(
      embeddings, bundle.assigned_labels, bundle.latent_labels, o.bins, cfg.RunSeed());
  const PairTaxonomy taxonomy = ComputePairTaxonomy(bundle.assigned_labels, bundle.latent_labels);

  // Wrong-signal audit over one epoch of class-balanced batches.
  const BatchPlan plan = ClassBalancedBatches(bundle.assigned_labels, cfg.batch.batch_size,
                                              cfg.batch.samples_per_class, cfg.RunSeed());
  std::uint64_t fp = 0, fn = 0;
  for (const auto& indices : plan.batches) {
    std::vector<int> assigned, latent;
    for (std::size_t i : indices) {
      assigned.push_back(bundle.assigned_labels[i]);
      latent.push_back(bundle.latent_labels[i]);
    }
    const WrongSignalCounts c = WrongSignalAudit(BuildAnchorViews(assigned), assigned, latent);
    fp += c.fp_pair_count;
    fn += c.fn_pair_count;
  }

  json j;
  j["split"] = o.split;
  j["pairs_examined"] = h.pairs_examined;
  j["subsampled"] = h.subsampled;
  j["histograms"] = {{"true_positive", HistogramJson(h.true_positive)},
                     {"true_negative", HistogramJson(h.true_negative)},
                     {"fp_mislabel", HistogramJson(h.fp_mislabel)}};
  auto overlap = [](const Histogram& a, const Histogram& b) -> json {
    if (a.total == 0 || b.total == 0) return nullptr;
    return OverlapCoefficient(a, b);
  };
  j["overlap"] = {{"tp_fp", overlap(h.true_positive, h.fp_mislabel)},
                  {"tp_tn", overlap(h.true_positive, h.true_negative)},
                  {"tn_fp", overlap(h.true_negative, h.fp_mislabel)}};
  j["pair_taxonomy"] = TaxonomyJson(taxonomy);
  j["wrong_signal_audit"] = {
      {"fp_pair_count", fp},
      {"fn_pair_count", fn},
      {"fraction_from_positives",
       fp + fn == 0 ? json(nullptr)
                    : json(static_cast<double>(fp) / static_cast<double>(fp + fn))}};
  if (!g.out.empty()) {
    EnsureDir(g.out);
    WriteHistogramCsv(h, g.out + "/histograms.csv");
    WriteJsonFile(g.out + "/pairs.json", j);
  }
  json brief = j;
  brief.erase("histograms");
  out << brief.dump(2) << '\n';
  return 0;
}

// --------------------------------------------------------- verify-formulas

struct VerifyOptions {
  std::uint64_t pairs = 10'000'000;
  bool json_only = false;
};

int VerifyFormulas(const GlobalOptions& g, const VerifyOptions& o, std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(1);
  struct Point {
    double tau;
    int classes;
  };
  const std::vector<Point> points = {{0.05, 200}, {0.1, 10}, {0.2, 3},
                                     {0.0585, 100}, {0.0583, 1000}, {0.01, 5}};
  json entries = json::array();
  std::vector<std::vector<std::string>> rows;
  auto add = [&](const std::string& quantity, const Point& p, double closed, double exact,
                 double mc, double se) {
    const double z = se > 0.0 ? (mc - closed) / se : (mc == closed ? 0.0 : INFINITY);
    entries.push_back({{"quantity", quantity},
                       {"tau", p.tau},
                       {"C", p.classes},
                       {"closed_form", closed},
                       {"symmetric_exact", exact},
                       {"monte_carlo", mc},
                       {"std_error", se},
                       {"z", z},
                       {"within_3_sigma", std::abs(z) <= 3.0}});
    rows.push_back({quantity, Format("%.4f", p.tau), std::to_string(p.classes),
                    Format("%.8f", closed), Format("%.2f%%", 100.0 * closed),
                    Format("%.8f", exact), Format("%.8f", mc), Format("%.2e", se),
                    Format("%+.2f", z)});
  };
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Point& p = points[k];
    const MonteCarloRates mc = MonteCarloPairRates(p.tau, p.classes, o.pairs, seed + k);
    const PairRates exact = SymmetricNoisePairRates(p.tau, p.classes);
    add("P_FP", p, PFalsePositive(p.tau, p.classes), exact.false_positive,
        mc.false_positive.rate, mc.false_positive.std_error);
    add("P_FN", p, PFalseNegative(p.tau, p.classes), exact.false_negative,
        mc.false_negative.rate, mc.false_negative.std_error);
    // Wrong-signal share from positives, with a delta-method error for the
    // ratio of the two independent estimates.
    const double a = mc.false_positive.rate, b = mc.false_negative.rate;
    const double sa = mc.false_positive.std_error, sb = mc.false_negative.std_error;
    const double ratio = a + b > 0.0 ? a / (a + b) : 0.0;
    const double se = a + b > 0.0 ? std::hypot(b * sa, a * sb) / ((a + b) * (a + b)) : 0.0;
    const double exact_ratio = exact.false_positive /
                               (exact.false_positive + exact.false_negative);
    add("wrong_signal", p, WrongSignalFraction(p.tau, p.classes).from_positives, exact_ratio,
        ratio, se);
  }
  const json j = {{"pairs_per_estimate", o.pairs}, {"seed", seed}, {"rows", entries}};
  if (!g.out.empty()) {
    EnsureDir(g.out);
    WriteJsonFile(g.out + "/verify_formulas.json", j);
  }
  if (o.json_only) {
    out << j.dump(2) << '\n';
  } else {
    PrintTable(out,
               {"quantity", "τ", "C", "closed form", "closed %", "symmetric exact",
                "Monte Carlo", "std err", "z"},
               rows);
    out << "Monte Carlo: " << o.pairs << " pairs per estimate, seed " << seed
        << "; z = (MC − closed form) / std err\n";
  }
  return 0;
}

// -------------------------------------------------------------- grad-check

struct GradCheckOptions {
  std::string objective = "all";
  std::size_t batches = 10;
  std::size_t n = 16;
  std::size_t dim = 8;
  int classes = 4;
  double flip_rate = 0.25;
  double h = 1e-6;
  double tolerance = 1e-5;
  double beta = 1.0;
  double temperature = 0.1;
  double tau = 0.1;
};

int GradCheck(const GlobalOptions& g, const GradCheckOptions& o, std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(1);
  struct Variant {
    Objective objective;
    PositiveWeighting weighting;
    std::string label;
  };
  std::vector<Variant> all = {
      {Objective::kInfoNce, PositiveWeighting::kDeprioritizeEasy, "info_nce"},
      {Objective::kSupConIn, PositiveWeighting::kDeprioritizeEasy, "supcon_in"},
      {Objective::kSupConOut, PositiveWeighting::kDeprioritizeEasy, "supcon_out"},
      {Objective::kSupConInModified, PositiveWeighting::kDeprioritizeEasy,
       "supcon_in_modified"},
      {Objective::kTrueLabel, PositiveWeighting::kDeprioritizeEasy, "true_label"},
      {Objective::kSclRhe, PositiveWeighting::kDeprioritizeEasy, "scl_rhe/deprioritize_easy"},
      {Objective::kSclRhe, PositiveWeighting::kPaperEstimator, "scl_rhe/paper_estimator"}};
  std::vector<Variant> chosen;
  for (const Variant& v : all) {
    if (o.objective == "all" || o.objective == v.label ||
        (v.label.rfind(o.objective + "/", 0) == 0)) {
      chosen.push_back(v);
    }
  }
  if (chosen.empty()) throw ContractError("unknown objective '" + o.objective + "'");
  bool ok = true;
  std::vector<std::vector<std::string>> rows;
  json entries = json::array();
  for (const Variant& v : chosen) {
    LossConfig cfg;
    cfg.objective = v.objective;
    cfg.positive_weighting = v.weighting;
    cfg.beta = o.beta;
    cfg.temperature = o.temperature;
    cfg.tau = o.tau;
    cfg.class_count = o.classes;
    double worst = 0.0;
    for (std::size_t b = 0; b < o.batches; ++b) {
      const EmbeddingBatch batch =
          RandomEmbeddingBatch(o.n, o.dim, o.classes, o.flip_rate, seed * 1000 + b);
      const GradCheckReport r = CheckObjectiveGradient(batch, cfg, o.h, seed + b);
      worst = std::max(worst, r.max_rel_err);
      entries.push_back({{"objective", v.label},
                         {"batch", b},
                         {"max_rel_err", r.max_rel_err},
                         {"worst_row", r.worst_row},
                         {"worst_col", r.worst_col},
                         {"coordinates", r.coordinates_checked}});
    }
    const bool pass = worst < o.tolerance;
    ok = ok && pass;
    rows.push_back({v.label, std::to_string(o.batches), Format("%.3e", worst),
                    pass ? "ok" : "FAIL"});
  }
  PrintTable(out, {"objective", "batches", "max rel err", "status"}, rows);
  if (!g.out.empty()) {
    EnsureDir(g.out);
    WriteJsonFile(g.out + "/grad_check.json",
                  {{"tolerance", o.tolerance}, {"h", o.h}, {"rows", entries}});
  }
  return ok ? 0 : static_cast<int>(ExitCode::kNumeric);
}

// ------------------------------------------------------------------ report

int Report(const GlobalOptions& g, const std::string& run_dir, std::ostream& out) {
  const std::string dir = run_dir.empty() ? g.out : run_dir;
  if (dir.empty()) throw ContractError("report needs --run <dir> or --out <dir>");
  json summary = {{"run", dir}};
  const std::string metrics_path = dir + "/metrics.jsonl";
  const std::string grid_path = dir + "/grid.json";
  bool found = false;
  if (std::filesystem::exists(metrics_path)) {
    found = true;
    std::ifstream f(metrics_path);
    if (!f) throw DataError(DataErrorKind::kOpenFailed, metrics_path);
    std::string line;
    std::size_t epochs = 0;
    std::uint64_t clamps = 0;
    json first, last, best_probe;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError(DataErrorKind::kParse, metrics_path + ": " + e.what());
      }
      if (epochs == 0) first = rec;
      last = rec;
      ++epochs;
      clamps += rec.value("clamp_count", std::uint64_t{0});
      if (rec.contains("probe_top1") && rec["probe_top1"].is_number() &&
          (best_probe.is_null() || rec["probe_top1"] > best_probe["probe_top1"])) {
        best_probe = rec;
      }
    }
    summary["epochs"] = epochs;
    summary["first_loss"] = first.is_null() ? json(nullptr) : first["loss_value"];
    summary["final_loss"] = last.is_null() ? json(nullptr) : last["loss_value"];
    summary["total_clamps"] = clamps;
    if (!best_probe.is_null()) {
      summary["best_probe"] = {{"epoch", best_probe["epoch"]},
                               {"top1", best_probe["probe_top1"]}};
    }
  }
  if (std::filesystem::exists(dir + "/failure.json")) {
    found = true;
    std::ifstream f(dir + "/failure.json");
    try {
      summary["failure"] = json::parse(f);
    } catch (const json::exception& e) {
      throw DataError(DataErrorKind::kParse, dir + "/failure.json: " + e.what());
    }
  }
  if (std::filesystem::exists(grid_path)) {
    found = true;
    std::ifstream f(grid_path);
    try {
      summary["grid"] = json::parse(f).at("summary");
    } catch (const json::exception& e) {
      throw DataError(DataErrorKind::kParse, grid_path + ": " + e.what());
    }
  }
  if (!found) {
    throw DataError(DataErrorKind::kOpenFailed,
                    dir + ": no metrics.jsonl, grid.json or failure.json");
  }
  out << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust supervised contrastive learning toolkit", "rscl"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "JSON config mirroring TrainConfig fields")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed_value, "Run seed");
  app.add_option("--out", g.out, "Output directory");
  app.fallthrough();

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a Gaussian mixture train/test split");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes C");
  gen_cmd->add_option("--dim", gen.dim, "Feature width D");
  gen_cmd->add_option("--n-per-class", gen.n_per_class, "Training samples per class");
  gen_cmd->add_option("--n-test-per-class", gen.n_test_per_class, "Test samples per class");
  gen_cmd->add_option("--class-sep", gen.class_sep, "Norm of the class means");
  gen_cmd->add_option("--intra-std", gen.intra_std, "Per-coordinate noise std");

  InjectOptions inject;
  auto* inject_cmd = app.add_subcommand("inject-noise", "Relabel a CSV dataset");
  inject_cmd->add_option("--input", inject.input, "Input CSV")->required();
  inject_cmd->add_option("--output", inject.output, "Output CSV (default <out>/noisy.csv)");
  inject_cmd->add_option("--model", inject.model, "uniform or confusion")
      ->check(CLI::IsMember({"uniform", "confusion"}));
  inject_cmd->add_option("--rate", inject.rate, "Fraction of labels to flip")->required();
  inject_cmd->add_option("--gamma", inject.gamma, "Confusion sharpness");
  inject_cmd->add_option("--classes", inject.classes, "Class count (default max label + 1)");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train an encoder");
  train_cmd->add_option("--objective", train.objective, "Override loss.objective");
  train_cmd->add_option("--epochs", train.epochs, "Override optimizer.epochs");

  std::string probe_checkpoint;
  auto* probe_cmd = app.add_subcommand("probe", "Linear probe on a frozen checkpoint");
  probe_cmd->add_option("--checkpoint", probe_checkpoint, "Encoder checkpoint")
      ->required();

  GridOptions grid;
  auto* grid_cmd = app.add_subcommand("grid", "Objective x seed experiment grid");
  grid_cmd->add_option("--objectives", grid.objectives, "Comma-separated objectives");
  grid_cmd->add_option("--seeds", grid.seeds, "Comma-separated seeds");

  AnalyzeOptions analyze;
  auto* analyze_cmd =
      app.add_subcommand("analyze-pairs", "Similarity histograms and pair taxonomy");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint,
                          "Encoder checkpoint (default: normalized raw features)");
  analyze_cmd->add_option("--split", analyze.split, "train or test");
  analyze_cmd->add_option("--bins", analyze.bins, "Histogram bins over [-1, 1]");

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand(
      "verify-formulas", "Closed-form pair probabilities against Monte Carlo");
  verify_cmd->add_option("--pairs", verify.pairs, "Monte Carlo pairs per estimate");
  verify_cmd->add_flag("--json", verify.json_only, "Print the JSON twin instead of the table");

  GradCheckOptions gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  gc_cmd->add_option("--objective", gc.objective,
                     "Objective name, scl_rhe/<weighting>, or all");
  gc_cmd->add_option("--batches", gc.batches, "Random batches per objective");
  gc_cmd->add_option("--batch-size", gc.n, "Rows per batch");
  gc_cmd->add_option("--dim", gc.dim, "Embedding width");
  gc_cmd->add_option("--classes", gc.classes, "Classes per batch");
  gc_cmd->add_option("--flip-rate", gc.flip_rate, "Fraction of flipped assigned labels");
  gc_cmd->add_option("--step", gc.h, "Central-difference step");
  gc_cmd->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  gc_cmd->add_option("--beta", gc.beta, "Hardness exponent");
  gc_cmd->add_option("--temperature", gc.temperature, "Temperature");
  gc_cmd->add_option("--tau", gc.tau, "Noise rate for the debiased objective");

  std::string report_run;
  auto* report_cmd = app.add_subcommand("report", "Summarize a training or grid run");
  report_cmd->add_option("--run", report_run, "Run directory (default --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*gen_cmd) return GenData(g, gen, out);
    if (*inject_cmd) return InjectNoise(g, inject, out);
    if (*train_cmd) return Train(g, train, out);
    if (*probe_cmd) return Probe(g, probe_checkpoint, out);
    if (*grid_cmd) return Grid(g, grid, out);
    if (*analyze_cmd) return AnalyzePairs(g, analyze, out);
    if (*verify_cmd) return VerifyFormulas(g, verify, out);
    if (*gc_cmd) return GradCheck(g, gc, out);
    if (*report_cmd) return Report(g, report_run, out);
  } catch (const Error& e) {
    err << "rscl: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "rscl: config: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfig);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "rscl: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kIo);
  }
  return static_cast<int>(ExitCode::kConfig);
}

}  // namespace rscl::cli
