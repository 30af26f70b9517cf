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

#ifndef RSCL_DATASETS_H_
#define RSCL_DATASETS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rscl/matrix.h"

namespace rscl {

enum class SplitTag { kTrain, kTest };

struct DatasetBundle {
  Matrix features;  // n x D
  std::vector<int> latent_labels;
  // Starts equal to latent_labels; noise injection rewrites it.
  std::vector<int> assigned_labels;
  std::vector<std::int64_t> sample_ids;
  int class_count = 0;
  SplitTag split = SplitTag::kTrain;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  void Validate() const;
};

struct DatasetSplit {
  DatasetBundle train;
  DatasetBundle test;
};

struct GaussianMixtureSpec {
  int class_count = 20;
  std::size_t dim = 64;
  std::size_t n_per_class = 200;
  std::size_t n_test_per_class = 200;
  double class_sep = 1.0;
  double intra_std = 0.35;
  std::uint64_t seed = 0;
};

// Class means uniform on the unit sphere scaled by class_sep; samples are the
// mean plus isotropic normal noise. Rows are class-major. Train sample ids are
// 0..n-1, test ids continue after the train ids.
DatasetSplit GenGaussianMixtureSplit(const GaussianMixtureSpec& spec);

// Train split only; identical to GenGaussianMixtureSplit(...).train.
DatasetBundle GenGaussianMixture(int class_count, std::size_t dim,
                                 std::size_t n_per_class, double class_sep,
                                 double intra_std, std::uint64_t seed);

// CSV with header f0,...,f{D-1},label and an optional trailing "assigned"
// column. Values are written in shortest round-trip form. When class_count
// is absent it is one past the largest label seen.
void WriteCsv(const DatasetBundle& bundle, const std::string& path,
              bool include_assigned = true);
DatasetBundle LoadCsv(const std::string& path,
                      std::optional<int> class_count = std::nullopt);

// IDX image (magic 0x00000803, u8 pixels, big-endian dims) and label (magic
// 0x00000801) files. Pixels are scaled to [0, 1] by /255.
DatasetBundle LoadIdx(const std::string& images_path,
                      const std::string& labels_path,
                      std::optional<int> class_count = std::nullopt);

// {path, kind, C, D, n}
struct DatasetManifest {
  std::string path;
  std::string kind;  // "csv" or "idx"
  int class_count = 0;
  std::size_t dim = 0;
  std::size_t n = 0;
};
void WriteManifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest ReadManifest(const std::string& path);

// L2-normalized per-class feature means over the latent labels (C x D).
Matrix ClassCentroids(const Matrix& features, std::span<const int> latent_labels,
                      int class_count);

struct BatchPlan {
  std::vector<std::vector<std::size_t>> batches;
  std::size_t classes_per_batch = 0;
  std::size_t samples_per_class = 0;
};

// Each batch holds batch_size / samples_per_class distinct classes with
// samples_per_class members each, so every anchor has at least one in-batch
// positive. Samples are used at most once per plan.
BatchPlan ClassBalancedBatches(std::span<const int> labels,
                               std::size_t batch_size,
                               std::size_t samples_per_class,
                               std::uint64_t seed);

}  // namespace rscl

#endif  // RSCL_DATASETS_H_
