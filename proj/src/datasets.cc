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

#include "rscl/datasets.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rscl/error.h"
#include "rscl/rng.h"

namespace rscl {
namespace {

void SampleClassMajor(const Matrix& means, std::size_t n_per_class,
                      double intra_std, RngStream& rng, std::int64_t first_id,
                      SplitTag split, DatasetBundle& out) {
  const std::size_t classes = means.rows();
  const std::size_t dim = means.cols();
  out.features = Matrix(classes * n_per_class, dim);
  out.class_count = static_cast<int>(classes);
  out.split = split;
  std::size_t r = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      auto row = out.features.row(r);
      for (std::size_t k = 0; k < dim; ++k) {
        row[k] = means(c, k) + intra_std * rng.Normal();
      }
      out.latent_labels.push_back(static_cast<int>(c));
      out.sample_ids.push_back(first_id + static_cast<std::int64_t>(r));
    }
  }
  out.assigned_labels = out.latent_labels;
}

std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kOpenFailed, path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T ParseField(std::string_view field, const std::string& where) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
    field.remove_prefix(1);
  }
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) {
    field.remove_suffix(1);
  }
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw DataError(DataErrorKind::kParse,
                    "'" + std::string(field) + "' at " + where);
  }
  return value;
}

int ResolveClassCount(const DatasetBundle& b, std::optional<int> class_count,
                      const std::string& source) {
  int max_label = -1;
  for (const auto* labels : {&b.latent_labels, &b.assigned_labels}) {
    for (int l : *labels) {
      if (l < 0 || (class_count && l >= *class_count)) {
        throw DataError(DataErrorKind::kLabelOutOfRange,
                        "label " + std::to_string(l) + " in " + source);
      }
      max_label = std::max(max_label, l);
    }
  }
  return class_count ? *class_count : max_label + 1;
}

std::uint32_t ReadBigEndianU32(const std::string& bytes, std::size_t offset,
                               const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw DataError(DataErrorKind::kUnexpectedEnd, path);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  }
  return v;
}

}  // namespace

void DatasetBundle::Validate() const {
  const std::size_t n = features.rows();
  if (latent_labels.size() != n || assigned_labels.size() != n) {
    throw ContractError("dataset label counts do not match feature rows");
  }
  if (!sample_ids.empty() && sample_ids.size() != n) {
    throw ContractError("dataset sample id count does not match feature rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (latent_labels[i] < 0 || latent_labels[i] >= class_count ||
        assigned_labels[i] < 0 || assigned_labels[i] >= class_count) {
      throw ContractError("dataset label out of range at row " + std::to_string(i));
    }
  }
}

DatasetSplit GenGaussianMixtureSplit(const GaussianMixtureSpec& spec) {
  if (spec.class_count < 2) throw ContractError("mixture needs at least 2 classes");
  if (spec.dim < 2) throw ContractError("mixture dimension must be at least 2");
  if (!(spec.class_sep >= 0.0)) throw ContractError("class_sep must be non-negative");
  if (!(spec.intra_std >= 0.0)) throw ContractError("intra_std must be non-negative");
  RngStream mean_rng(spec.seed, 10);
  Matrix means(spec.class_count, spec.dim);
  for (int c = 0; c < spec.class_count; ++c) {
    auto row = means.row(c);
    double norm = 0.0;
    do {
      for (double& v : row) v = mean_rng.Normal();
      norm = Norm2(row);
    } while (norm < 1e-12);
    for (double& v : row) v = v / norm * spec.class_sep;
  }
  DatasetSplit split;
  RngStream train_rng(spec.seed, 11);
  SampleClassMajor(means, spec.n_per_class, spec.intra_std, train_rng, 0,
                   SplitTag::kTrain, split.train);
  RngStream test_rng(spec.seed, 12);
  SampleClassMajor(means, spec.n_test_per_class, spec.intra_std, test_rng,
                   static_cast<std::int64_t>(split.train.size()), SplitTag::kTest,
                   split.test);
  return split;
}

DatasetBundle GenGaussianMixture(int class_count, std::size_t dim,
                                 std::size_t n_per_class, double class_sep,
                                 double intra_std, std::uint64_t seed) {
  GaussianMixtureSpec spec;
  spec.class_count = class_count;
  spec.dim = dim;
  spec.n_per_class = n_per_class;
  spec.n_test_per_class = 0;
  spec.class_sep = class_sep;
  spec.intra_std = intra_std;
  spec.seed = seed;
  return GenGaussianMixtureSplit(spec).train;
}

void WriteCsv(const DatasetBundle& bundle, const std::string& path,
              bool include_assigned) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kOpenFailed, path);
  for (std::size_t k = 0; k < bundle.dim(); ++k) out << 'f' << k << ',';
  out << "label" << (include_assigned ? ",assigned" : "") << '\n';
  char buf[64];
  for (std::size_t r = 0; r < bundle.size(); ++r) {
    for (double v : bundle.features.row(r)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << bundle.latent_labels[r];
    if (include_assigned) out << ',' << bundle.assigned_labels[r];
    out << '\n';
  }
  if (!out) throw DataError(DataErrorKind::kWriteFailed, path);
}

DatasetBundle LoadCsv(const std::string& path, std::optional<int> class_count) {
  const std::string text = ReadAll(path);
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) {
    throw DataError(DataErrorKind::kMalformedHeader, path + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = SplitCommas(line);
  bool has_assigned = header.size() >= 3 && header.back() == "assigned";
  const std::size_t label_col = header.size() - (has_assigned ? 2 : 1);
  if (header.size() < 2 || header[label_col] != "label") {
    throw DataError(DataErrorKind::kMalformedHeader,
                    path + ": expected f0..fD-1,label");
  }
  for (std::size_t k = 0; k < label_col; ++k) {
    if (header[k] != "f" + std::to_string(k)) {
      throw DataError(DataErrorKind::kMalformedHeader,
                      path + ": column " + std::to_string(k) + " is '" +
                          std::string(header[k]) + "', expected f" +
                          std::to_string(k));
    }
  }
  const std::size_t dim = label_col;
  DatasetBundle b;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitCommas(line);
    if (fields.size() != header.size()) {
      throw DataError(DataErrorKind::kRowLengthMismatch,
                      path + ":" + std::to_string(line_no) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(header.size()));
    }
    const std::string where = path + ":" + std::to_string(line_no);
    for (std::size_t k = 0; k < dim; ++k) values.push_back(ParseField<double>(fields[k], where));
    b.latent_labels.push_back(ParseField<int>(fields[label_col], where));
    b.assigned_labels.push_back(has_assigned ? ParseField<int>(fields.back(), where)
                                             : b.latent_labels.back());
    b.sample_ids.push_back(static_cast<std::int64_t>(b.sample_ids.size()));
  }
  const std::size_t n = b.latent_labels.size();
  b.features = Matrix(n, dim, std::move(values));
  b.class_count = ResolveClassCount(b, class_count, path);
  return b;
}

DatasetBundle LoadIdx(const std::string& images_path,
                      const std::string& labels_path,
                      std::optional<int> class_count) {
  const std::string images = ReadAll(images_path);
  const std::string labels = ReadAll(labels_path);
  if (images.size() < 4) throw DataError(DataErrorKind::kUnexpectedEnd, images_path);
  if (ReadBigEndianU32(images, 0, images_path) != 0x00000803u) {
    throw DataError(DataErrorKind::kBadMagic,
                    images_path + ": expected 0x00000803 (u8, 3 dims)");
  }
  if (labels.size() < 4) throw DataError(DataErrorKind::kUnexpectedEnd, labels_path);
  if (ReadBigEndianU32(labels, 0, labels_path) != 0x00000801u) {
    throw DataError(DataErrorKind::kBadMagic,
                    labels_path + ": expected 0x00000801 (u8, 1 dim)");
  }
  const std::uint32_t n = ReadBigEndianU32(images, 4, images_path);
  const std::uint32_t rows = ReadBigEndianU32(images, 8, images_path);
  const std::uint32_t cols = ReadBigEndianU32(images, 12, images_path);
  const std::uint32_t n_labels = ReadBigEndianU32(labels, 4, labels_path);
  if (n != n_labels) {
    throw DataError(DataErrorKind::kCountMismatch,
                    std::to_string(n) + " images but " + std::to_string(n_labels) +
                        " labels");
  }
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  const std::size_t pixel_bytes = static_cast<std::size_t>(n) * dim;
  if (images.size() - 16 < pixel_bytes) {
    throw DataError(DataErrorKind::kUnexpectedEnd,
                    images_path + ": " + std::to_string(images.size() - 16) +
                        " pixel bytes, header promises " + std::to_string(pixel_bytes));
  }
  if (labels.size() - 8 < n) {
    throw DataError(DataErrorKind::kUnexpectedEnd,
                    labels_path + ": fewer label bytes than the header count");
  }
  DatasetBundle b;
  b.features = Matrix(n, dim);
  for (std::size_t i = 0; i < pixel_bytes; ++i) {
    b.features.values()[i] = static_cast<unsigned char>(images[16 + i]) / 255.0;
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    b.latent_labels.push_back(static_cast<unsigned char>(labels[8 + i]));
    b.sample_ids.push_back(i);
  }
  b.assigned_labels = b.latent_labels;
  b.class_count = ResolveClassCount(b, class_count, labels_path);
  return b;
}

void WriteManifest(const DatasetManifest& m, const std::string& path) {
  nlohmann::json j = {{"path", m.path}, {"kind", m.kind}, {"C", m.class_count},
                      {"D", m.dim},     {"n", m.n}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kOpenFailed, path);
  out << j.dump(2) << '\n';
}

DatasetManifest ReadManifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadAll(path));
    DatasetManifest m;
    m.path = j.at("path").get<std::string>();
    m.kind = j.at("kind").get<std::string>();
    m.class_count = j.at("C").get<int>();
    m.dim = j.at("D").get<std::size_t>();
    m.n = j.at("n").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::kMalformedHeader, path + ": " + e.what());
  }
}

Matrix ClassCentroids(const Matrix& features, std::span<const int> latent_labels,
                      int class_count) {
  if (latent_labels.size() != features.rows()) {
    throw ContractError("centroid labels do not match feature rows");
  }
  Matrix sums(class_count, features.cols());
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const int c = latent_labels[r];
    if (c < 0 || c >= class_count) throw ContractError("centroid label out of range");
    ++counts[c];
    auto src = features.row(r);
    auto dst = sums.row(c);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
  for (int c = 0; c < class_count; ++c) {
    if (counts[c] == 0) {
      throw ContractError("class " + std::to_string(c) + " has no samples");
    }
    auto row = sums.row(c);
    const double norm = Norm2(row);
    if (!(norm > 1e-12)) {
      throw NumericError("class " + std::to_string(c) + " has a zero mean");
    }
    for (double& v : row) v /= norm;
  }
  return sums;
}

BatchPlan ClassBalancedBatches(std::span<const int> labels,
                               std::size_t batch_size,
                               std::size_t samples_per_class,
                               std::uint64_t seed) {
  if (samples_per_class < 2) throw ContractError("samples_per_class must be >= 2");
  if (batch_size == 0 || batch_size % samples_per_class != 0) {
    throw ContractError("batch_size must be a positive multiple of samples_per_class");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::string short_classes;
  for (const auto& [label, idx] : members) {
    if (idx.size() < samples_per_class) {
      short_classes += (short_classes.empty() ? "" : ", ") + std::to_string(label) +
                       " (" + std::to_string(idx.size()) + ")";
    }
  }
  if (!short_classes.empty()) {
    throw ContractError("classes with fewer than " + std::to_string(samples_per_class) +
                        " samples: " + short_classes);
  }
  BatchPlan plan;
  plan.samples_per_class = samples_per_class;
  plan.classes_per_batch = batch_size / samples_per_class;
  if (members.size() < plan.classes_per_batch) {
    throw ContractError("batch needs " + std::to_string(plan.classes_per_batch) +
                        " classes but only " + std::to_string(members.size()) +
                        " are present");
  }

  RngStream rng(seed, 0x6261746368ull);
  struct ClassPool {
    std::vector<std::size_t> order;
    std::size_t next = 0;
    std::size_t Remaining(std::size_t spc) const { return (order.size() - next) / spc; }
  };
  std::vector<ClassPool> pools;
  for (auto& [label, idx] : members) {
    ClassPool pool{idx, 0};
    for (std::size_t i = pool.order.size(); i > 1; --i) {
      std::swap(pool.order[i - 1], pool.order[rng.UniformInt(i)]);
    }
    pools.push_back(std::move(pool));
  }
  std::vector<std::size_t> available;
  while (true) {
    available.clear();
    for (std::size_t p = 0; p < pools.size(); ++p) {
      if (pools[p].Remaining(samples_per_class) > 0) available.push_back(p);
    }
    if (available.size() < plan.classes_per_batch) break;
    for (std::size_t i = available.size(); i > 1; --i) {
      std::swap(available[i - 1], available[rng.UniformInt(i)]);
    }
    // Fullest classes first keeps as many batches as possible.
    std::stable_sort(available.begin(), available.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pools[a].Remaining(samples_per_class) >
                              pools[b].Remaining(samples_per_class);
                     });
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    for (std::size_t k = 0; k < plan.classes_per_batch; ++k) {
      ClassPool& pool = pools[available[k]];
      for (std::size_t s = 0; s < samples_per_class; ++s) {
        batch.push_back(pool.order[pool.next++]);
      }
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

}  // namespace rscl
