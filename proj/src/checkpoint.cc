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

#include "rscl/checkpoint.h"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rscl/error.h"

namespace rscl {
namespace {

constexpr char kMagic[4] = {'S', 'C', 'L', 'E'};
// Dims above this are treated as corruption rather than allocated.
constexpr std::uint32_t kMaxDim = 1u << 24;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutF64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t Take(int width) {
    if (pos_ + width > bytes_.size()) {
      throw DataError(DataErrorKind::kUnexpectedEnd,
                      "checkpoint truncated at byte " + std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Take(4)); }
  double F64() { return std::bit_cast<double>(Take(8)); }
  bool AtEnd() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string SerializeEncoder(const MlpEncoder& encoder) {
  std::string out(kMagic, 4);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(encoder.layer_count()));
  for (std::size_t d : encoder.layer_dims()) PutU32(out, static_cast<std::uint32_t>(d));
  for (const Matrix& p : encoder.parameters()) {
    for (double v : p.values()) PutF64(out, v);
  }
  return out;
}

MlpEncoder DeserializeEncoder(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw DataError(DataErrorKind::kBadMagic, "checkpoint does not start with SCLE");
  }
  Reader in(bytes);
  in.Take(4);
  const std::uint32_t version = in.U32();
  if (version != kCheckpointVersion) {
    throw DataError(DataErrorKind::kMalformedHeader,
                    "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t layers = in.U32();
  if (layers == 0 || layers > 1024) {
    throw DataError(DataErrorKind::kMalformedHeader,
                    "implausible layer count " + std::to_string(layers));
  }
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i <= layers; ++i) {
    const std::uint32_t d = in.U32();
    if (d == 0 || d > kMaxDim) {
      throw DataError(DataErrorKind::kMalformedHeader,
                      "implausible layer dim " + std::to_string(d));
    }
    dims.push_back(d);
  }
  std::vector<Matrix> params;
  for (std::uint32_t l = 0; l < layers; ++l) {
    Matrix w(dims[l], dims[l + 1]);
    for (double& v : w.values()) v = in.F64();
    Matrix b(1, dims[l + 1]);
    for (double& v : b.values()) v = in.F64();
    params.push_back(std::move(w));
    params.push_back(std::move(b));
  }
  if (!in.AtEnd()) {
    throw DataError(DataErrorKind::kCountMismatch,
                    "trailing bytes after checkpoint payload at " +
                        std::to_string(in.pos()));
  }
  return MlpEncoder(std::move(dims), std::move(params));
}

void SaveCheckpoint(const MlpEncoder& encoder, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kOpenFailed, path);
  const std::string bytes = SerializeEncoder(encoder);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataErrorKind::kWriteFailed, path);
}

MlpEncoder LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kOpenFailed, path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return DeserializeEncoder(bytes);
}

}  // namespace rscl
