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

#ifndef RSCL_ENCODER_H_
#define RSCL_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rscl/matrix.h"
#include "rscl/rng.h"

namespace rscl {

// Row-wise L2 normalization together with what its backward pass needs.
struct RowNormalized {
  Matrix output;
  std::vector<double> norms;

  // Maps d(loss)/d(output) to d(loss)/d(input) through the normalization
  // Jacobian (I - y y^T) / |x| applied per row.
  Matrix Backward(const Matrix& grad_output) const;
};

// Throws NumericError if any row has norm <= 1e-12.
RowNormalized RowNormalize(const Matrix& m);

// Parameter gradients laid out like MlpEncoder::parameters():
// weight_0, bias_0, weight_1, bias_1, ...
using ParameterGradients = std::vector<Matrix>;

// Fully connected network with rectifier hidden activations and a unit-norm
// output head. Weights are stored input-major (dims[i] x dims[i+1]) so that a
// layer computes x * W + b; biases are 1 x dims[i+1] matrices.
class MlpEncoder {
 public:
  // He-normal weights drawn from rng, zero biases.
  MlpEncoder(std::vector<std::size_t> layer_dims, RngStream& rng);
  // Takes parameters as laid out by parameters().
  MlpEncoder(std::vector<std::size_t> layer_dims, std::vector<Matrix> params);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t layer_count() const { return dims_.size() - 1; }
  std::size_t ParameterCount() const;

  const std::vector<Matrix>& parameters() const { return params_; }
  // Any mutable access invalidates outstanding forward caches.
  std::vector<Matrix>& mutable_parameters() {
    ++version_;
    return params_;
  }
  std::uint64_t version() const { return version_; }

  const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
  const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }

 private:
  void Validate() const;

  std::vector<std::size_t> dims_;
  std::vector<Matrix> params_;
  std::uint64_t version_ = 0;
};

struct EncoderCache {
  std::vector<std::size_t> layer_dims;
  std::uint64_t version = 0;
  // inputs[l] is the input to layer l; pre_activations[l] its affine output.
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
  RowNormalized head;
};

struct EncoderForward {
  Matrix embeddings;
  EncoderCache cache;
};

EncoderForward EncoderForwardPass(const MlpEncoder& encoder, const Matrix& x);

// Embeddings only, no cache retained.
Matrix Encode(const MlpEncoder& encoder, const Matrix& x);

// Gradients of the scalar whose embedding gradient is grad_embeddings. Throws
// ContractError when the cache does not belong to the encoder's current
// parameters or shapes disagree.
ParameterGradients EncoderBackward(const MlpEncoder& encoder,
                                   const EncoderCache& cache,
                                   const Matrix& grad_embeddings);

// Linear classifier over frozen embeddings: logits = x * W^T + b.
struct ProbeModel {
  Matrix weight;  // classes x embedding dim
  std::vector<double> bias;

  std::size_t class_count() const { return weight.rows(); }
  Matrix Logits(const Matrix& x) const;
};

}  // namespace rscl

#endif  // RSCL_ENCODER_H_
