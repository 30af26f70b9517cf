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

#include "rscl/encoder.h"

#include <cmath>
#include <string>

#include "rscl/error.h"

namespace rscl {

RowNormalized RowNormalize(const Matrix& m) {
  RowNormalized result{Matrix(m.rows(), m.cols()), std::vector<double>(m.rows())};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double norm = Norm2(m.row(r));
    if (!(norm > 1e-12)) {
      throw NumericError("cannot normalize row " + std::to_string(r) +
                         " with norm " + std::to_string(norm));
    }
    result.norms[r] = norm;
    auto src = m.row(r);
    auto dst = result.output.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = src[c] / norm;
  }
  return result;
}

Matrix RowNormalized::Backward(const Matrix& grad_output) const {
  if (grad_output.rows() != output.rows() || grad_output.cols() != output.cols()) {
    throw ContractError("row normalization gradient shape mismatch");
  }
  Matrix grad(output.rows(), output.cols());
  for (std::size_t r = 0; r < output.rows(); ++r) {
    auto y = output.row(r);
    auto g = grad_output.row(r);
    const double radial = Dot(y, g);
    auto out = grad.row(r);
    for (std::size_t c = 0; c < y.size(); ++c) {
      out[c] = (g[c] - y[c] * radial) / norms[r];
    }
  }
  return grad;
}

MlpEncoder::MlpEncoder(std::vector<std::size_t> layer_dims, RngStream& rng)
    : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ContractError("encoder needs at least two dims");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    Matrix w(dims_[l], dims_[l + 1]);
    const double scale = std::sqrt(2.0 / static_cast<double>(dims_[l]));
    for (double& v : w.values()) v = scale * rng.Normal();
    params_.push_back(std::move(w));
    params_.emplace_back(1, dims_[l + 1]);
  }
  Validate();
}

MlpEncoder::MlpEncoder(std::vector<std::size_t> layer_dims,
                       std::vector<Matrix> params)
    : dims_(std::move(layer_dims)), params_(std::move(params)) {
  Validate();
}

void MlpEncoder::Validate() const {
  if (dims_.size() < 2) throw ContractError("encoder needs at least two dims");
  if (params_.size() != 2 * (dims_.size() - 1)) {
    throw ContractError("encoder parameter count does not match layer dims");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] == 0 || dims_[l + 1] == 0) {
      throw ContractError("encoder layer dims must be positive");
    }
    const Matrix& w = params_[2 * l];
    const Matrix& b = params_[2 * l + 1];
    if (w.rows() != dims_[l] || w.cols() != dims_[l + 1] || b.rows() != 1 ||
        b.cols() != dims_[l + 1]) {
      throw ContractError("encoder layer " + std::to_string(l) +
                          " has wrong parameter shape");
    }
  }
}

std::size_t MlpEncoder::ParameterCount() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    count += (dims_[l] + 1) * dims_[l + 1];
  }
  return count;
}

namespace {

void AddBias(Matrix& z, const Matrix& bias) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < z.cols(); ++c) row[c] += bias(0, c);
  }
}

Matrix Relu(const Matrix& z) {
  Matrix a = z;
  for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
  return a;
}

}  // namespace

EncoderForward EncoderForwardPass(const MlpEncoder& encoder, const Matrix& x) {
  if (x.cols() != encoder.input_dim()) {
    throw ContractError("encoder input has " + std::to_string(x.cols()) +
                        " columns, expected " +
                        std::to_string(encoder.input_dim()));
  }
  EncoderForward fwd;
  fwd.cache.layer_dims = encoder.layer_dims();
  fwd.cache.version = encoder.version();
  Matrix activation = x;
  const std::size_t layers = encoder.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = MatMul(activation, encoder.weight(l));
    AddBias(z, encoder.bias(l));
    fwd.cache.inputs.push_back(std::move(activation));
    activation = (l + 1 < layers) ? Relu(z) : z;
    fwd.cache.pre_activations.push_back(std::move(z));
  }
  fwd.cache.head = RowNormalize(activation);
  fwd.embeddings = fwd.cache.head.output;
  return fwd;
}

Matrix Encode(const MlpEncoder& encoder, const Matrix& x) {
  return EncoderForwardPass(encoder, x).embeddings;
}

ParameterGradients EncoderBackward(const MlpEncoder& encoder,
                                   const EncoderCache& cache,
                                   const Matrix& grad_embeddings) {
  if (cache.layer_dims != encoder.layer_dims() ||
      cache.version != encoder.version()) {
    throw ContractError("stale encoder cache: parameters changed since forward");
  }
  if (grad_embeddings.rows() != cache.head.output.rows() ||
      grad_embeddings.cols() != cache.head.output.cols()) {
    throw ContractError("embedding gradient shape does not match forward output");
  }
  const std::size_t layers = encoder.layer_count();
  ParameterGradients grads(2 * layers);
  Matrix delta = cache.head.Backward(grad_embeddings);
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      const Matrix& z = cache.pre_activations[l];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(z.values()[i] > 0.0)) delta.values()[i] = 0.0;
      }
    }
    grads[2 * l] = MatMulTransA(cache.inputs[l], delta);
    Matrix gb(1, delta.cols());
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      for (std::size_t c = 0; c < delta.cols(); ++c) gb(0, c) += delta(r, c);
    }
    grads[2 * l + 1] = std::move(gb);
    if (l > 0) delta = MatMulTransB(delta, encoder.weight(l));
  }
  return grads;
}

Matrix ProbeModel::Logits(const Matrix& x) const {
  if (x.cols() != weight.cols()) {
    throw ContractError("probe input dimension mismatch");
  }
  Matrix logits = MatMulTransB(x, weight);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    for (std::size_t c = 0; c < logits.cols(); ++c) logits(r, c) += bias[c];
  }
  return logits;
}

}  // namespace rscl
