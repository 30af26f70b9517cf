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

#ifndef RSCL_RNG_H_
#define RSCL_RNG_H_

#include <array>
#include <cstdint>

namespace rscl {

// Philox4x32-10 block cipher (Salmon et al., Random123) used as a
// counter-based generator. Key = seed split into two 32-bit words; counter =
// (block index lo, block index hi, stream_id lo, stream_id hi). Each block
// yields four 32-bit words, consumed in order; NextU64 concatenates two words
// as (first | second << 32).
std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// SplitMix64 finalizer, used to derive child stream ids.
std::uint64_t Mix64(std::uint64_t x);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint32_t NextU32();
  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double NextDouble();
  // Uniform on {0, ..., bound - 1}; bound > 0. Lemire's multiply-shift with
  // rejection, so the result is exactly uniform.
  std::uint64_t UniformInt(std::uint64_t bound);
  // Standard normal by Box-Muller; one draw consumes two doubles.
  double Normal();

  // Independent stream keyed by the same seed.
  RngStream Child(std::uint64_t child_id) const;

 private:
  void Refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int position_ = 4;
};

// Stream id of the child_id-th child of parent.
std::uint64_t DeriveStreamId(std::uint64_t parent, std::uint64_t child_id);

}  // namespace rscl

#endif  // RSCL_RNG_H_
