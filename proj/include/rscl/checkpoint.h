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

#ifndef RSCL_CHECKPOINT_H_
#define RSCL_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "rscl/encoder.h"

namespace rscl {

// Encoder checkpoint layout, all integers and floats little-endian:
//
//   bytes 0..3   magic "SCLE"
//   u32          format version (kCheckpointVersion)
//   u32          layer count L
//   u32 x (L+1)  layer dims
//   for each layer l:
//     f64 x dims[l]*dims[l+1]   weight, row-major (input-major)
//     f64 x dims[l+1]           bias
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeEncoder(const MlpEncoder& encoder);
MlpEncoder DeserializeEncoder(const std::string& bytes);

void SaveCheckpoint(const MlpEncoder& encoder, const std::string& path);
MlpEncoder LoadCheckpoint(const std::string& path);

}  // namespace rscl

#endif  // RSCL_CHECKPOINT_H_
