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

#ifndef RSCL_ERROR_H_
#define RSCL_ERROR_H_

#include <stdexcept>
#include <string>

namespace rscl {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kNumeric = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Violated precondition or invalid configuration.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Non-finite values, degenerate inputs to normalization and the like.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ExitCode::kNumeric, what) {}
};

enum class DataErrorKind {
  kOpenFailed,
  kMalformedHeader,
  kBadMagic,
  kUnexpectedEnd,
  kRowLengthMismatch,
  kParse,
  kLabelOutOfRange,
  kCountMismatch,
  kWriteFailed,
};

const char* DataErrorKindName(DataErrorKind kind);

// File or format problems. Each kind carries a distinct diagnostic.
class DataError : public Error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : Error(ExitCode::kIo,
              std::string(DataErrorKindName(kind)) + ": " + what),
        kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

inline const char* DataErrorKindName(DataErrorKind kind) {
  switch (kind) {
    case DataErrorKind::kOpenFailed: return "cannot open file";
    case DataErrorKind::kMalformedHeader: return "malformed header";
    case DataErrorKind::kBadMagic: return "bad magic number";
    case DataErrorKind::kUnexpectedEnd: return "unexpected end of data";
    case DataErrorKind::kRowLengthMismatch: return "row length mismatch";
    case DataErrorKind::kParse: return "unparseable value";
    case DataErrorKind::kLabelOutOfRange: return "label out of range";
    case DataErrorKind::kCountMismatch: return "count mismatch";
    case DataErrorKind::kWriteFailed: return "write failed";
  }
  return "data error";
}

}  // namespace rscl

#endif  // RSCL_ERROR_H_
