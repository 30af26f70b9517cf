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

#ifndef RSCL_TOOLS_CLI_H_
#define RSCL_TOOLS_CLI_H_

#include <ostream>

namespace rscl::cli {

// Runs the rscl command line and returns the process exit code
// (0 ok, 2 config, 3 numeric, 4 I/O).
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rscl::cli

#endif  // RSCL_TOOLS_CLI_H_
