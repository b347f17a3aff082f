// Copyright 2026 The droptriple Authors.
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

#ifndef DROPTRIPLE_CLI_HPP_
#define DROPTRIPLE_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace droptriple {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitGradCheckFailed = 1,
  kExitConfigError = 2,
  kExitIoError = 3,
  kExitVersionMismatch = 4,
  kExitDimensionMismatch = 5,
};

// Runs one command. args excludes the program name, e.g.
// {"train", "--config", "run.json", "--out", "runs/a"}.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace droptriple

#endif  // DROPTRIPLE_CLI_HPP_
