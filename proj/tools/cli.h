// Copyright 2026 The MorphNet Authors.
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

#ifndef MORPHNET_TOOLS_CLI_H_
#define MORPHNET_TOOLS_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace morphnet::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kConfigError = 2,
  kInfeasible = 3,
  kDivergence = 4,
};

// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// manifest.json of an output directory: artifact name -> checksum.
std::map<std::string, std::string> manifest_checksums(const std::filesystem::path& outdir);

}  // namespace morphnet::cli

#endif  // MORPHNET_TOOLS_CLI_H_
