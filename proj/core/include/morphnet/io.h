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

#ifndef MORPHNET_IO_H_
#define MORPHNET_IO_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "morphnet/netgraph.h"
#include "morphnet/regularizer.h"

namespace morphnet {

// Architecture document (JSON):
//
//   {
//     "input_shape": {"height": 8, "width": 8, "channels": 3},
//     "layers": [
//       {"id": "c1", "kind": "conv", "out_width": 16, "filter": [3, 3],
//        "stride": 1, "inputs": ["input"], "combine": "single",
//        "batchnorm": true},
//       ...
//     ],
//     "residual_groups": [
//       {"members": [{"layer": "stem", "begin": 0, "end": 16}, ...]}
//     ]
//   }
//
// in_width is not stored; parse() derives it from the sources.
std::string serialize_network(const NetworkSpec& net);
NetworkSpec parse_network(std::string_view text);

// Gamma snapshot: {"gammas": {"<layer id>": [g0, g1, ...], ...}} in network
// order. Doubles are written in shortest round-trip form.
std::string serialize_gammas(const GammaState& gammas);
GammaState parse_gammas(std::string_view text);

// Widths file: {"widths": {"<layer id>": n, ...}}.
std::string serialize_widths(const std::map<std::string, int>& widths);
std::map<std::string, int> parse_widths(std::string_view text);

// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

// Throws ParseError (where = path) if the file cannot be read.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

NetworkSpec load_network(const std::filesystem::path& path);
GammaState load_gammas(const std::filesystem::path& path);

}  // namespace morphnet

#endif  // MORPHNET_IO_H_
