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

#ifndef MORPHNET_TESTS_SUPPORT_TEST_NETS_H_
#define MORPHNET_TESTS_SUPPORT_TEST_NETS_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "morphnet/cost_model.h"
#include "morphnet/netgraph.h"
#include "morphnet/regularizer.h"

namespace morphnet::test {

struct RandomNetOptions {
  int max_blocks = 4;
  int max_width = 8;
  int max_spatial = 8;
  bool conv = true;
  bool residual = true;
  // If non-empty, every prunable width is drawn from this list.
  std::vector<int> widths;
};

// A valid network built from plain layers and residual blocks (one or two
// branches summed back into the trunk).
NetworkSpec random_net(std::mt19937_64& rng, const RandomNetOptions& options = {});

// Gammas uniform in +-[0, 1], with roughly `zero_fraction` set to exactly 0.
GammaState random_gammas(const NetworkSpec& net, std::mt19937_64& rng,
                         double zero_fraction = 0.0);

// Gammas in {0, 1}; a residual group shares one draw per channel index.
GammaState binary_gammas(const NetworkSpec& net, std::mt19937_64& rng);

LayerSpec dense(std::string id, int out, std::vector<std::string> inputs);
LayerSpec conv(std::string id, int out, int filter, int stride, std::vector<std::string> inputs);
LayerSpec logits(std::string id, int out, std::vector<std::string> inputs);

// Builds the net and derives in_width. Throws on an invalid result.
NetworkSpec make_net(InputShape input, std::vector<LayerSpec> layers,
                     std::vector<ResidualGroup> groups = {});

// input 1x1x3 -> l1 dense(4) -> out dense(2).
NetworkSpec toy_chain();

// Small nets with per-layer counts worked out by hand.
struct CostFixture {
  std::string name;
  NetworkSpec net;
  std::map<std::string, Count> flops;
  std::map<std::string, Count> size;
};
std::vector<CostFixture> cost_fixtures();

// Oracles. These recompute shapes and costs from scratch and share no code
// with the library.
Count oracle_layer_cost(const NetworkSpec& net, std::size_t layer, Resource resource);
Count oracle_full_cost(const NetworkSpec& net, Resource resource);
// Sums C over every (alive input channel, alive output channel) pair.
Count oracle_masked_cost(const NetworkSpec& net, Resource resource, const AliveMask& mask);

struct ScanResult {
  bool feasible = false;
  std::int64_t k = 0;  // first grid point of the winning width plateau
  std::map<std::string, int> widths;
  Count cost = 0;
};
// Linear scan over omega = k / grid for the largest feasible multiplier. The
// smallest omega producing the final widths is reported, matching a jump point
// whenever every width divides the grid.
ScanResult scan_width_multiplier(const NetworkSpec& net, Count budget, Resource resource,
                                 std::int64_t grid = 1000);

}  // namespace morphnet::test

#endif  // MORPHNET_TESTS_SUPPORT_TEST_NETS_H_
