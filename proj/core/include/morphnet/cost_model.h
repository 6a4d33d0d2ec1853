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

#ifndef MORPHNET_COST_MODEL_H_
#define MORPHNET_COST_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morphnet/netgraph.h"

namespace morphnet {

using Count = std::int64_t;

enum class Resource { kFlops, kModelSize };

std::string_view to_string(Resource resource);
// Accepts "flops" and "model_size" (also "size"). Throws ConfigError.
Resource parse_resource(std::string_view text);

// Per-layer boolean vectors over output channels, aligned with
// NetworkSpec::layers.
struct AliveMask {
  std::vector<std::vector<bool>> layers;

  static AliveMask all_alive(const NetworkSpec& net);
  int alive_count(std::size_t layer) const;
  bool operator==(const AliveMask&) const = default;
};

enum class CostMode { kFull, kAliveProjected };

struct CostReport {
  std::vector<std::pair<std::string, Count>> per_layer;
  Count total = 0;
  Resource resource = Resource::kFlops;
  CostMode mode = CostMode::kFull;

  Count at(std::string_view layer) const;
};

// Bilinear coefficient C of a layer: 2*y*z*f*g for FLOPs (one multiply-add
// counts as two), f*g for model size. Biases and batch-norm parameters are
// not counted.
Count cost_coefficient(const LayerSpec& layer, const SpatialDims& spatial, Resource resource);

// C * I * O for the layer as specified.
Count layer_cost(const LayerSpec& layer, const SpatialDims& spatial, Resource resource);

// Sum of layer costs. With a mask, each layer counts only its alive inputs
// (the alive outputs of its source, or the shared group mask for sum joins)
// and its alive outputs.
CostReport network_cost(const NetworkSpec& net, Resource resource,
                        const AliveMask* mask = nullptr);

struct GammaState;

inline constexpr double kDefaultAliveThreshold = 0.01;

// Cost as if every channel with effective |gamma| <= tau were removed.
CostReport projected_cost(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                          double tau = kDefaultAliveThreshold);

// Largest uniform multiplier omega whose floored widths fit the budget.
struct WidthMultiplier {
  // omega = numerator / denominator exactly; every admissible omega is a
  // jump point k / O_L of some layer.
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  double omega = 0.0;
  std::map<std::string, int> widths;  // non-final layers
  Count cost = 0;
};

// Exact solver: F(omega) is piecewise constant with jumps at k / O_L, so the
// candidate jump points are enumerated and binary-searched. Every surviving
// layer keeps at least one channel; the final layer width is fixed.
//
// Throws DegenerateBudgetError when `budget` is below the final layer's cost
// at input width 1, InfeasibleError when no admissible omega fits.
WidthMultiplier max_width_multiplier(const NetworkSpec& net, Count budget, Resource resource);

// Total cost of `net` after replacing the non-final widths.
Count cost_with_widths(const NetworkSpec& net, const std::map<std::string, int>& widths,
                       Resource resource);

// Two-column text table (layer, count) followed by the total.
void write_cost_table(std::ostream& os, const CostReport& report);

}  // namespace morphnet

#endif  // MORPHNET_COST_MODEL_H_
