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

#include "morphnet/cost_model.h"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "morphnet/error.h"
#include "morphnet/regularizer.h"

namespace morphnet {

std::string_view to_string(Resource resource) {
  return resource == Resource::kFlops ? "flops" : "model_size";
}

Resource parse_resource(std::string_view text) {
  if (text == "flops") return Resource::kFlops;
  if (text == "model_size" || text == "size") return Resource::kModelSize;
  throw ConfigError("unknown resource '" + std::string(text) + "' (expected flops or model_size)");
}

AliveMask AliveMask::all_alive(const NetworkSpec& net) {
  AliveMask mask;
  for (const LayerSpec& layer : net.layers) {
    mask.layers.emplace_back(static_cast<std::size_t>(layer.out_width), true);
  }
  return mask;
}

int AliveMask::alive_count(std::size_t layer) const {
  return static_cast<int>(std::count(layers[layer].begin(), layers[layer].end(), true));
}

Count CostReport::at(std::string_view layer) const {
  for (const auto& [id, count] : per_layer) {
    if (id == layer) return count;
  }
  throw DimensionError("no cost entry for layer '" + std::string(layer) + "'");
}

Count cost_coefficient(const LayerSpec& layer, const SpatialDims& spatial, Resource resource) {
  const Count fg = static_cast<Count>(layer.filter_h) * layer.filter_w;
  if (resource == Resource::kModelSize) return fg;
  return 2 * static_cast<Count>(spatial.out_h) * spatial.out_w * fg;
}

Count layer_cost(const LayerSpec& layer, const SpatialDims& spatial, Resource resource) {
  return cost_coefficient(layer, spatial, resource) * layer.in_width * layer.out_width;
}

namespace {

__extension__ using Wide = __int128;

void check_mask(const NetworkSpec& net, const AliveMask& mask) {
  if (mask.layers.size() != net.layers.size()) {
    throw DimensionError("alive mask covers " + std::to_string(mask.layers.size()) +
                         " layers, network has " + std::to_string(net.layers.size()));
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (mask.layers[i].size() != static_cast<std::size_t>(net.layers[i].out_width)) {
      throw DimensionError("alive mask for layer '" + net.layers[i].id + "' has " +
                           std::to_string(mask.layers[i].size()) + " entries, expected " +
                           std::to_string(net.layers[i].out_width));
    }
  }
}

// Alive input channels of layer i: union over sources, which for a sum join
// coincides with the shared group mask.
Count alive_inputs(const NetworkSpec& net, const Topology& topo, const AliveMask& mask,
                   std::size_t i) {
  const LayerSpec& layer = net.layers[i];
  Count alive = 0;
  for (int c = 0; c < layer.in_width; ++c) {
    for (int s : topo.sources[i]) {
      if (s == Topology::kInput || mask.layers[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)]) {
        ++alive;
        break;
      }
    }
  }
  return alive;
}

}  // namespace

CostReport network_cost(const NetworkSpec& net, Resource resource, const AliveMask* mask) {
  const SpatialMap spatial = spatial_shapes(net);
  CostReport report;
  report.resource = resource;
  report.mode = mask ? CostMode::kAliveProjected : CostMode::kFull;
  if (mask) check_mask(net, *mask);
  const Topology topo = build_topology(net);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    Count count = 0;
    if (mask == nullptr) {
      count = layer_cost(layer, spatial.layers[i], resource);
    } else {
      count = cost_coefficient(layer, spatial.layers[i], resource) *
              alive_inputs(net, topo, *mask, i) * mask->alive_count(i);
    }
    report.per_layer.emplace_back(layer.id, count);
    report.total += count;
  }
  return report;
}

CostReport projected_cost(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                          double tau) {
  const AliveMask mask = alive_mask(gammas, net, tau);
  return network_cost(net, resource, &mask);
}

namespace {

// Costs with coefficients precomputed, evaluated at arbitrary widths.
class WidthCostEvaluator {
 public:
  WidthCostEvaluator(const NetworkSpec& net, Resource resource)
      : net_(net), topo_(build_topology(net)) {
    const SpatialMap spatial = spatial_shapes(net);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      coeff_.push_back(cost_coefficient(net.layers[i], spatial.layers[i], resource));
    }
  }

  Count operator()(const std::vector<Count>& widths) const {
    Count total = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const int s = topo_.sources[i].front();
      const Count in = s == Topology::kInput ? net_.input.channels : widths[static_cast<std::size_t>(s)];
      total += coeff_[i] * in * widths[i];
    }
    return total;
  }

  Count coefficient(std::size_t i) const { return coeff_[i]; }

 private:
  const NetworkSpec& net_;
  Topology topo_;
  std::vector<Count> coeff_;
};

struct Ratio {
  std::int64_t num;
  std::int64_t den;
};

bool less(const Ratio& a, const Ratio& b) {
  return static_cast<Wide>(a.num) * b.den < static_cast<Wide>(b.num) * a.den;
}

bool equal(const Ratio& a, const Ratio& b) {
  return static_cast<Wide>(a.num) * b.den == static_cast<Wide>(b.num) * a.den;
}

}  // namespace

Count cost_with_widths(const NetworkSpec& net, const std::map<std::string, int>& widths,
                       Resource resource) {
  WidthCostEvaluator eval(net, resource);
  std::vector<Count> w;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto it = widths.find(net.layers[i].id);
    w.push_back(i + 1 == net.layers.size() || it == widths.end() ? net.layers[i].out_width
                                                                  : it->second);
  }
  return eval(w);
}

WidthMultiplier max_width_multiplier(const NetworkSpec& net, Count budget, Resource resource) {
  require_valid(net);
  if (budget <= 0) throw ConfigError("budget must be positive");
  const std::size_t n = net.layers.size();
  const std::size_t last = n - 1;
  WidthCostEvaluator eval(net, resource);

  std::vector<Count> seed(n);
  for (std::size_t i = 0; i < n; ++i) seed[i] = net.layers[i].out_width;

  const Count final_floor = eval.coefficient(last) * seed[last];
  if (budget < final_floor) {
    throw DegenerateBudgetError("budget " + std::to_string(budget) +
                                    " is below the final layer's own cost " +
                                    std::to_string(final_floor),
                                final_floor);
  }

  auto widths_at = [&](const Ratio& omega) {
    std::vector<Count> w(seed);
    for (std::size_t i = 0; i < last; ++i) {
      w[i] = static_cast<Count>(static_cast<Wide>(omega.num) * seed[i] / omega.den);
    }
    return w;
  };
  auto result_for = [&](const Ratio& omega) {
    WidthMultiplier r;
    const std::int64_t g = std::gcd(omega.num, omega.den);
    r.numerator = omega.num / g;
    r.denominator = omega.den / g;
    r.omega = static_cast<double>(r.numerator) / static_cast<double>(r.denominator);
    const std::vector<Count> w = widths_at(omega);
    for (std::size_t i = 0; i < last; ++i) r.widths[net.layers[i].id] = static_cast<int>(w[i]);
    r.cost = eval(w);
    return r;
  };

  Count min_width = 0;
  for (std::size_t i = 0; i < last; ++i) {
    if (seed[i] > 0 && (min_width == 0 || seed[i] < min_width)) min_width = seed[i];
  }
  if (min_width == 0) {
    // Nothing to scale.
    const Count cost = eval(seed);
    if (cost > budget) {
      throw InfeasibleError("budget " + std::to_string(budget) + " is infeasible; minimal cost is " +
                                std::to_string(cost),
                            cost);
    }
    return result_for({1, 1});
  }

  // Smallest omega that keeps every surviving layer at one channel or more.
  const Ratio lowest{1, min_width};
  const Count lowest_cost = eval(widths_at(lowest));
  if (lowest_cost > budget) {
    throw InfeasibleError("budget " + std::to_string(budget) +
                              " is below the cost with every layer at one channel",
                          lowest_cost);
  }

  std::int64_t upper = 1;
  while (eval(widths_at({upper, 1})) <= budget) upper *= 2;

  std::vector<Ratio> candidates;
  for (std::size_t i = 0; i < last; ++i) {
    const std::int64_t o = seed[i];
    if (o == 0) continue;
    // k / o in [1 / min_width, upper]
    const std::int64_t k_lo = (o + min_width - 1) / min_width;
    for (std::int64_t k = k_lo; k <= upper * o; ++k) candidates.push_back({k, o});
  }
  std::sort(candidates.begin(), candidates.end(), less);
  candidates.erase(std::unique(candidates.begin(), candidates.end(), equal), candidates.end());

  // F is nondecreasing in omega: find the last feasible candidate.
  std::size_t lo = 0;
  std::size_t hi = candidates.size();
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (eval(widths_at(candidates[mid])) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return result_for(candidates[lo]);
}

void write_cost_table(std::ostream& os, const CostReport& report) {
  std::size_t width = 5;
  for (const auto& [id, count] : report.per_layer) width = std::max(width, id.size());
  auto row = [&](std::string_view name, Count count) {
    os << name;
    for (std::size_t i = name.size(); i < width + 2; ++i) os << ' ';
    os << count << '\n';
  };
  for (const auto& [id, count] : report.per_layer) row(id, count);
  row("total", report.total);
}

}  // namespace morphnet
