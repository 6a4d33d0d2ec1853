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

#include "morphnet/regularizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "morphnet/error.h"

namespace morphnet {

GammaState GammaState::constant(const NetworkSpec& net, double value) {
  GammaState state;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    state.layer_ids.push_back(net.layers[i].id);
    const bool last = i + 1 == net.layers.size();
    state.values.emplace_back(last ? 0 : static_cast<std::size_t>(net.layers[i].out_width), value);
  }
  return state;
}

void GammaState::check_dimensions(const NetworkSpec& net) const {
  if (layer_ids.size() != net.layers.size() || values.size() != net.layers.size()) {
    throw DimensionError("gamma state covers " + std::to_string(values.size()) +
                         " layers, network has " + std::to_string(net.layers.size()));
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    if (layer_ids[i] != layer.id) {
      throw DimensionError("gamma state layer " + std::to_string(i) + " is '" + layer_ids[i] +
                           "', network has '" + layer.id + "'");
    }
    const std::size_t expected = i + 1 == net.layers.size() ? 0 : static_cast<std::size_t>(layer.out_width);
    if (values[i].size() != expected) {
      throw DimensionError("layer '" + layer.id + "' has " + std::to_string(values[i].size()) +
                           " gammas, expected " + std::to_string(expected));
    }
  }
}

std::vector<std::vector<double>> effective_gamma(const GammaState& gammas,
                                                 const NetworkSpec& net) {
  gammas.check_dimensions(net);
  const Topology topo = build_topology(net);
  std::vector<std::vector<double>> eff(gammas.values.size());
  for (std::size_t i = 0; i < gammas.values.size(); ++i) {
    eff[i].resize(gammas.values[i].size());
    for (std::size_t j = 0; j < eff[i].size(); ++j) eff[i][j] = std::abs(gammas.values[i][j]);
  }
  for (const std::vector<int>& members : topo.members) {
    const std::size_t width = eff[static_cast<std::size_t>(members.front())].size();
    for (std::size_t j = 0; j < width; ++j) {
      double m = 0.0;
      for (int l : members) m = std::max(m, eff[static_cast<std::size_t>(l)][j]);
      for (int l : members) eff[static_cast<std::size_t>(l)][j] = m;
    }
  }
  return eff;
}

AliveMask alive_mask(const GammaState& gammas, const NetworkSpec& net, double tau) {
  const auto eff = effective_gamma(gammas, net);
  AliveMask mask;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (i + 1 == net.layers.size()) {
      mask.layers.emplace_back(static_cast<std::size_t>(net.layers[i].out_width), true);
      continue;
    }
    std::vector<bool> alive(eff[i].size());
    for (std::size_t j = 0; j < eff[i].size(); ++j) alive[j] = eff[i][j] > tau;
    mask.layers.push_back(std::move(alive));
  }
  return mask;
}

namespace {

// Everything reg_value and its derivative need, evaluated once.
struct LayerTerms {
  double coefficient = 0.0;
  double in_magnitude = 0.0;  // sum of effective gammas of the inputs
  double in_alive = 0.0;      // sum of A
  double out_magnitude = 0.0; // sum of effective gammas of the outputs
  double out_alive = 0.0;     // sum of B
  bool fed_by_input = false;
  bool final = false;
};

std::vector<LayerTerms> layer_terms(const NetworkSpec& net, const Topology& topo,
                                    const std::vector<std::vector<double>>& eff, Resource resource,
                                    double tau) {
  const SpatialMap spatial = spatial_shapes(net);
  std::vector<LayerTerms> terms(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    LayerTerms& t = terms[i];
    t.coefficient = static_cast<double>(cost_coefficient(layer, spatial.layers[i], resource));
    t.final = static_cast<int>(i) == topo.final_index;
    t.fed_by_input = topo.fed_by_input(static_cast<int>(i));
    if (t.fed_by_input) {
      t.in_magnitude = t.in_alive = layer.in_width;
    } else {
      // Sum-join sources share a group, hence one magnitude vector.
      const auto& src = eff[static_cast<std::size_t>(topo.sources[i].front())];
      for (double g : src) {
        t.in_magnitude += g;
        t.in_alive += g > tau ? 1.0 : 0.0;
      }
    }
    if (t.final) {
      t.out_magnitude = t.out_alive = layer.out_width;
    } else {
      for (double g : eff[i]) {
        t.out_magnitude += g;
        t.out_alive += g > tau ? 1.0 : 0.0;
      }
    }
  }
  return terms;
}

}  // namespace

RegValue reg_value(const NetworkSpec& net, const GammaState& gammas, Resource resource, double tau,
                   bool include_constant_terms) {
  const auto eff = effective_gamma(gammas, net);
  const Topology topo = build_topology(net);
  const auto terms = layer_terms(net, topo, eff, resource, tau);
  RegValue value;
  value.includes_constant_terms = include_constant_terms;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const LayerTerms& t = terms[i];
    double v = 0.0;
    if (!t.fed_by_input || include_constant_terms) v += t.coefficient * t.in_magnitude * t.out_alive;
    if (!t.final || include_constant_terms) v += t.coefficient * t.in_alive * t.out_magnitude;
    value.per_layer.emplace_back(net.layers[i].id, v);
    value.total += v;
  }
  return value;
}

GammaState reg_coefficients(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                            double tau) {
  const auto eff = effective_gamma(gammas, net);
  const Topology topo = build_topology(net);
  const auto terms = layer_terms(net, topo, eff, resource, tau);
  GammaState out = GammaState::constant(net, 0.0);

  // Derivative of the total with respect to one output magnitude of the given
  // producers: their own second terms plus the first term of every distinct
  // consumer.
  auto coefficient_of = [&](const std::vector<int>& producers) {
    double c = 0.0;
    std::set<int> consumers;
    for (int p : producers) {
      const LayerTerms& t = terms[static_cast<std::size_t>(p)];
      c += t.coefficient * t.in_alive;
      for (int q : topo.consumers[static_cast<std::size_t>(p)]) consumers.insert(q);
    }
    for (int q : consumers) {
      const LayerTerms& t = terms[static_cast<std::size_t>(q)];
      c += t.coefficient * t.out_alive;
    }
    return c;
  };

  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    if (topo.group_of[i] >= 0) continue;
    const double c = coefficient_of({static_cast<int>(i)});
    std::fill(out.values[i].begin(), out.values[i].end(), c);
  }
  for (const std::vector<int>& members : topo.members) {
    const double c = coefficient_of(members);
    const std::size_t width = gammas.values[static_cast<std::size_t>(members.front())].size();
    for (std::size_t j = 0; j < width; ++j) {
      int owner = members.front();
      double best = -1.0;
      for (int m : members) {
        const double g = std::abs(gammas.values[static_cast<std::size_t>(m)][j]);
        if (g > best) {
          best = g;
          owner = m;
        }
      }
      out.values[static_cast<std::size_t>(owner)][j] = c;
    }
  }
  return out;
}

GammaState reg_subgradient(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                           double tau) {
  GammaState grad = reg_coefficients(net, gammas, resource, tau);
  for (std::size_t i = 0; i < grad.values.size(); ++i) {
    for (std::size_t j = 0; j < grad.values[i].size(); ++j) {
      const double g = gammas.values[i][j];
      const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      grad.values[i][j] *= sign;
    }
  }
  return grad;
}

GammaGap gamma_gap(const GammaState& gammas, const NetworkSpec& net, double tau) {
  const auto eff = effective_gamma(gammas, net);
  GammaGap gap;
  double smallest = std::numeric_limits<double>::infinity();
  bool any_alive = false;
  for (std::size_t i = 0; i + 1 < eff.size(); ++i) {
    for (double g : eff[i]) {
      if (g > tau) {
        any_alive = true;
        smallest = std::min(smallest, g);
      } else {
        gap.largest_dead = std::max(gap.largest_dead, g);
      }
    }
  }
  gap.smallest_alive = any_alive ? smallest : 0.0;
  if (!any_alive) {
    gap.ratio = 0.0;
  } else if (gap.largest_dead == 0.0) {
    gap.ratio = std::numeric_limits<double>::infinity();
  } else {
    gap.ratio = gap.smallest_alive / gap.largest_dead;
  }
  return gap;
}

std::map<std::string, int> alive_widths(const GammaState& gammas, const NetworkSpec& net,
                                        double tau) {
  const AliveMask mask = alive_mask(gammas, net, tau);
  std::map<std::string, int> widths;
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    widths[net.layers[i].id] = mask.alive_count(i);
  }
  return widths;
}

}  // namespace morphnet
