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

#ifndef MORPHNET_REGULARIZER_H_
#define MORPHNET_REGULARIZER_H_

#include <string>
#include <vector>

#include "morphnet/cost_model.h"
#include "morphnet/netgraph.h"

namespace morphnet {

// Batch-norm scales, one vector per layer aligned with NetworkSpec::layers.
// The final layer has no batch norm and carries an empty vector. Residual
// group bindings come from the network the state is paired with.
struct GammaState {
  std::vector<std::string> layer_ids;
  std::vector<std::vector<double>> values;

  static GammaState constant(const NetworkSpec& net, double value);
  // Throws DimensionError unless ids and lengths match `net`.
  void check_dimensions(const NetworkSpec& net) const;
  bool operator==(const GammaState&) const = default;
};

// Per-channel magnitude: |gamma| for ungrouped channels, the max |gamma| over
// the group at that index for grouped ones. Aligned with `gammas.values`.
std::vector<std::vector<double>> effective_gamma(const GammaState& gammas,
                                                 const NetworkSpec& net);

// Channel alive iff its effective magnitude exceeds tau. Final-layer outputs
// are always alive.
AliveMask alive_mask(const GammaState& gammas, const NetworkSpec& net, double tau);

struct RegValue {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> per_layer;
  // Whether the gamma-independent edge terms (network-input magnitudes of 1 in
  // the first layers, unit output magnitudes of the final layer) are included.
  bool includes_constant_terms = true;
};

// Resource-weighted relaxation of the alive-channel cost. For layer L:
//
//   C * sum_i g_in(i) * sum_j B(j)  +  C * sum_i A(i) * sum_j g_out(j)
//
// where g are effective gamma magnitudes and A, B alive indicators at tau.
// With gammas in {0, 1} the total equals twice the masked network cost.
RegValue reg_value(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                   double tau = kDefaultAliveThreshold, bool include_constant_terms = true);

// d reg_value / d |gamma| holding A and B fixed. A grouped channel's whole
// coefficient goes to the member with the largest |gamma| (ties: earliest
// layer, then lowest channel); the other members receive zero.
GammaState reg_coefficients(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                            double tau = kDefaultAliveThreshold);

// reg_coefficients * sign(gamma), with sign(0) = 0.
GammaState reg_subgradient(const NetworkSpec& net, const GammaState& gammas, Resource resource,
                           double tau = kDefaultAliveThreshold);

struct GammaGap {
  double smallest_alive = 0.0;  // 0 if nothing is alive
  double largest_dead = 0.0;    // 0 if nothing is dead
  // smallest_alive / largest_dead; +inf when every dead channel is exactly 0.
  double ratio = 0.0;
};

GammaGap gamma_gap(const GammaState& gammas, const NetworkSpec& net, double tau);

// Alive output counts per non-final layer.
std::map<std::string, int> alive_widths(const GammaState& gammas, const NetworkSpec& net,
                                        double tau);

}  // namespace morphnet

#endif  // MORPHNET_REGULARIZER_H_
