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

#ifndef MORPHNET_NETGRAPH_H_
#define MORPHNET_NETGRAPH_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace morphnet {

// Source name that denotes the raw network input.
inline constexpr std::string_view kNetworkInput = "input";

enum class LayerKind { kConv, kDense };
enum class Combine { kSingle, kSum };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Combine combine);

// One convolution or fully connected layer. Non-final layers are followed by
// batch normalization and ReLU; the final layer produces logits.
//
// Dense layers average-pool their input spatially before the matrix multiply
// and always emit a 1x1 map.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::kConv;
  int in_width = 0;  // derived from the sources
  int out_width = 0;
  int filter_h = 1;
  int filter_w = 1;
  int stride = 1;
  std::vector<std::string> inputs;
  Combine combine = Combine::kSingle;
  bool has_batchnorm = true;

  bool operator==(const LayerSpec&) const = default;
};

struct InputShape {
  int height = 1;
  int width = 1;
  int channels = 1;

  bool operator==(const InputShape&) const = default;
};

// Channels [begin, end) of `layer` take part in a residual group.
struct GroupMember {
  std::string layer;
  int begin = 0;
  int end = 0;

  bool operator==(const GroupMember&) const = default;
};

// Channels tied together by sum joins: the j-th channel of every member is
// added to the j-th channel of every other member.
struct ResidualGroup {
  std::vector<GroupMember> members;

  bool operator==(const ResidualGroup&) const = default;
};

// The architecture being optimized. Layers are stored in topological order
// and the last layer is the (unique) final layer.
struct NetworkSpec {
  InputShape input;
  std::vector<LayerSpec> layers;
  std::vector<ResidualGroup> residual_groups;

  bool operator==(const NetworkSpec&) const = default;

  // Position of `id` in `layers`, or -1.
  int index_of(std::string_view id) const;
  const LayerSpec* find(std::string_view id) const;
  const LayerSpec& final_layer() const { return layers.back(); }
  std::map<std::string, int> widths() const;
};

struct Violation {
  std::string layer;  // empty for network-level problems
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::string to_string(const Violation& v);

// Every invariant breach of `net`; empty iff the network is well formed.
std::vector<Violation> validate(const NetworkSpec& net);

// Throws GraphError listing the violations unless `net` is valid.
void require_valid(const NetworkSpec& net);

// Index-based view of a valid network used by the numerical modules.
struct Topology {
  static constexpr int kInput = -1;

  // sources[L]: producer indices, kInput for the network input.
  std::vector<std::vector<int>> sources;
  // consumers[L]: layers that read the output of L.
  std::vector<std::vector<int>> consumers;
  // group_of[L]: residual group index of L's output channels, or -1.
  std::vector<int> group_of;
  // members[g]: layer indices of group g in network order.
  std::vector<std::vector<int>> members;
  int final_index = -1;

  bool fed_by_input(int layer) const;
};

Topology build_topology(const NetworkSpec& net);

struct SpatialDims {
  int in_h = 0;
  int in_w = 0;
  int out_h = 0;
  int out_w = 0;

  bool operator==(const SpatialDims&) const = default;
};

// Per-layer spatial extents, aligned with NetworkSpec::layers.
struct SpatialMap {
  std::vector<SpatialDims> layers;

  bool operator==(const SpatialMap&) const = default;
};

// Propagates input_shape through strides (same padding, ceil division).
SpatialMap spatial_shapes(const NetworkSpec& net);

// Recomputes every in_width from the sources' out_width.
void recompute_in_widths(NetworkSpec& net);

// Rewrites `net` to the given output widths. Zero-width layers are removed,
// along with everything that only they fed and everything that only fed
// them; a sum join that loses sources keeps the remaining ones (a single
// survivor turns it into a pass-through).
// The final layer keeps its width and need not appear in `new_widths`.
NetworkSpec apply_widths(const NetworkSpec& net,
                         const std::map<std::string, int>& new_widths);

}  // namespace morphnet

#endif  // MORPHNET_NETGRAPH_H_
