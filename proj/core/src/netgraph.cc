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

#include "morphnet/netgraph.h"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "morphnet/error.h"

namespace morphnet {

std::string_view to_string(LayerKind kind) {
  return kind == LayerKind::kConv ? "conv" : "dense";
}

std::string_view to_string(Combine combine) {
  return combine == Combine::kSingle ? "single" : "sum";
}

int NetworkSpec::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

const LayerSpec* NetworkSpec::find(std::string_view id) const {
  const int i = index_of(id);
  return i < 0 ? nullptr : &layers[static_cast<std::size_t>(i)];
}

std::map<std::string, int> NetworkSpec::widths() const {
  std::map<std::string, int> out;
  for (const LayerSpec& layer : layers) out[layer.id] = layer.out_width;
  return out;
}

std::string to_string(const Violation& v) {
  return v.layer.empty() ? v.message : "layer '" + v.layer + "': " + v.message;
}

namespace {

bool has_cycle(const NetworkSpec& net) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    index.emplace(net.layers[i].id, static_cast<int>(i));
  }
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> state(net.layers.size(), 0);
  std::function<bool(int)> visit = [&](int v) {
    state[v] = 1;
    for (const std::string& src : net.layers[v].inputs) {
      auto it = index.find(src);
      if (it == index.end()) continue;
      if (state[it->second] == 1) return true;
      if (state[it->second] == 0 && visit(it->second)) return true;
    }
    state[v] = 2;
    return false;
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (state[i] == 0 && visit(static_cast<int>(i))) return true;
  }
  return false;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

std::vector<Violation> validate(const NetworkSpec& net) {
  std::vector<Violation> out;
  auto report = [&out](std::string layer, std::string message) {
    out.push_back({std::move(layer), std::move(message)});
  };

  if (net.input.height < 1 || net.input.width < 1 || net.input.channels < 1) {
    report("", "input_shape dimensions must be >= 1");
  }
  if (net.layers.empty()) {
    report("", "network has no layers");
    return out;
  }

  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    if (layer.id.empty()) report("", "layer " + std::to_string(i) + " has an empty id");
    if (layer.id == kNetworkInput) report(layer.id, "id is reserved for the network input");
    if (!index.emplace(layer.id, static_cast<int>(i)).second) {
      report(layer.id, "duplicate layer id");
    }
  }

  const bool cyclic = has_cycle(net);
  if (cyclic) report("", "graph not acyclic");

  std::vector<int> consumed(net.layers.size(), 0);
  // Spatial dims are tracked here so sum joins can be checked for agreement.
  std::vector<std::pair<int, int>> out_hw(net.layers.size(), {0, 0});
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    const std::string& id = layer.id;
    if (layer.filter_h < 1 || layer.filter_w < 1) report(id, "filter dims must be >= 1");
    if (layer.stride < 1) report(id, "stride must be >= 1");
    if (layer.out_width < 0) report(id, "out_width must be >= 0");
    if (layer.in_width < 0) report(id, "in_width must be >= 0");
    if (layer.kind == LayerKind::kDense &&
        (layer.filter_h != 1 || layer.filter_w != 1 || layer.stride != 1)) {
      report(id, "dense layers take a 1x1 filter and stride 1");
    }
    if (layer.inputs.empty()) {
      report(id, "layer has no inputs");
      continue;
    }
    if (layer.combine == Combine::kSingle && layer.inputs.size() != 1) {
      report(id, "single-input layer lists " + std::to_string(layer.inputs.size()) + " sources");
    }
    if (layer.combine == Combine::kSum && layer.inputs.size() < 2) {
      report(id, "sum join needs at least two sources");
    }

    std::set<std::string> seen;
    std::vector<int> widths;
    std::vector<std::pair<int, int>> dims;
    for (const std::string& src : layer.inputs) {
      if (!seen.insert(src).second) report(id, "source '" + src + "' listed twice");
      if (src == kNetworkInput) {
        widths.push_back(net.input.channels);
        dims.emplace_back(net.input.height, net.input.width);
        continue;
      }
      auto it = index.find(src);
      if (it == index.end()) {
        report(id, "unknown source '" + src + "'");
        continue;
      }
      if (static_cast<std::size_t>(it->second) >= i) {
        if (!cyclic) report(id, "source '" + src + "' does not precede the layer");
        continue;
      }
      ++consumed[static_cast<std::size_t>(it->second)];
      widths.push_back(net.layers[static_cast<std::size_t>(it->second)].out_width);
      dims.push_back(out_hw[static_cast<std::size_t>(it->second)]);
    }
    for (int w : widths) {
      if (w != layer.in_width) {
        std::ostringstream msg;
        msg << "in_width " << layer.in_width << " does not match source width " << w;
        report(id, msg.str());
        break;
      }
    }
    if (layer.combine == Combine::kSum) {
      if (std::adjacent_find(widths.begin(), widths.end(), std::not_equal_to<>()) != widths.end()) {
        report(id, "sum join sources have unequal widths");
      }
      if (std::adjacent_find(dims.begin(), dims.end(), std::not_equal_to<>()) != dims.end()) {
        report(id, "sum join sources have unequal spatial dims");
      }
    }
    if (!dims.empty()) {
      if (layer.kind == LayerKind::kDense) {
        out_hw[i] = {1, 1};
      } else {
        const int s = std::max(layer.stride, 1);
        out_hw[i] = {ceil_div(dims[0].first, s), ceil_div(dims[0].second, s)};
      }
    }
  }

  const std::size_t last = net.layers.size() - 1;
  int sinks = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (consumed[i] == 0) {
      ++sinks;
      if (i != last) report(net.layers[i].id, "output is never consumed");
    }
  }
  if (sinks == 0 && !cyclic) report("", "network has no final layer");

  const LayerSpec& final = net.layers[last];
  if (final.kind != LayerKind::kDense) report(final.id, "final layer must be dense");
  if (final.has_batchnorm) report(final.id, "final layer must not carry batch norm");
  if (final.out_width < 1) report(final.id, "final layer needs at least one output");
  for (std::size_t i = 0; i < last; ++i) {
    if (!net.layers[i].has_batchnorm) {
      report(net.layers[i].id, "prunable layers must carry batch norm");
    }
  }

  std::unordered_map<std::string, int> group_of;
  for (std::size_t g = 0; g < net.residual_groups.size(); ++g) {
    const ResidualGroup& group = net.residual_groups[g];
    const std::string tag = "residual group " + std::to_string(g);
    if (group.members.size() < 2) report("", tag + " needs at least two members");
    int length = -1;
    for (const GroupMember& m : group.members) {
      const LayerSpec* layer = net.find(m.layer);
      if (layer == nullptr) {
        report("", tag + " names unknown layer '" + m.layer + "'");
        continue;
      }
      if (layer == &final) report(m.layer, tag + " cannot include the final layer");
      if (m.begin != 0 || m.end != layer->out_width) {
        report(m.layer, tag + " range must cover all output channels");
      }
      if (length >= 0 && m.end - m.begin != length) {
        report(m.layer, tag + " member ranges have unequal length");
      }
      length = m.end - m.begin;
      if (!group_of.emplace(m.layer, static_cast<int>(g)).second) {
        report(m.layer, "channels belong to more than one residual group");
      }
    }
  }
  for (const LayerSpec& layer : net.layers) {
    if (layer.combine != Combine::kSum) continue;
    int group = -2;
    for (const std::string& src : layer.inputs) {
      auto it = group_of.find(src);
      const int g = it == group_of.end() ? -1 : it->second;
      if (g < 0) {
        report(layer.id, "sum join source '" + src + "' is not in a residual group");
        break;
      }
      if (group != -2 && g != group) {
        report(layer.id, "sum join mixes residual groups");
        break;
      }
      group = g;
    }
  }
  return out;
}

void require_valid(const NetworkSpec& net) {
  const std::vector<Violation> violations = validate(net);
  if (violations.empty()) return;
  std::string msg = "invalid network:";
  for (const Violation& v : violations) msg += "\n  " + to_string(v);
  throw GraphError(msg);
}

bool Topology::fed_by_input(int layer) const {
  const auto& src = sources[static_cast<std::size_t>(layer)];
  return std::find(src.begin(), src.end(), kInput) != src.end();
}

Topology build_topology(const NetworkSpec& net) {
  Topology topo;
  const std::size_t n = net.layers.size();
  topo.sources.resize(n);
  topo.consumers.resize(n);
  topo.group_of.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::string& src : net.layers[i].inputs) {
      const int s = src == kNetworkInput ? Topology::kInput : net.index_of(src);
      topo.sources[i].push_back(s);
      if (s >= 0) topo.consumers[static_cast<std::size_t>(s)].push_back(static_cast<int>(i));
    }
  }
  topo.members.resize(net.residual_groups.size());
  for (std::size_t g = 0; g < net.residual_groups.size(); ++g) {
    for (const GroupMember& m : net.residual_groups[g].members) {
      const int idx = net.index_of(m.layer);
      topo.group_of[static_cast<std::size_t>(idx)] = static_cast<int>(g);
      topo.members[g].push_back(idx);
    }
    std::sort(topo.members[g].begin(), topo.members[g].end());
  }
  topo.final_index = static_cast<int>(n) - 1;
  return topo;
}

SpatialMap spatial_shapes(const NetworkSpec& net) {
  require_valid(net);
  SpatialMap map;
  map.layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    const std::string& src = layer.inputs.front();
    SpatialDims& d = map.layers[i];
    if (src == kNetworkInput) {
      d.in_h = net.input.height;
      d.in_w = net.input.width;
    } else {
      const SpatialDims& s = map.layers[static_cast<std::size_t>(net.index_of(src))];
      d.in_h = s.out_h;
      d.in_w = s.out_w;
    }
    if (layer.kind == LayerKind::kDense) {
      d.out_h = d.out_w = 1;
    } else {
      d.out_h = ceil_div(d.in_h, layer.stride);
      d.out_w = ceil_div(d.in_w, layer.stride);
    }
  }
  return map;
}

void recompute_in_widths(NetworkSpec& net) {
  for (LayerSpec& layer : net.layers) {
    if (layer.inputs.empty()) continue;
    const std::string& src = layer.inputs.front();
    if (src == kNetworkInput) {
      layer.in_width = net.input.channels;
    } else if (const LayerSpec* s = net.find(src)) {
      layer.in_width = s->out_width;
    }
  }
}

NetworkSpec apply_widths(const NetworkSpec& net, const std::map<std::string, int>& new_widths) {
  require_valid(net);
  const std::size_t n = net.layers.size();
  const std::size_t last = n - 1;

  for (const auto& [id, width] : new_widths) {
    const int idx = net.index_of(id);
    if (idx < 0) throw GraphError("width given for unknown layer '" + id + "'");
    if (width < 0) throw GraphError("negative width for layer '" + id + "'");
    if (static_cast<std::size_t>(idx) == last && width != net.layers[last].out_width) {
      throw GraphError("final layer '" + id + "' width is fixed");
    }
  }

  NetworkSpec out = net;
  for (std::size_t i = 0; i < last; ++i) {
    auto it = new_widths.find(net.layers[i].id);
    if (it == new_widths.end()) {
      throw GraphError("no width given for layer '" + net.layers[i].id + "'");
    }
    out.layers[i].out_width = it->second;
  }
  for (const ResidualGroup& group : net.residual_groups) {
    const int w = new_widths.at(group.members.front().layer);
    for (const GroupMember& m : group.members) {
      if (new_widths.at(m.layer) != w) {
        throw GraphError("residual group members '" + group.members.front().layer + "' and '" +
                         m.layer + "' receive different widths");
      }
    }
  }

  // A layer disappears when its width is zero or nothing feeds it anymore.
  std::set<std::string> removed;
  for (std::size_t i = 0; i < n; ++i) {
    LayerSpec& layer = out.layers[i];
    std::vector<std::string> kept;
    for (const std::string& src : layer.inputs) {
      if (!removed.count(src)) kept.push_back(src);
    }
    if (kept.empty() || layer.out_width == 0) {
      if (i == last) {
        throw GraphError("removing zero-width layers disconnects the final layer from the input");
      }
      removed.insert(layer.id);
      continue;
    }
    layer.inputs = std::move(kept);
    if (layer.inputs.size() == 1) layer.combine = Combine::kSingle;
  }
  // ... or when nothing reads it anymore. Consumers follow their producers,
  // so one reverse sweep reaches the fixpoint.
  std::set<std::string> read;
  for (std::size_t i = n; i-- > 0;) {
    const LayerSpec& layer = out.layers[i];
    if (removed.count(layer.id)) continue;
    if (i != last && !read.count(layer.id)) {
      removed.insert(layer.id);
      continue;
    }
    read.insert(layer.inputs.begin(), layer.inputs.end());
  }

  std::vector<LayerSpec> layers;
  for (LayerSpec& layer : out.layers) {
    if (!removed.count(layer.id)) layers.push_back(std::move(layer));
  }
  out.layers = std::move(layers);

  std::vector<ResidualGroup> groups;
  for (const ResidualGroup& group : net.residual_groups) {
    ResidualGroup g;
    for (const GroupMember& m : group.members) {
      if (removed.count(m.layer)) continue;
      g.members.push_back({m.layer, 0, out.find(m.layer)->out_width});
    }
    if (g.members.size() >= 2) groups.push_back(std::move(g));
  }
  out.residual_groups = std::move(groups);
  recompute_in_widths(out);
  require_valid(out);
  return out;
}

}  // namespace morphnet
