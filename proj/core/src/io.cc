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

#include "morphnet/io.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "morphnet/error.h"

namespace morphnet {

using Json = nlohmann::ordered_json;

namespace {

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed JSON");
  }
}

const Json& field(const Json& obj, const std::string& pointer, const char* name) {
  if (!obj.is_object()) throw ParseError(pointer, "expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw ParseError(pointer + "/" + name, std::string("missing required field '") + name + "'");
  }
  return *it;
}

int as_int(const Json& value, const std::string& pointer) {
  if (!value.is_number_integer()) throw ParseError(pointer, "expected an integer");
  return value.get<int>();
}

std::string as_string(const Json& value, const std::string& pointer) {
  if (!value.is_string()) throw ParseError(pointer, "expected a string");
  return value.get<std::string>();
}

int int_field(const Json& obj, const std::string& pointer, const char* name) {
  return as_int(field(obj, pointer, name), pointer + "/" + name);
}

}  // namespace

std::string serialize_network(const NetworkSpec& net) {
  Json doc;
  doc["input_shape"] = {{"height", net.input.height},
                        {"width", net.input.width},
                        {"channels", net.input.channels}};
  Json layers = Json::array();
  for (const LayerSpec& layer : net.layers) {
    Json l;
    l["id"] = layer.id;
    l["kind"] = std::string(to_string(layer.kind));
    l["out_width"] = layer.out_width;
    l["filter"] = {layer.filter_h, layer.filter_w};
    l["stride"] = layer.stride;
    l["inputs"] = layer.inputs;
    l["combine"] = std::string(to_string(layer.combine));
    l["batchnorm"] = layer.has_batchnorm;
    layers.push_back(std::move(l));
  }
  doc["layers"] = std::move(layers);
  Json groups = Json::array();
  for (const ResidualGroup& group : net.residual_groups) {
    Json members = Json::array();
    for (const GroupMember& m : group.members) {
      members.push_back({{"layer", m.layer}, {"begin", m.begin}, {"end", m.end}});
    }
    groups.push_back({{"members", std::move(members)}});
  }
  doc["residual_groups"] = std::move(groups);
  return doc.dump(2) + "\n";
}

NetworkSpec parse_network(std::string_view text) {
  const Json doc = parse_json(text);
  NetworkSpec net;
  const Json& shape = field(doc, "", "input_shape");
  net.input.height = int_field(shape, "/input_shape", "height");
  net.input.width = int_field(shape, "/input_shape", "width");
  net.input.channels = int_field(shape, "/input_shape", "channels");

  const Json& layers = field(doc, "", "layers");
  if (!layers.is_array()) throw ParseError("/layers", "expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string at = "/layers/" + std::to_string(i);
    const Json& l = layers[i];
    LayerSpec layer;
    layer.id = as_string(field(l, at, "id"), at + "/id");
    const std::string kind = as_string(field(l, at, "kind"), at + "/kind");
    if (kind == "conv") {
      layer.kind = LayerKind::kConv;
    } else if (kind == "dense") {
      layer.kind = LayerKind::kDense;
    } else {
      throw ParseError(at + "/kind", "unknown layer kind '" + kind + "'");
    }
    layer.out_width = int_field(l, at, "out_width");
    if (auto it = l.find("filter"); it != l.end()) {
      if (!it->is_array() || it->size() != 2) throw ParseError(at + "/filter", "expected [h, w]");
      layer.filter_h = as_int((*it)[0], at + "/filter/0");
      layer.filter_w = as_int((*it)[1], at + "/filter/1");
    }
    if (auto it = l.find("stride"); it != l.end()) layer.stride = as_int(*it, at + "/stride");
    const Json& inputs = field(l, at, "inputs");
    if (!inputs.is_array()) throw ParseError(at + "/inputs", "expected an array");
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      layer.inputs.push_back(as_string(inputs[k], at + "/inputs/" + std::to_string(k)));
    }
    const std::string combine =
        l.contains("combine") ? as_string(l["combine"], at + "/combine") : "single";
    if (combine == "single") {
      layer.combine = Combine::kSingle;
    } else if (combine == "sum") {
      layer.combine = Combine::kSum;
    } else {
      throw ParseError(at + "/combine", "unknown combine '" + combine + "'");
    }
    if (auto it = l.find("batchnorm"); it != l.end()) {
      if (!it->is_boolean()) throw ParseError(at + "/batchnorm", "expected a boolean");
      layer.has_batchnorm = it->get<bool>();
    } else {
      layer.has_batchnorm = i + 1 != layers.size();
    }
    net.layers.push_back(std::move(layer));
  }

  if (auto it = doc.find("residual_groups"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("/residual_groups", "expected an array");
    for (std::size_t g = 0; g < it->size(); ++g) {
      const std::string at = "/residual_groups/" + std::to_string(g);
      const Json& members = field((*it)[g], at, "members");
      if (!members.is_array()) throw ParseError(at + "/members", "expected an array");
      ResidualGroup group;
      for (std::size_t k = 0; k < members.size(); ++k) {
        const std::string mat = at + "/members/" + std::to_string(k);
        GroupMember m;
        m.layer = as_string(field(members[k], mat, "layer"), mat + "/layer");
        m.begin = int_field(members[k], mat, "begin");
        m.end = int_field(members[k], mat, "end");
        group.members.push_back(std::move(m));
      }
      net.residual_groups.push_back(std::move(group));
    }
  }
  recompute_in_widths(net);
  return net;
}

std::string serialize_gammas(const GammaState& gammas) {
  Json values = Json::object();
  for (std::size_t i = 0; i < gammas.layer_ids.size(); ++i) {
    values[gammas.layer_ids[i]] = gammas.values[i];
  }
  Json doc;
  doc["gammas"] = std::move(values);
  return doc.dump(2) + "\n";
}

GammaState parse_gammas(std::string_view text) {
  const Json doc = parse_json(text);
  const Json& values = field(doc, "", "gammas");
  if (!values.is_object()) throw ParseError("/gammas", "expected an object");
  GammaState state;
  for (auto it = values.begin(); it != values.end(); ++it) {
    const std::string at = "/gammas/" + it.key();
    if (!it->is_array()) throw ParseError(at, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t j = 0; j < it->size(); ++j) {
      if (!(*it)[j].is_number()) throw ParseError(at + "/" + std::to_string(j), "expected a number");
      v.push_back((*it)[j].get<double>());
    }
    state.layer_ids.push_back(it.key());
    state.values.push_back(std::move(v));
  }
  return state;
}

std::string serialize_widths(const std::map<std::string, int>& widths) {
  Json values = Json::object();
  for (const auto& [id, w] : widths) values[id] = w;
  Json doc;
  doc["widths"] = std::move(values);
  return doc.dump(2) + "\n";
}

std::map<std::string, int> parse_widths(std::string_view text) {
  const Json doc = parse_json(text);
  const Json& values = field(doc, "", "widths");
  if (!values.is_object()) throw ParseError("/widths", "expected an object");
  std::map<std::string, int> widths;
  for (auto it = values.begin(); it != values.end(); ++it) {
    const int w = as_int(*it, "/widths/" + it.key());
    if (w < 0) throw ParseError("/widths/" + it.key(), "width must be non-negative");
    widths[it.key()] = w;
  }
  return widths;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

NetworkSpec load_network(const std::filesystem::path& path) {
  try {
    return parse_network(read_file(path));
  } catch (const ParseError& e) {
    if (e.where() == path.string()) throw;
    throw ParseError(path.string() + " " + e.where(), e.detail());
  }
}

GammaState load_gammas(const std::filesystem::path& path) {
  return parse_gammas(read_file(path));
}

}  // namespace morphnet
