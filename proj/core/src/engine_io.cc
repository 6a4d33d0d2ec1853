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

#include <sstream>

#include "json.hpp"
#include "morphnet/engine.h"
#include "morphnet/error.h"
#include "morphnet/io.h"

namespace morphnet {

using Json = nlohmann::ordered_json;

std::string serialize_checkpoint(const NetworkSpec& net, const ParamSet<float>& params) {
  if (params.layers.size() != net.layers.size()) {
    throw DimensionError("parameter set does not match the network");
  }
  Json layers = Json::array();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    const LayerParams<float>& p = params.layers[i];
    Json l;
    l["id"] = layer.id;
    l["weight"] = {{"shape", {layer.filter_h, layer.filter_w, layer.in_width, layer.out_width}},
                   {"values", p.weight}};
    l["gamma"] = {{"shape", {p.gamma.size()}}, {"values", p.gamma}};
    l["beta"] = {{"shape", {p.beta.size()}}, {"values", p.beta}};
    l["moving_mean"] = {{"shape", {p.moving_mean.size()}}, {"values", p.moving_mean}};
    l["moving_var"] = {{"shape", {p.moving_var.size()}}, {"values", p.moving_var}};
    layers.push_back(std::move(l));
  }
  Json doc;
  doc["format"] = "morphnet-checkpoint-1";
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

namespace {

std::vector<float> read_tensor(const Json& layer, const std::string& at, const char* name,
                               std::size_t expected) {
  if (!layer.contains(name)) throw ParseError(at + "/" + name, "missing tensor");
  const Json& t = layer[name];
  std::size_t size = 1;
  for (const Json& d : t.at("shape")) size *= d.get<std::size_t>();
  if (size != expected) {
    throw DimensionError(at + "/" + name + ": shape header holds " + std::to_string(size) +
                         " values, network expects " + std::to_string(expected));
  }
  std::vector<float> values = t.at("values").get<std::vector<float>>();
  if (values.size() != size) throw ParseError(at + "/" + name, "value count disagrees with shape");
  return values;
}

}  // namespace

ParamSet<float> parse_checkpoint(const NetworkSpec& net, std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed JSON");
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    throw ParseError("/layers", "missing layer list");
  }
  const Json& layers = doc["layers"];
  if (layers.size() != net.layers.size()) {
    throw DimensionError("checkpoint has " + std::to_string(layers.size()) + " layers, network has " +
                         std::to_string(net.layers.size()));
  }
  ParamSet<float> params;
  try {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      const LayerSpec& layer = net.layers[i];
      const std::string at = "/layers/" + std::to_string(i);
      if (layers[i].value("id", std::string()) != layer.id) {
        throw DimensionError(at + ": expected layer '" + layer.id + "'");
      }
      const bool last = i + 1 == net.layers.size();
      const std::size_t out = static_cast<std::size_t>(layer.out_width);
      LayerParams<float> p;
      p.weight = read_tensor(layers[i], at, "weight",
                             static_cast<std::size_t>(layer.filter_h) * layer.filter_w * layer.in_width * out);
      p.gamma = read_tensor(layers[i], at, "gamma", last ? 0 : out);
      p.beta = read_tensor(layers[i], at, "beta", out);
      p.moving_mean = read_tensor(layers[i], at, "moving_mean", last ? 0 : out);
      p.moving_var = read_tensor(layers[i], at, "moving_var", last ? 0 : out);
      params.layers.push_back(std::move(p));
    }
  } catch (const Json::exception& e) {
    throw ParseError("", std::string("malformed checkpoint: ") + e.what());
  }
  return params;
}

std::string history_csv(const std::vector<TrainRecord>& history) {
  std::ostringstream os;
  os << "step,loss,reg_value,projected_flops,accuracy,projected_size\n";
  for (const TrainRecord& r : history) {
    os << r.step << ',' << format_number(r.loss) << ',' << format_number(r.reg_value) << ','
       << r.projected_flops << ',' << format_number(r.accuracy) << ',' << r.projected_size << '\n';
  }
  return os.str();
}

}  // namespace morphnet
