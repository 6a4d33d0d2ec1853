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

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "morphnet/error.h"
#include "morphnet/io.h"
#include "morphnet/morphnet.h"

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

template <typename T>
void read_number(const Json& obj, const std::string& at, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ParseError(at + "/" + key, "expected an integer");
  } else {
    if (!it->is_number()) throw ParseError(at + "/" + key, "expected a number");
  }
  out = it->get<T>();
}

void read_bool(const Json& obj, const std::string& at, const char* key, bool& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_boolean()) throw ParseError(at + "/" + key, "expected a boolean");
  out = it->get<bool>();
}

void read_train(const Json& obj, const std::string& at, TrainConfig& c) {
  if (!obj.is_object()) throw ParseError(at, "expected an object");
  read_number(obj, at, "learning_rate", c.learning_rate);
  read_number(obj, at, "momentum", c.momentum);
  read_number(obj, at, "batch_size", c.batch_size);
  read_number(obj, at, "steps", c.steps);
  read_number(obj, at, "eval_every", c.eval_every);
  read_number(obj, at, "weight_decay", c.weight_decay);
}

Json write_train(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"batch_size", c.batch_size},       {"steps", c.steps},
          {"eval_every", c.eval_every},       {"weight_decay", c.weight_decay}};
}

// Doubles that may be infinite are stored as the string "inf".
Json finite_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_maybe_inf(const Json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError("", "expected a number or \"inf\"");
  }
  return v.get<double>();
}

Json write_records(const std::vector<TrainRecord>& records) {
  Json out = Json::array();
  for (const TrainRecord& r : records) {
    out.push_back({r.step, r.loss, r.reg_value, r.projected_flops, r.projected_size, r.accuracy});
  }
  return out;
}

std::vector<TrainRecord> read_records(const Json& rows) {
  std::vector<TrainRecord> out;
  for (const Json& row : rows) {
    TrainRecord r;
    r.step = row.at(0).get<long>();
    r.loss = row.at(1).get<double>();
    r.reg_value = row.at(2).get<double>();
    r.projected_flops = row.at(3).get<Count>();
    r.projected_size = row.at(4).get<Count>();
    r.accuracy = row.at(5).get<double>();
    out.push_back(r);
  }
  return out;
}

Json write_widths(const Widths& widths) {
  Json out = Json::object();
  for (const auto& [id, w] : widths) out[id] = w;
  return out;
}

Widths read_widths(const Json& obj) {
  Widths out;
  for (auto it = obj.begin(); it != obj.end(); ++it) out[it.key()] = it->get<int>();
  return out;
}

}  // namespace

MorphConfig parse_morph_config(std::string_view text) {
  const Json doc = parse_json(text);
  if (!doc.is_object()) throw ParseError("", "expected an object");
  MorphConfig c;
  if (auto it = doc.find("budget"); it != doc.end()) {
    if (it->is_string() && it->get<std::string>() == "seed") {
      c.budget.reset();
    } else if (it->is_number_integer()) {
      c.budget = it->get<Count>();
    } else {
      throw ParseError("/budget", "expected \"seed\" or an integer count");
    }
  }
  if (auto it = doc.find("resource"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("/resource", "expected a string");
    c.resource = parse_resource(it->get<std::string>());
  }
  if (auto it = doc.find("lambdas"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("/lambdas", "expected an array");
    c.lambdas.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_number()) throw ParseError("/lambdas/" + std::to_string(i), "expected a number");
      c.lambdas.push_back((*it)[i].get<double>());
    }
  }
  read_bool(doc, "", "normalize_lambda", c.normalize_lambda);
  read_number(doc, "", "iterations", c.iterations);
  read_number(doc, "", "tau", c.tau);
  read_number(doc, "", "seed", c.seed);
  read_bool(doc, "", "baseline", c.baseline);
  read_number(doc, "", "probe_steps", c.probe_steps);
  read_number(doc, "", "parallel", c.parallel);
  if (auto it = doc.find("shrink"); it != doc.end()) read_train(*it, "/shrink", c.shrink);
  if (auto it = doc.find("retrain"); it != doc.end()) read_train(*it, "/retrain", c.retrain);
  if (auto it = doc.find("data"); it != doc.end()) {
    const Json& d = *it;
    if (!d.is_object()) throw ParseError("/data", "expected an object");
    if (auto k = d.find("kind"); k != d.end()) {
      if (!k->is_string()) throw ParseError("/data/kind", "expected a string");
      c.data.kind = k->get<std::string>();
    }
    read_number(d, "/data", "classes", c.data.classes);
    read_number(d, "/data", "dims", c.data.dims);
    read_number(d, "/data", "train_size", c.data.train_size);
    read_number(d, "/data", "eval_size", c.data.eval_size);
    read_number(d, "/data", "noise", c.data.noise);
    read_number(d, "/data", "spread", c.data.spread);
    read_number(d, "/data", "image_size", c.data.image_size);
    read_number(d, "/data", "channels", c.data.channels);
    read_number(d, "/data", "turns", c.data.turns);
    read_number(d, "/data", "seed", c.data.seed);
  }
  c.shrink.tau = c.retrain.tau = c.tau;
  c.shrink.resource = c.retrain.resource = c.resource;
  c.check();
  return c;
}

std::string serialize_morph_config(const MorphConfig& c) {
  Json doc;
  doc["budget"] = c.budget ? Json(*c.budget) : Json("seed");
  doc["resource"] = std::string(to_string(c.resource));
  doc["lambdas"] = c.lambdas;
  doc["normalize_lambda"] = c.normalize_lambda;
  doc["iterations"] = c.iterations;
  doc["tau"] = c.tau;
  doc["seed"] = c.seed;
  doc["baseline"] = c.baseline;
  doc["probe_steps"] = c.probe_steps;
  doc["parallel"] = c.parallel;
  doc["shrink"] = write_train(c.shrink);
  doc["retrain"] = write_train(c.retrain);
  doc["data"] = {{"kind", c.data.kind},         {"classes", c.data.classes},
                 {"dims", c.data.dims},         {"train_size", c.data.train_size},
                 {"eval_size", c.data.eval_size}, {"noise", c.data.noise},
                 {"spread", c.data.spread},     {"image_size", c.data.image_size},
                 {"channels", c.data.channels}, {"turns", c.data.turns},
                 {"seed", c.data.seed}};
  return doc.dump(2) + "\n";
}

std::string serialize_history(const MorphHistory& h) {
  Json doc;
  doc["format"] = "morphnet-history-1";
  doc["resource"] = std::string(to_string(h.resource));
  doc["budget"] = h.budget;
  doc["tau"] = h.tau;
  doc["seed_flops"] = h.seed_flops;
  doc["seed_size"] = h.seed_size;
  doc["baseline_accuracy"] = h.baseline_accuracy ? Json(*h.baseline_accuracy) : Json(nullptr);
  doc["converged"] = h.converged;
  doc["aborted"] = h.aborted;
  doc["seed"] = Json::parse(serialize_network(h.seed));
  Json iterations = Json::array();
  for (const IterationRecord& it : h.iterations) {
    Json ij;
    ij["iteration"] = it.iteration;
    ij["seed_widths"] = write_widths(it.seed_widths);
    ij["seed_cost"] = it.seed_cost;
    ij["selected"] = it.selected;
    Json candidates = Json::array();
    for (const Candidate& c : it.candidates) {
      Json cj;
      cj["lambda"] = c.lambda;
      cj["effective_lambda"] = c.effective_lambda;
      cj["error"] = c.error;
      cj["shrunk"] = write_widths(c.shrunk);
      cj["shrunk_cost"] = c.shrunk_cost;
      cj["gap_ratio"] = finite_or_inf(c.gap_ratio);
      cj["shrink_history"] = write_records(c.shrink_history);
      if (c.ok()) {
        cj["omega"] = {c.omega_numerator, c.omega_denominator};
        cj["expanded"] = Json::parse(serialize_network(c.expanded));
        cj["flops"] = c.flops;
        cj["size"] = c.size;
        cj["cost"] = c.cost;
        cj["retrain_history"] = write_records(c.retrain_history);
        cj["accuracy"] = c.accuracy;
      }
      candidates.push_back(std::move(cj));
    }
    ij["candidates"] = std::move(candidates);
    iterations.push_back(std::move(ij));
  }
  doc["iterations"] = std::move(iterations);
  return doc.dump(1) + "\n";
}

MorphHistory parse_history(std::string_view text) {
  const Json doc = parse_json(text);
  MorphHistory h;
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != "morphnet-history-1") {
      throw ParseError("/format", "not a history document");
    }
    h.resource = parse_resource(doc.at("resource").get<std::string>());
    h.budget = doc.at("budget").get<Count>();
    h.tau = doc.at("tau").get<double>();
    h.seed_flops = doc.at("seed_flops").get<Count>();
    h.seed_size = doc.at("seed_size").get<Count>();
    if (!doc.at("baseline_accuracy").is_null()) h.baseline_accuracy = doc["baseline_accuracy"].get<double>();
    h.converged = doc.at("converged").get<bool>();
    h.aborted = doc.at("aborted").get<bool>();
    h.seed = parse_network(doc.at("seed").dump());
    for (const Json& ij : doc.at("iterations")) {
      IterationRecord it;
      it.iteration = ij.at("iteration").get<int>();
      it.seed_widths = read_widths(ij.at("seed_widths"));
      it.seed_cost = ij.at("seed_cost").get<Count>();
      it.selected = ij.at("selected").get<int>();
      for (const Json& cj : ij.at("candidates")) {
        Candidate c;
        c.lambda = cj.at("lambda").get<double>();
        c.effective_lambda = cj.at("effective_lambda").get<double>();
        c.error = cj.at("error").get<std::string>();
        c.shrunk = read_widths(cj.at("shrunk"));
        c.shrunk_cost = cj.at("shrunk_cost").get<Count>();
        c.gap_ratio = read_maybe_inf(cj.at("gap_ratio"));
        c.shrink_history = read_records(cj.at("shrink_history"));
        if (c.ok()) {
          c.omega_numerator = cj.at("omega").at(0).get<std::int64_t>();
          c.omega_denominator = cj.at("omega").at(1).get<std::int64_t>();
          c.omega = static_cast<double>(c.omega_numerator) / static_cast<double>(c.omega_denominator);
          c.expanded = parse_network(cj.at("expanded").dump());
          c.flops = cj.at("flops").get<Count>();
          c.size = cj.at("size").get<Count>();
          c.cost = cj.at("cost").get<Count>();
          c.retrain_history = read_records(cj.at("retrain_history"));
          c.accuracy = cj.at("accuracy").get<double>();
        }
        it.candidates.push_back(std::move(c));
      }
      if (it.selected >= static_cast<int>(it.candidates.size()) ||
          (it.selected >= 0 && !it.candidates[static_cast<std::size_t>(it.selected)].ok())) {
        throw ParseError("/iterations", "selected candidate out of range");
      }
      h.iterations.push_back(std::move(it));
    }
  } catch (const Json::exception& e) {
    throw ParseError("", std::string("malformed history: ") + e.what());
  }
  return h;
}

namespace {

std::string widths_text(const NetworkSpec& net) {
  std::string out;
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += std::to_string(net.layers[i].out_width);
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string history_report(const MorphHistory& h) {
  std::ostringstream os;
  os << "resource " << to_string(h.resource) << ", budget " << h.budget << ", tau "
     << format_number(h.tau) << '\n';
  os << "seed flops " << h.seed_flops << ", seed size " << h.seed_size << '\n';
  if (h.baseline_accuracy) os << "baseline accuracy " << fixed(*h.baseline_accuracy, 4) << '\n';
  os << '\n';
  os << std::left << std::setw(6) << "iter" << std::setw(12) << "lambda" << std::setw(12) << "omega"
     << std::setw(14) << "flops" << std::setw(12) << "size" << std::setw(10) << "accuracy"
     << "widths\n";
  os << std::setw(6) << "0" << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(14)
     << h.seed_flops << std::setw(12) << h.seed_size << std::setw(10)
     << (h.baseline_accuracy ? fixed(*h.baseline_accuracy, 4) : "-") << widths_text(h.seed) << '\n';
  for (const IterationRecord& it : h.iterations) {
    const Candidate* c = it.chosen();
    if (c == nullptr) {
      os << std::setw(6) << it.iteration << "aborted";
      for (const Candidate& f : it.candidates) os << " [" << format_number(f.lambda) << "] " << f.error;
      os << '\n';
      continue;
    }
    os << std::setw(6) << it.iteration << std::setw(12) << format_number(c->lambda) << std::setw(12)
       << fixed(c->omega, 4) << std::setw(14) << c->flops << std::setw(12) << c->size
       << std::setw(10) << fixed(c->accuracy, 4) << widths_text(c->expanded) << '\n';
  }
  if (h.converged) os << "\nstopped: widths unchanged\n";
  if (h.aborted) os << "\nstopped: every candidate failed\n";
  return os.str();
}

std::string history_curves_csv(const MorphHistory& h) {
  std::ostringstream os;
  os << "iteration,lambda,phase,step,loss,reg_value,projected_flops,projected_size,accuracy\n";
  auto emit = [&](int iteration, double lambda, const char* phase, const std::vector<TrainRecord>& rs) {
    for (const TrainRecord& r : rs) {
      os << iteration << ',' << format_number(lambda) << ',' << phase << ',' << r.step << ','
         << format_number(r.loss) << ',' << format_number(r.reg_value) << ',' << r.projected_flops
         << ',' << r.projected_size << ',' << format_number(r.accuracy) << '\n';
    }
  };
  for (const IterationRecord& it : h.iterations) {
    for (const Candidate& c : it.candidates) {
      emit(it.iteration, c.lambda, "shrink", c.shrink_history);
      emit(it.iteration, c.lambda, "retrain", c.retrain_history);
    }
  }
  return os.str();
}

std::string tradeoff_csv(const MorphHistory& h, bool selected_only) {
  struct Row {
    int iteration;
    const Candidate* c;
  };
  std::vector<Row> rows;
  for (const IterationRecord& it : h.iterations) {
    for (std::size_t i = 0; i < it.candidates.size(); ++i) {
      const Candidate& c = it.candidates[i];
      if (!c.ok()) continue;
      if (selected_only && static_cast<int>(i) != it.selected) continue;
      rows.push_back({it.iteration, &c});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.c->cost < b.c->cost; });
  std::ostringstream os;
  os << "iteration,lambda,omega,flops,size,cost,accuracy\n";
  for (const Row& r : rows) {
    os << r.iteration << ',' << format_number(r.c->lambda) << ',' << format_number(r.c->omega) << ','
       << r.c->flops << ',' << r.c->size << ',' << r.c->cost << ',' << format_number(r.c->accuracy)
       << '\n';
  }
  return os.str();
}

std::string width_profile_csv(const MorphHistory& h, int iteration) {
  const IterationRecord* rec = nullptr;
  for (const IterationRecord& it : h.iterations) {
    if (it.iteration == iteration) rec = &it;
  }
  if (rec == nullptr) throw ConfigError("no iteration " + std::to_string(iteration) + " in history");
  const Candidate* c = rec->chosen();
  std::ostringstream os;
  os << "layer,seed,shrunk,expanded\n";
  // Layer order follows the overall seed network; later iterations only
  // ever remove layers.
  for (std::size_t i = 0; i + 1 < h.seed.layers.size(); ++i) {
    const std::string& id = h.seed.layers[i].id;
    auto seed_it = rec->seed_widths.find(id);
    const int seed_w = seed_it == rec->seed_widths.end() ? 0 : seed_it->second;
    int shrunk = 0;
    int expanded = 0;
    if (c != nullptr) {
      if (auto s = c->shrunk.find(id); s != c->shrunk.end()) shrunk = s->second;
      if (const LayerSpec* l = c->expanded.find(id)) expanded = l->out_width;
    }
    os << id << ',' << seed_w << ',' << shrunk << ',' << expanded << '\n';
  }
  return os.str();
}

}  // namespace morphnet
