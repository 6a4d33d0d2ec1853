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

#include "cli.h"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "morphnet/cost_model.h"
#include "morphnet/engine.h"
#include "morphnet/error.h"
#include "morphnet/io.h"
#include "morphnet/morphnet.h"
#include "morphnet/regularizer.h"

namespace morphnet::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

std::map<std::string, std::string> manifest_checksums(const fs::path& outdir) {
  const std::string text = read_file(outdir / "manifest.json");
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed manifest");
  }
  std::map<std::string, std::string> out;
  for (auto it = doc.at("artifacts").begin(); it != doc.at("artifacts").end(); ++it) {
    out[it.key()] = it->get<std::string>();
  }
  return out;
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Collects artifacts of one invocation and writes manifest.json last.
class Manifest {
 public:
  Manifest(std::string command, fs::path outdir) : command_(std::move(command)), outdir_(std::move(outdir)) {
    started_ = utc_now();
    fs::create_directories(outdir_);
  }

  void input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_hex(read_file(path))}});
  }
  void set(const std::string& key, Json value) { extra_[key] = std::move(value); }

  void write(const std::string& name, std::string_view contents) {
    write_file(outdir_ / name, contents);
    artifacts_[name] = sha256_hex(contents);
  }

  void finish() {
    Json doc;
    doc["command"] = command_;
    doc["inputs"] = inputs_;
    for (auto it = extra_.begin(); it != extra_.end(); ++it) doc[it.key()] = it.value();
    doc["outdir"] = outdir_.string();
    doc["started"] = started_;
    doc["finished"] = utc_now();
    doc["artifacts"] = artifacts_;
    write_file(outdir_ / "manifest.json", doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path outdir_;
  std::string started_;
  Json inputs_ = Json::array();
  Json extra_ = Json::object();
  Json artifacts_ = Json::object();
};

double parse_lambda_token(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v) || v < 0.0) {
    throw ParseError("--lambda", "malformed lambda '" + token + "'");
  }
  return v;
}

// Accepts repeated flags and comma-separated lists.
std::vector<double> parse_lambdas(const std::vector<std::string>& raw) {
  std::vector<double> out;
  for (const std::string& item : raw) {
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = item.find(',', start);
      out.push_back(parse_lambda_token(item.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

MorphConfig load_config(const fs::path& path) {
  try {
    return parse_morph_config(read_file(path));
  } catch (const ParseError& e) {
    if (e.where() == path.string()) throw;
    throw ParseError(path.string() + " " + e.where(), e.detail());
  }
}

TrainConfig shrink_config(const NetworkSpec& net, const MorphConfig& cfg, double lambda) {
  TrainConfig c = cfg.shrink;
  c.lambda = effective_lambda(net, cfg, lambda);
  c.tau = cfg.tau;
  c.resource = cfg.resource;
  c.seed = cfg.seed;
  return c;
}

struct Options {
  std::string arch;
  std::string config;
  std::string gammas;
  std::string widths;
  std::string history;
  std::string outdir;
  std::string output;
  std::string resource = "flops";
  double tau = kDefaultAliveThreshold;
  long long budget = 0;
  int parallel = 0;
  std::vector<std::string> lambdas;
};

int cmd_cost(const Options& o, std::ostream& out) {
  const NetworkSpec net = load_network(o.arch);
  const Resource resource = parse_resource(o.resource);
  const CostReport full = network_cost(net, resource);
  if (o.gammas.empty()) {
    write_cost_table(out, full);
    return kOk;
  }
  const GammaState gammas = load_gammas(o.gammas);
  const CostReport projected = projected_cost(net, gammas, resource, o.tau);
  out << "full " << to_string(resource) << '\n';
  write_cost_table(out, full);
  out << "\nprojected " << to_string(resource) << " (tau " << format_number(o.tau) << ")\n";
  write_cost_table(out, projected);
  return kOk;
}

int cmd_probe(const Options& o, std::ostream& out) {
  const NetworkSpec net = load_network(o.arch);
  const MorphConfig cfg = load_config(o.config);
  const std::vector<double> lambdas = o.lambdas.empty() ? cfg.lambdas : parse_lambdas(o.lambdas);
  const auto data = make_data_source(cfg.data);
  out << std::left << std::setw(14) << "lambda" << std::setw(12) << "verdict" << std::setw(16)
      << "seed_cost" << "projected_cost\n";
  for (double lambda : lambdas) {
    const ProbeResult r = lambda_probe(net, *data, shrink_config(net, cfg, lambda), cfg.probe_steps);
    out << std::setw(14) << format_number(lambda) << std::setw(12) << to_string(r.verdict)
        << std::setw(16) << r.seed_cost << (r.diverged ? "diverged" : std::to_string(r.final_cost))
        << '\n';
  }
  return kOk;
}

int cmd_shrink(const Options& o, std::ostream& out) {
  const NetworkSpec net = load_network(o.arch);
  const MorphConfig cfg = load_config(o.config);
  const std::vector<double> lambdas = o.lambdas.empty() ? cfg.lambdas : parse_lambdas(o.lambdas);
  if (lambdas.size() != 1) throw ConfigError("shrink takes exactly one lambda");
  const auto data = make_data_source(cfg.data);
  const TrainConfig tc = shrink_config(net, cfg, lambdas[0]);

  Manifest manifest("shrink", o.outdir);
  manifest.input("architecture", o.arch);
  manifest.input("config", o.config);
  manifest.set("seed", cfg.seed);
  manifest.set("lambda", lambdas[0]);

  const ShrinkResult r = shrink(net, *data, tc);
  manifest.write("widths.json", serialize_widths(r.widths));
  manifest.write("gammas.json", serialize_gammas(r.gammas));
  manifest.write("curves.csv", history_csv(r.history));
  manifest.finish();

  for (const auto& [id, w] : r.widths) out << id << ' ' << w << '\n';
  out << "gap ratio " << format_number(r.gap.ratio) << '\n';
  return kOk;
}

int cmd_shrink_analyze(const Options& o, std::ostream& out) {
  const NetworkSpec net = load_network(o.arch);
  const GammaState gammas = load_gammas(o.gammas);
  gammas.check_dimensions(net);
  const GammaGap gap = gamma_gap(gammas, net, o.tau);
  const std::map<std::string, int> widths = alive_widths(gammas, net, o.tau);
  out << std::left << std::setw(16) << "layer" << std::setw(8) << "width" << "alive\n";
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    out << std::setw(16) << l.id << std::setw(8) << l.out_width << widths.at(l.id) << '\n';
  }
  out << "smallest alive " << format_number(gap.smallest_alive) << '\n';
  out << "largest dead " << format_number(gap.largest_dead) << '\n';
  out << "gap ratio " << format_number(gap.ratio) << '\n';
  out << "projected flops " << projected_cost(net, gammas, Resource::kFlops, o.tau).total << '\n';
  out << "projected size " << projected_cost(net, gammas, Resource::kModelSize, o.tau).total << '\n';
  return kOk;
}

int cmd_expand(const Options& o, std::ostream& out) {
  const NetworkSpec net = load_network(o.arch);
  const std::map<std::string, int> widths =
      o.widths.empty() ? net.widths() : parse_widths(read_file(o.widths));
  const Resource resource = parse_resource(o.resource);
  const Expansion e = expand(net, widths, o.budget, resource);
  out << "omega " << format_number(e.multiplier.omega) << " (" << e.multiplier.numerator << '/'
      << e.multiplier.denominator << ")\n";
  out << "cost " << e.multiplier.cost << '\n';
  for (std::size_t i = 0; i + 1 < e.expanded.layers.size(); ++i) {
    out << e.expanded.layers[i].id << ' ' << e.expanded.layers[i].out_width << '\n';
  }
  if (!o.output.empty()) write_file(o.output, serialize_network(e.expanded));
  return kOk;
}

int cmd_morph(const Options& o, std::ostream& out, std::ostream& err) {
  const NetworkSpec net = load_network(o.arch);
  MorphConfig cfg = load_config(o.config);
  if (o.parallel > 0) cfg.parallel = o.parallel;
  const auto data = make_data_source(cfg.data);

  Manifest manifest("morph", o.outdir);
  manifest.input("architecture", o.arch);
  manifest.input("config", o.config);
  manifest.set("seed", cfg.seed);

  const MorphHistory h = morphnet_run(net, *data, cfg);
  manifest.write("history.json", serialize_history(h));
  manifest.write("report.txt", history_report(h));
  manifest.write("curves.csv", history_curves_csv(h));
  for (const IterationRecord& it : h.iterations) {
    if (const Candidate* c = it.chosen()) {
      manifest.write("iter_" + std::to_string(it.iteration) + ".arch", serialize_network(c->expanded));
    }
  }
  manifest.finish();
  out << history_report(h);

  if (h.final_candidate() == nullptr) {
    const std::string& e = h.iterations.back().candidates.front().error;
    err << "error: no iteration succeeded: " << e << '\n';
    if (e.rfind("divergence", 0) == 0) return kDivergence;
    if (e.rfind("infeasible", 0) == 0) return kInfeasible;
    return kConfigError;
  }
  return kOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const MorphHistory h = parse_history(read_file(o.history));
  if (h.iterations.empty()) throw ParseError(o.history, "history has no iterations");
  Manifest manifest("report", o.outdir);
  manifest.input("history", o.history);
  manifest.write("tradeoff_lambda.csv", tradeoff_csv(h, false));
  manifest.write("tradeoff_omega.csv", tradeoff_csv(h, true));
  for (const IterationRecord& it : h.iterations) {
    manifest.write("widths_iter_" + std::to_string(it.iteration) + ".csv",
                   width_profile_csv(h, it.iteration));
  }
  manifest.finish();
  out << "wrote " << h.iterations.size() << " width profiles to " << o.outdir << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MorphNet width optimizer"};
  app.require_subcommand(1);
  Options o;

  auto* cost = app.add_subcommand("cost", "Per-layer and total resource cost");
  cost->add_option("arch", o.arch, "Architecture document")->required();
  cost->add_option("--resource", o.resource, "flops | model_size");
  cost->add_option("--gammas", o.gammas, "Gamma snapshot for the projected cost");
  cost->add_option("--tau", o.tau, "Alive threshold");

  auto* probe = app.add_subcommand("probe", "Classify lambda values with short shrink runs");
  probe->add_option("arch", o.arch)->required();
  probe->add_option("config", o.config)->required();
  probe->add_option("--lambda", o.lambdas, "Lambda values (repeat or comma-separate)");

  auto* shrink_cmd = app.add_subcommand("shrink", "Regularized training and width extraction");
  shrink_cmd->add_option("arch", o.arch)->required();
  shrink_cmd->add_option("config", o.config)->required();
  shrink_cmd->add_option("--lambda", o.lambdas);
  shrink_cmd->add_option("--out", o.outdir)->required();

  auto* analyze = app.add_subcommand("shrink-analyze", "Alive widths and gamma gap of a snapshot");
  analyze->add_option("arch", o.arch)->required();
  analyze->add_option("gammas", o.gammas)->required();
  analyze->add_option("--tau", o.tau);

  auto* expand_cmd = app.add_subcommand("expand", "Prune to widths and apply the width multiplier");
  expand_cmd->add_option("arch", o.arch)->required();
  expand_cmd->add_option("widths", o.widths, "Widths document (default: current widths)");
  expand_cmd->add_option("--budget", o.budget)->required();
  expand_cmd->add_option("--resource", o.resource);
  expand_cmd->add_option("--out", o.output, "Where to write the expanded architecture");

  auto* morph = app.add_subcommand("morph", "Full shrink/expand loop");
  morph->add_option("arch", o.arch)->required();
  morph->add_option("config", o.config)->required();
  morph->add_option("--out", o.outdir)->required();
  morph->add_option("--parallel", o.parallel, "Workers for the lambda sweep");

  auto* report = app.add_subcommand("report", "Tradeoff and width-profile CSVs from a history");
  report->add_option("history", o.history)->required();
  report->add_option("--out", o.outdir)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (cost->parsed()) return cmd_cost(o, out);
    if (probe->parsed()) return cmd_probe(o, out);
    if (shrink_cmd->parsed()) return cmd_shrink(o, out);
    if (analyze->parsed()) return cmd_shrink_analyze(o, out);
    if (expand_cmd->parsed()) return cmd_expand(o, out);
    if (morph->parsed()) return cmd_morph(o, out, err);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InfeasibleError& e) {
    err << "error: infeasible budget: " << e.what() << " (minimal achievable cost " << e.min_cost() << ")"
        << '\n';
    return kInfeasible;
  } catch (const DivergenceError& e) {
    err << "error: divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const DimensionError& e) {
    err << "error: dimension mismatch: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const GraphError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const AllDeadError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace morphnet::cli
