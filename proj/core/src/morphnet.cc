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

#include "morphnet/morphnet.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "morphnet/error.h"

namespace morphnet {

namespace {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (a + 1) + 0xBF58476D1CE4E5B9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const AllDeadError*>(&e)) return "all_dead";
  if (dynamic_cast<const InfeasibleError*>(&e)) return "infeasible";
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  return "graph";
}

}  // namespace

ShrinkResult shrink(const NetworkSpec& net, const DataSource& data, const TrainConfig& config) {
  if (!(config.lambda > 0.0)) throw ConfigError("shrink needs lambda > 0");
  TrainResult trained = train(net, data, config);
  ShrinkResult out;
  out.gammas = gamma_state(net, trained.params);
  out.widths = alive_widths(out.gammas, net, config.tau);
  out.gap = gamma_gap(out.gammas, net, config.tau);
  out.history = std::move(trained.history);

  if (std::all_of(out.widths.begin(), out.widths.end(), [](const auto& w) { return w.second == 0; })) {
    throw AllDeadError("every prunable channel was zeroed out");
  }
  try {
    apply_widths(net, out.widths);
  } catch (const GraphError& e) {
    throw AllDeadError(std::string("surviving channels do not reach the final layer: ") + e.what());
  }
  return out;
}

Expansion expand(const NetworkSpec& net, const Widths& widths, Count budget, Resource resource) {
  Expansion out;
  out.pruned = apply_widths(net, widths);
  out.multiplier = max_width_multiplier(out.pruned, budget, resource);
  out.expanded = apply_widths(out.pruned, out.multiplier.widths);
  return out;
}

void MorphConfig::check() const {
  if (budget && *budget <= 0) throw ConfigError("budget must be positive");
  if (lambdas.empty()) throw ConfigError("at least one lambda is required");
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambdas must be positive and finite");
  }
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (probe_steps < 1) throw ConfigError("probe_steps must be >= 1");
  if (parallel < 1) throw ConfigError("parallel must be >= 1");
  shrink.check();
  retrain.check();
}

double effective_lambda(const NetworkSpec& seed, const MorphConfig& config, double lambda) {
  if (!config.normalize_lambda) return lambda;
  const Count cost = network_cost(seed, config.resource).total;
  return cost > 0 ? lambda / static_cast<double>(cost) : lambda;
}

const Candidate* MorphHistory::final_candidate() const {
  for (auto it = iterations.rbegin(); it != iterations.rend(); ++it) {
    if (const Candidate* c = it->chosen()) return c;
  }
  return nullptr;
}

namespace {

struct IterationContext {
  const NetworkSpec* seed;
  const DataSource* data;
  const MorphConfig* config;
  Count budget;
  std::uint64_t shrink_seed;
  std::uint64_t retrain_seed;
};

Candidate run_candidate(const IterationContext& ctx, double lambda) {
  const MorphConfig& cfg = *ctx.config;
  Candidate c;
  c.lambda = lambda;
  c.effective_lambda = effective_lambda(*ctx.seed, cfg, lambda);
  try {
    TrainConfig sc = cfg.shrink;
    sc.lambda = c.effective_lambda;
    sc.tau = cfg.tau;
    sc.resource = cfg.resource;
    sc.seed = ctx.shrink_seed;
    ShrinkResult s = shrink(*ctx.seed, *ctx.data, sc);
    c.shrunk = s.widths;
    c.gap_ratio = s.gap.ratio;
    c.shrunk_cost = projected_cost(*ctx.seed, s.gammas, cfg.resource, cfg.tau).total;
    c.shrink_history = std::move(s.history);

    Expansion e = expand(*ctx.seed, c.shrunk, ctx.budget, cfg.resource);
    c.omega_numerator = e.multiplier.numerator;
    c.omega_denominator = e.multiplier.denominator;
    c.omega = e.multiplier.omega;
    c.expanded = std::move(e.expanded);
    c.flops = network_cost(c.expanded, Resource::kFlops).total;
    c.size = network_cost(c.expanded, Resource::kModelSize).total;
    c.cost = cfg.resource == Resource::kFlops ? c.flops : c.size;

    TrainConfig rc = cfg.retrain;
    rc.lambda = 0.0;
    rc.tau = cfg.tau;
    rc.resource = cfg.resource;
    rc.seed = ctx.retrain_seed;
    TrainResult r = train(c.expanded, *ctx.data, rc);
    c.retrain_history = std::move(r.history);
    c.accuracy = evaluate(c.expanded, r.params, ctx.data->eval_set());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    c.error = error_kind(e) + ": " + e.what();
  }
  return c;
}

std::vector<Candidate> run_sweep(const IterationContext& ctx) {
  const std::vector<double>& lambdas = ctx.config->lambdas;
  std::vector<Candidate> out(lambdas.size());
  const int workers = std::min<int>(ctx.config->parallel, static_cast<int>(lambdas.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = run_candidate(ctx, lambdas[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(lambdas.size());
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < lambdas.size(); i = next++) {
        try {
          out[i] = run_candidate(ctx, lambdas[i]);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

int select_candidate(const std::vector<Candidate>& candidates) {
  int best = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    if (!c.ok()) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const Candidate& b = candidates[static_cast<std::size_t>(best)];
    if (c.accuracy > b.accuracy || (c.accuracy == b.accuracy && c.cost < b.cost)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

MorphHistory morphnet_run(const NetworkSpec& seed, const DataSource& data,
                          const MorphConfig& config) {
  config.check();
  require_valid(seed);

  MorphHistory history;
  history.resource = config.resource;
  history.tau = config.tau;
  history.seed = seed;
  history.seed_flops = network_cost(seed, Resource::kFlops).total;
  history.seed_size = network_cost(seed, Resource::kModelSize).total;
  history.budget = config.budget.value_or(network_cost(seed, config.resource).total);
  // Surfaces degenerate and infeasible budgets before any training.
  max_width_multiplier(seed, history.budget, config.resource);

  // Baseline and every retrain share one seed, so accuracy differences come
  // from the widths rather than from the minibatch order.
  if (config.baseline) {
    TrainConfig rc = config.retrain;
    rc.lambda = 0.0;
    rc.tau = config.tau;
    rc.resource = config.resource;
    rc.seed = mix_seed(config.seed, 0, 1);
    TrainResult r = train(seed, data, rc);
    history.baseline_accuracy = evaluate(seed, r.params, data.eval_set());
  }

  NetworkSpec current = seed;
  for (int it = 1; it <= config.iterations; ++it) {
    IterationRecord record;
    record.iteration = it;
    record.seed_widths = current.widths();
    record.seed_cost = network_cost(current, config.resource).total;

    const IterationContext ctx{&current, &data, &config, history.budget,
                               mix_seed(config.seed, static_cast<std::uint64_t>(it), 0),
                               mix_seed(config.seed, 0, 1)};
    record.candidates = run_sweep(ctx);
    record.selected = select_candidate(record.candidates);
    history.iterations.push_back(record);

    const Candidate* chosen = history.iterations.back().chosen();
    if (chosen == nullptr) {
      history.aborted = true;
      break;
    }
    if (chosen->expanded == current) {
      history.converged = true;
      break;
    }
    current = chosen->expanded;
  }
  return history;
}

std::string_view to_string(ProbeVerdict verdict) {
  switch (verdict) {
    case ProbeVerdict::kTooLarge: return "too_large";
    case ProbeVerdict::kTooSmall: return "too_small";
    case ProbeVerdict::kUsable: return "usable";
  }
  return "unknown";
}

ProbeResult lambda_probe(const NetworkSpec& net, const DataSource& data, const TrainConfig& config,
                         long probe_steps, ProbeThresholds thresholds) {
  if (probe_steps < 1) throw ConfigError("probe_steps must be >= 1");
  ProbeResult out;
  out.seed_cost = network_cost(net, config.resource).total;
  TrainConfig pc = config;
  pc.steps = probe_steps;
  pc.eval_every = probe_steps;
  try {
    TrainResult r = train(net, data, pc);
    out.final_cost = projected_cost(net, gamma_state(net, r.params), config.resource, config.tau).total;
  } catch (const DivergenceError&) {
    out.diverged = true;
    out.verdict = ProbeVerdict::kTooLarge;
    return out;
  }
  const double seed = static_cast<double>(out.seed_cost);
  const double final_cost = static_cast<double>(out.final_cost);
  if (final_cost < thresholds.collapse * seed) {
    out.verdict = ProbeVerdict::kTooLarge;
  } else if (seed - final_cost < thresholds.stall * seed) {
    out.verdict = ProbeVerdict::kTooSmall;
  } else {
    out.verdict = ProbeVerdict::kUsable;
  }
  return out;
}

}  // namespace morphnet
