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

#ifndef MORPHNET_MORPHNET_H_
#define MORPHNET_MORPHNET_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morphnet/cost_model.h"
#include "morphnet/data.h"
#include "morphnet/engine.h"
#include "morphnet/netgraph.h"
#include "morphnet/regularizer.h"

namespace morphnet {

using Widths = std::map<std::string, int>;

struct ShrinkResult {
  Widths widths;  // alive counts, non-final layers
  GammaState gammas;
  GammaGap gap;
  std::vector<TrainRecord> history;
};

// Regularized training followed by alive-count extraction. `config.lambda`
// must be positive. Throws AllDeadError if no prunable channel survives or
// the survivors no longer connect the input to the final layer.
ShrinkResult shrink(const NetworkSpec& net, const DataSource& data, const TrainConfig& config);

struct Expansion {
  NetworkSpec pruned;    // apply_widths(net, widths)
  NetworkSpec expanded;  // pruned net scaled by the multiplier
  WidthMultiplier multiplier;
};

// Prunes `net` to `widths`, then grows it uniformly to the largest width
// multiplier that fits `budget`.
Expansion expand(const NetworkSpec& net, const Widths& widths, Count budget, Resource resource);

struct MorphConfig {
  // nullopt: the seed network's own cost.
  std::optional<Count> budget;
  Resource resource = Resource::kFlops;
  std::vector<double> lambdas{1.0};
  // Divide each lambda by the seed cost before training, so that one value
  // means roughly the same pressure across resources and network sizes.
  bool normalize_lambda = true;
  int iterations = 1;
  double tau = kDefaultAliveThreshold;
  TrainConfig shrink;
  TrainConfig retrain;
  long probe_steps = 200;
  // Also retrain the seed network and record its accuracy.
  bool baseline = true;
  std::uint64_t seed = 1;
  // Worker threads for the lambda sweep.
  int parallel = 1;
  DataConfig data;

  void check() const;
};

// Lambda handed to the engine for a nominal `lambda`.
double effective_lambda(const NetworkSpec& seed, const MorphConfig& config, double lambda);

// One lambda of one iteration.
struct Candidate {
  double lambda = 0.0;
  double effective_lambda = 0.0;
  // Empty on success; otherwise one of "all_dead", "infeasible",
  // "divergence", "graph", followed by ": " and the message.
  std::string error;

  Widths shrunk;
  Count shrunk_cost = 0;  // masked cost at the end of shrinking
  double gap_ratio = 0.0;
  std::vector<TrainRecord> shrink_history;

  std::int64_t omega_numerator = 0;
  std::int64_t omega_denominator = 1;
  double omega = 0.0;
  NetworkSpec expanded;
  Count flops = 0;
  Count size = 0;
  Count cost = 0;  // in the configured resource
  std::vector<TrainRecord> retrain_history;
  double accuracy = 0.0;

  bool ok() const { return error.empty(); }
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  Widths seed_widths;
  Count seed_cost = 0;
  std::vector<Candidate> candidates;
  int selected = -1;  // index into candidates, -1 if every candidate failed

  const Candidate* chosen() const {
    return selected < 0 ? nullptr : &candidates[static_cast<std::size_t>(selected)];
  }
};

struct MorphHistory {
  Resource resource = Resource::kFlops;
  Count budget = 0;
  double tau = kDefaultAliveThreshold;
  NetworkSpec seed;
  Count seed_flops = 0;
  Count seed_size = 0;
  std::optional<double> baseline_accuracy;
  std::vector<IterationRecord> iterations;
  // Stopped because an iteration reproduced its seed widths.
  bool converged = false;
  // Stopped because every candidate of the last iteration failed.
  bool aborted = false;

  // The selected candidate of the last successful iteration.
  const Candidate* final_candidate() const;
};

// Shrink, expand and retrain from scratch, `iterations` times, each round
// seeded with the previous expanded network. When several lambdas are given
// every one is tried and the best retrain accuracy wins (ties: lower cost).
// Throws the budget errors of max_width_multiplier up front if the seed's
// topology cannot fit the budget at all.
MorphHistory morphnet_run(const NetworkSpec& seed, const DataSource& data,
                          const MorphConfig& config);

enum class ProbeVerdict { kTooLarge, kTooSmall, kUsable };
std::string_view to_string(ProbeVerdict verdict);

struct ProbeThresholds {
  double collapse = 0.05;  // projected cost below this fraction of the seed
  double stall = 0.02;     // drop smaller than this fraction of the seed
};

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::kTooSmall;
  Count seed_cost = 0;
  Count final_cost = 0;
  bool diverged = false;
};

// Truncated shrink run classifying `config.lambda` from the projected cost
// after `probe_steps` steps. Divergence counts as too large.
ProbeResult lambda_probe(const NetworkSpec& net, const DataSource& data, const TrainConfig& config,
                         long probe_steps, ProbeThresholds thresholds = {});

// Configuration document (JSON):
//
//   {
//     "budget": "seed" | <count>,
//     "resource": "flops" | "model_size",
//     "lambdas": [0.5, 2.0],
//     "normalize_lambda": true,
//     "iterations": 2,
//     "tau": 0.01,
//     "seed": 7,
//     "baseline": true,
//     "probe_steps": 200,
//     "parallel": 1,
//     "shrink":  {"learning_rate": .., "momentum": .., "batch_size": ..,
//                 "steps": .., "eval_every": .., "weight_decay": ..},
//     "retrain": { same keys },
//     "data": {"kind": "blobs", "classes": 2, ...}
//   }
//
// Every key is optional. Throws ParseError or ConfigError.
MorphConfig parse_morph_config(std::string_view text);
std::string serialize_morph_config(const MorphConfig& config);

// Full history as JSON; parse_history inverts it.
std::string serialize_history(const MorphHistory& history);
MorphHistory parse_history(std::string_view text);

// Human-readable per-iteration summary table.
std::string history_report(const MorphHistory& history);

// Training curves of every candidate:
// iteration,lambda,phase,step,loss,reg_value,projected_flops,projected_size,accuracy
std::string history_curves_csv(const MorphHistory& history);

// Cost vs accuracy, sorted by cost ascending. Columns:
// iteration,lambda,omega,flops,size,cost,accuracy. With `selected_only`, one
// row per iteration (the chosen candidate); otherwise every successful
// candidate of the sweep.
std::string tradeoff_csv(const MorphHistory& history, bool selected_only);

// Widths of one iteration (1-based): layer,seed,shrunk,expanded. Layers
// removed by pruning read 0.
std::string width_profile_csv(const MorphHistory& history, int iteration);

}  // namespace morphnet

#endif  // MORPHNET_MORPHNET_H_
