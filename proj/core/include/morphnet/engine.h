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

#ifndef MORPHNET_ENGINE_H_
#define MORPHNET_ENGINE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "morphnet/cost_model.h"
#include "morphnet/data.h"
#include "morphnet/netgraph.h"
#include "morphnet/regularizer.h"

namespace morphnet {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kMovingAverageDecay = 0.99;

template <typename T>
struct LayerParams {
  // filter_h x filter_w x in_width x out_width, output channel fastest.
  std::vector<T> weight;
  std::vector<T> gamma;  // empty for the final layer
  // Batch-norm shift; for the final layer, the logit bias.
  std::vector<T> beta;
  std::vector<T> moving_mean;
  std::vector<T> moving_var;

  bool operator==(const LayerParams&) const = default;
};

// Trainable parameters and batch-norm statistics, aligned with
// NetworkSpec::layers. Also used for gradients and momentum buffers, where
// the moving statistics are left empty.
template <typename T>
struct ParamSet {
  std::vector<LayerParams<T>> layers;

  bool operator==(const ParamSet&) const = default;
  // Same shape, every trainable entry zero, statistics empty.
  ParamSet zeros_like() const;
};

template <typename T>
ParamSet<T> init_params(const NetworkSpec& net, std::uint64_t seed);

// Element-type conversion; used to run gradient checks in double.
template <typename To, typename From>
ParamSet<To> convert_params(const ParamSet<From>& params);

template <typename T>
GammaState gamma_state(const NetworkSpec& net, const ParamSet<T>& params);

enum class Mode { kTrain, kEval };

template <typename T>
struct ForwardResult {
  T loss = 0;
  std::vector<T> logits;  // n x num_classes
};

// Softmax cross-entropy averaged over the batch. Train mode normalizes with
// batch statistics and updates the moving averages in `params`; eval mode
// uses the moving averages and leaves `params` untouched.
template <typename T>
ForwardResult<T> forward_loss(const NetworkSpec& net, ParamSet<T>& params, const Batch& batch,
                              Mode mode);

// Same as train-mode forward_loss but without touching the moving averages.
template <typename T>
T train_loss(const NetworkSpec& net, const ParamSet<T>& params, const Batch& batch);

// Exact gradient of the train-mode data loss.
template <typename T>
ParamSet<T> backward(const NetworkSpec& net, const ParamSet<T>& params, const Batch& batch);

struct TrainConfig {
  double lambda = 0.0;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 32;
  long steps = 1000;
  double tau = kDefaultAliveThreshold;
  std::uint64_t seed = 1;
  Resource resource = Resource::kFlops;
  long eval_every = 100;
  // Optional L2 on weights, off by default.
  double weight_decay = 0.0;

  // Throws ConfigError on out-of-range values.
  void check() const;
};

// One momentum-SGD step on every parameter using `data_grads`, followed by a
// soft-threshold of each gamma by learning_rate * lambda * coefficient, where
// `reg_coefficients` holds the unsigned per-gamma regularizer weights. Exact
// zeros stay zero when the data gradient and velocity vanish.
template <typename T>
void prox_step(ParamSet<T>& params, ParamSet<T>& velocity, const ParamSet<T>& data_grads,
               const GammaState& reg_coefficients, const TrainConfig& config);

struct TrainRecord {
  long step = 0;
  double loss = 0.0;       // minibatch data loss at this step
  double reg_value = 0.0;  // G at the current gammas (lambda not applied)
  Count projected_flops = 0;
  Count projected_size = 0;
  double accuracy = 0.0;   // on the evaluation pool
};

struct TrainResult {
  ParamSet<float> params;
  std::vector<TrainRecord> history;
};

// Minibatch loop minimizing data loss + lambda * G. Records a history row
// every eval_every steps and at the final step. Throws DivergenceError on a
// non-finite loss.
TrainResult train(const NetworkSpec& net, const DataSource& data, const TrainConfig& config);

// Fraction of correctly classified examples, eval mode.
double evaluate(const NetworkSpec& net, const ParamSet<float>& params, const Batch& eval_set);

// Checkpoint document (JSON) with an explicit shape header per tensor.
std::string serialize_checkpoint(const NetworkSpec& net, const ParamSet<float>& params);
ParamSet<float> parse_checkpoint(const NetworkSpec& net, std::string_view text);

// CSV with columns step,loss,reg_value,projected_flops,accuracy,projected_size.
std::string history_csv(const std::vector<TrainRecord>& history);

}  // namespace morphnet

#endif  // MORPHNET_ENGINE_H_
