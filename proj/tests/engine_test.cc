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

#include "morphnet/engine.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "morphnet/error.h"
#include "support/gradcheck.h"
#include "support/test_nets.h"

namespace morphnet {
namespace {

using test::conv;
using test::dense;
using test::logits;
using test::make_net;

Batch random_batch(const NetworkSpec& net, int n, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  Batch b;
  b.n = n;
  b.shape = net.input;
  b.inputs.resize(static_cast<std::size_t>(n) * b.example_size());
  for (float& x : b.inputs) x = dist(rng);
  for (int i = 0; i < n; ++i) b.labels.push_back(i % classes);
  return b;
}

TEST(Backward, Fixtures) {
  int i = 0;
  for (const NetworkSpec& net : test::gradient_fixtures()) {
    EXPECT_LT(test::gradient_check(net, static_cast<std::uint64_t>(++i)), 1e-3) << "fixture " << i;
  }
}

TEST(Backward, RandomTinyNets) {
  std::mt19937_64 rng(41);
  test::RandomNetOptions opts;
  opts.max_width = 3;
  opts.max_spatial = 4;
  opts.max_blocks = 3;
  for (int t = 0; t < 20; ++t) {
    const NetworkSpec net = test::random_net(rng, opts);
    EXPECT_LT(test::gradient_check(net, static_cast<std::uint64_t>(100 + t)), 1e-3) << "net " << t;
  }
}

TEST(InitParams, Deterministic) {
  std::mt19937_64 rng(43);
  const NetworkSpec net = test::random_net(rng);
  const ParamSet<float> a = init_params<float>(net, 9);
  EXPECT_EQ(a, init_params<float>(net, 9));
  EXPECT_NE(a.layers[0].weight, init_params<float>(net, 10).layers[0].weight);
}

TEST(InitParams, UnitGammasGiveTwiceFullCost) {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 20; ++t) {
    const NetworkSpec net = test::random_net(rng);
    const GammaState g = gamma_state(net, init_params<float>(net, 1));
    for (const auto& layer : g.values) {
      for (double v : layer) EXPECT_EQ(v, 1.0);
    }
    const double expected = 2.0 * static_cast<double>(network_cost(net, Resource::kFlops).total);
    EXPECT_NEAR(reg_value(net, g, Resource::kFlops).total, expected, 1e-9 * expected);
  }
}

TEST(ForwardLoss, UniformLogits) {
  const NetworkSpec net = make_net({1, 1, 3}, {dense("a", 4, {"input"}), logits("out", 5, {"a"})});
  ParamSet<float> p = init_params<float>(net, 1).zeros_like();
  p.layers[0].moving_var.assign(4, 1.0f);
  p.layers[0].moving_mean.assign(4, 0.0f);
  p.layers[1].moving_var.clear();
  const Batch batch = random_batch(net, 6, 5, 3);
  EXPECT_NEAR(forward_loss(net, p, batch, Mode::kTrain).loss, std::log(5.0f), 1e-6);
  EXPECT_NEAR(forward_loss(net, p, batch, Mode::kEval).loss, std::log(5.0f), 1e-6);
}

TEST(ForwardLoss, BatchNormHandValue) {
  const NetworkSpec net = make_net({1, 1, 1}, {dense("a", 1, {"input"}), logits("out", 1, {"a"})});
  ParamSet<double> p = convert_params<double>(init_params<float>(net, 1));
  p.layers[0].weight = {1.0};
  p.layers[0].gamma = {1.0};
  p.layers[0].beta = {5.0};
  p.layers[1].weight = {1.0};
  p.layers[1].beta = {0.0};
  Batch batch;
  batch.n = 2;
  batch.shape = net.input;
  batch.inputs = {1.0f, 3.0f};
  batch.labels = {0, 0};
  const ForwardResult<double> r = forward_loss(net, p, batch, Mode::kTrain);
  const double s = 1.0 / std::sqrt(1.0 + kBatchNormEpsilon);
  EXPECT_NEAR(r.logits[0], 5.0 - s, 1e-12);
  EXPECT_NEAR(r.logits[1], 5.0 + s, 1e-12);
  // Moving averages moved toward the batch statistics (mean 2, var 1).
  EXPECT_NEAR(p.layers[0].moving_mean[0], (1 - kMovingAverageDecay) * 2.0, 1e-12);
}

TEST(ForwardLoss, BatchNormOutputStatistics) {
  const int width = 3;
  const NetworkSpec net = make_net({1, 1, 4}, {dense("a", width, {"input"}), logits("out", width, {"a"})});
  ParamSet<double> p = convert_params<double>(init_params<float>(net, 5));
  p.layers[0].gamma = {0.5, -0.25, 1.5};
  p.layers[0].beta = {10.0, 8.0, 20.0};
  // Identity readout so logits are the batch-norm outputs (ReLU is inactive
  // at these shifts).
  p.layers[1].weight.assign(width * width, 0.0);
  for (int c = 0; c < width; ++c) p.layers[1].weight[static_cast<std::size_t>(c * width + c)] = 1.0;
  const Batch batch = random_batch(net, 64, width, 7);
  const ForwardResult<double> r = forward_loss(net, p, batch, Mode::kTrain);
  for (int c = 0; c < width; ++c) {
    double mean = 0.0;
    for (int b = 0; b < batch.n; ++b) mean += r.logits[static_cast<std::size_t>(b * width + c)];
    mean /= batch.n;
    double var = 0.0;
    for (int b = 0; b < batch.n; ++b) {
      const double d = r.logits[static_cast<std::size_t>(b * width + c)] - mean;
      var += d * d;
    }
    var /= batch.n;
    EXPECT_NEAR(mean, p.layers[0].beta[static_cast<std::size_t>(c)], 1e-3);
    EXPECT_NEAR(std::sqrt(var), std::abs(p.layers[0].gamma[static_cast<std::size_t>(c)]), 1e-3);
  }
}

TEST(ForwardLoss, BatchShapeMismatch) {
  const NetworkSpec net = test::toy_chain();
  ParamSet<float> p = init_params<float>(net, 1);
  Batch batch = random_batch(net, 2, 2, 1);
  batch.shape.channels = 4;
  batch.inputs.resize(8);
  EXPECT_THROW(forward_loss(net, p, batch, Mode::kTrain), DimensionError);
}

TrainConfig prox_config(double lambda) {
  TrainConfig c;
  c.lambda = lambda;
  c.learning_rate = 0.1;
  c.momentum = 0.9;
  return c;
}

TEST(ProxStep, LambdaZeroIsMomentumSgd) {
  const NetworkSpec net = test::toy_chain();
  ParamSet<float> p = init_params<float>(net, 3);
  ParamSet<float> v = p.zeros_like();
  const Batch batch = random_batch(net, 8, 2, 3);
  const ParamSet<float> g = backward(net, p, batch);
  for (auto& layer : v.layers) {
    for (float& x : layer.weight) x = 0.25f;
  }
  ParamSet<float> expected = p;
  ParamSet<float> expected_v = v;
  const float lr = 0.1f;
  const float mu = 0.9f;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto step = [&](std::vector<float>& w, std::vector<float>& vel, const std::vector<float>& d) {
      for (std::size_t k = 0; k < w.size(); ++k) {
        vel[k] = mu * vel[k] + d[k];
        w[k] -= lr * vel[k];
      }
    };
    step(expected.layers[i].weight, expected_v.layers[i].weight, g.layers[i].weight);
    step(expected.layers[i].gamma, expected_v.layers[i].gamma, g.layers[i].gamma);
    step(expected.layers[i].beta, expected_v.layers[i].beta, g.layers[i].beta);
  }
  prox_step(p, v, g, GammaState::constant(net, 0.0), prox_config(0.0));
  EXPECT_EQ(p, expected);
  EXPECT_EQ(v, expected_v);
}

TEST(ProxStep, SoftThreshold) {
  const NetworkSpec net = test::toy_chain();
  ParamSet<float> p = init_params<float>(net, 3);
  ParamSet<float> v = p.zeros_like();
  const ParamSet<float> zero = p.zeros_like();
  p.layers[0].gamma = {0.001f, 1.0f, -1.0f, 0.0f};
  GammaState coeff = GammaState::constant(net, 0.0);
  coeff.values[0] = {0.1, 0.3, 0.3, 0.3};
  // Threshold lr * lambda * c: 0.01 for channel 0, 0.03 elsewhere.
  prox_step(p, v, zero, coeff, prox_config(1.0));
  EXPECT_EQ(p.layers[0].gamma[0], 0.0f);
  EXPECT_EQ(p.layers[0].gamma[1], 1.0f - static_cast<float>(0.1 * 1.0 * 0.3));
  EXPECT_EQ(p.layers[0].gamma[2], -(1.0f - static_cast<float>(0.1 * 1.0 * 0.3)));
  EXPECT_EQ(p.layers[0].gamma[3], 0.0f);
}

TEST(ProxStep, ZerosAreAbsorbing) {
  const NetworkSpec net = test::toy_chain();
  ParamSet<float> p = init_params<float>(net, 3);
  ParamSet<float> v = p.zeros_like();
  const ParamSet<float> zero = p.zeros_like();
  p.layers[0].gamma = {0.02f, 0.5f, 0.0f, 0.004f};
  const GammaState coeff = GammaState::constant(net, 1.0);
  for (int step = 0; step < 50; ++step) {
    const std::vector<float> before = p.layers[0].gamma;
    prox_step(p, v, zero, coeff, prox_config(0.05));
    for (std::size_t j = 0; j < before.size(); ++j) {
      if (before[j] == 0.0f) EXPECT_EQ(p.layers[0].gamma[j], 0.0f);
    }
  }
  EXPECT_EQ(p.layers[0].gamma[0], 0.0f);
}

std::unique_ptr<DataSource> two_blobs(std::uint64_t seed) {
  DataConfig d;
  d.kind = "blobs";
  d.classes = 2;
  d.dims = 2;
  d.noise = 0.3;
  d.spread = 3.0;
  d.train_size = 400;
  d.eval_size = 400;
  d.seed = seed;
  return make_data_source(d);
}

TEST(Train, SeparableBlobs) {
  const NetworkSpec net = make_net({1, 1, 2}, {dense("fc", 8, {"input"}), logits("out", 2, {"fc"})});
  const auto data = two_blobs(3);
  TrainConfig c;
  c.steps = 300;
  c.eval_every = 100;
  const TrainResult r = train(net, *data, c);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_GE(r.history.back().accuracy, 0.95);
  EXPECT_DOUBLE_EQ(evaluate(net, r.params, data->eval_set()), r.history.back().accuracy);
  EXPECT_EQ(evaluate(net, r.params, data->train_set()), evaluate(net, r.params, data->train_set()));

  const TrainResult again = train(net, *data, c);
  EXPECT_EQ(again.params, r.params);
  ASSERT_EQ(again.history.size(), r.history.size());
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    EXPECT_EQ(again.history[i].loss, r.history[i].loss);
    EXPECT_EQ(again.history[i].accuracy, r.history[i].accuracy);
  }
}

TEST(Train, RegularizedCostFallsThenPlateaus) {
  const NetworkSpec net = make_net({1, 1, 2}, {dense("fc1", 32, {"input"}), dense("fc2", 32, {"fc1"}),
                                               logits("out", 2, {"fc2"})});
  const auto data = two_blobs(5);
  TrainConfig c;
  c.lambda = 1.0 / static_cast<double>(network_cost(net, Resource::kFlops).total);
  c.steps = 4000;
  c.eval_every = 200;
  c.weight_decay = 5e-4;
  const TrainResult r = train(net, *data, c);
  const Count seed = network_cost(net, Resource::kFlops).total;
  const Count last = r.history.back().projected_flops;
  EXPECT_LT(last, seed / 2);
  // Channels hovering at the threshold can flicker back on; bound the rebound.
  Count low = seed;
  for (const TrainRecord& h : r.history) {
    EXPECT_LE(h.projected_flops, low + seed / 8) << "step " << h.step;
    low = std::min(low, h.projected_flops);
  }
  // Final quarter moves by at most 5% of the total drop.
  const std::size_t q = r.history.size() * 3 / 4;
  EXPECT_LE(r.history[q].projected_flops - last, std::max<Count>((seed - last) / 20, 1));
  EXPECT_GE(r.history.back().accuracy, 0.95);
}

TEST(Train, NonFiniteLossAborts) {
  const NetworkSpec net = test::toy_chain();
  Batch b;
  b.n = 4;
  b.shape = net.input;
  b.inputs.assign(12, std::numeric_limits<float>::infinity());
  b.labels = {0, 1, 0, 1};
  const PooledDataSource data(b, b, 2);
  TrainConfig c;
  c.steps = 5;
  try {
    train(net, data, c);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(Train, ConfigChecks) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.check(), ConfigError);
  c = TrainConfig{};
  c.lambda = -1.0;
  EXPECT_THROW(c.check(), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.check(), ConfigError);
}

TEST(Evaluate, ConstantPredictor) {
  DataConfig d;
  d.kind = "blobs";
  d.classes = 4;
  d.dims = 3;
  d.eval_size = 2000;
  const auto data = make_data_source(d);
  const NetworkSpec net = make_net({1, 1, 3}, {dense("a", 4, {"input"}), logits("out", 4, {"a"})});
  ParamSet<float> p = init_params<float>(net, 1);
  p.layers[1].weight.assign(p.layers[1].weight.size(), 0.0f);
  EXPECT_NEAR(evaluate(net, p, data->eval_set()), 0.25, 0.02);
  EXPECT_THROW(evaluate(net, p, Batch{}), ConfigError);
}

TEST(Evaluate, MemorizesSmallTrainSet) {
  DataConfig d;
  d.kind = "blobs";
  d.classes = 3;
  d.dims = 4;
  d.noise = 0.2;
  d.train_size = 60;
  d.eval_size = 60;
  const auto data = make_data_source(d);
  const NetworkSpec net = make_net({1, 1, 4}, {dense("a", 16, {"input"}), logits("out", 3, {"a"})});
  TrainConfig c;
  c.steps = 500;
  c.eval_every = 500;
  const TrainResult r = train(net, *data, c);
  EXPECT_EQ(evaluate(net, r.params, data->train_set()), 1.0);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(53);
  const NetworkSpec net = test::random_net(rng);
  ParamSet<float> p = init_params<float>(net, 4);
  p.layers[0].beta[0] = 0.1f;
  const std::string text = serialize_checkpoint(net, p);
  EXPECT_EQ(parse_checkpoint(net, text), p);
  EXPECT_THROW(parse_checkpoint(net, "{"), ParseError);

  NetworkSpec other = net;
  other.layers[0].out_width += 1;
  recompute_in_widths(other);
  EXPECT_THROW(parse_checkpoint(other, text), DimensionError);
}

TEST(HistoryCsv, Columns) {
  TrainRecord r;
  r.step = 10;
  r.loss = 0.5;
  r.reg_value = 2.0;
  r.projected_flops = 100;
  r.projected_size = 7;
  r.accuracy = 0.75;
  EXPECT_EQ(history_csv({r}),
            "step,loss,reg_value,projected_flops,accuracy,projected_size\n10,0.5,2,100,0.75,7\n");
}

}  // namespace
}  // namespace morphnet
