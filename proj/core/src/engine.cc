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

#include <algorithm>
#include <cmath>
#include <random>

#include "morphnet/error.h"

namespace morphnet {

template <typename T>
ParamSet<T> ParamSet<T>::zeros_like() const {
  ParamSet<T> out;
  out.layers.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.layers[i].weight.assign(layers[i].weight.size(), T(0));
    out.layers[i].gamma.assign(layers[i].gamma.size(), T(0));
    out.layers[i].beta.assign(layers[i].beta.size(), T(0));
  }
  return out;
}

template <typename T>
ParamSet<T> init_params(const NetworkSpec& net, std::uint64_t seed) {
  require_valid(net);
  std::mt19937_64 rng(seed);
  ParamSet<T> params;
  params.layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    LayerParams<T>& p = params.layers[i];
    const bool last = i + 1 == net.layers.size();
    const std::size_t fan_in = static_cast<std::size_t>(layer.filter_h) * layer.filter_w * layer.in_width;
    const std::size_t count = fan_in * static_cast<std::size_t>(layer.out_width);
    const double stddev = fan_in == 0 ? 0.0 : std::sqrt((last ? 1.0 : 2.0) / static_cast<double>(fan_in));
    std::normal_distribution<double> dist(0.0, 1.0);
    p.weight.resize(count);
    for (T& w : p.weight) w = static_cast<T>(stddev * dist(rng));
    const std::size_t out = static_cast<std::size_t>(layer.out_width);
    p.beta.assign(out, T(0));
    if (!last) {
      p.gamma.assign(out, T(1));
      p.moving_mean.assign(out, T(0));
      p.moving_var.assign(out, T(1));
    }
  }
  return params;
}

template <typename To, typename From>
ParamSet<To> convert_params(const ParamSet<From>& params) {
  auto cast = [](const std::vector<From>& v) { return std::vector<To>(v.begin(), v.end()); };
  ParamSet<To> out;
  for (const LayerParams<From>& p : params.layers) {
    out.layers.push_back({cast(p.weight), cast(p.gamma), cast(p.beta), cast(p.moving_mean),
                          cast(p.moving_var)});
  }
  return out;
}

template <typename T>
GammaState gamma_state(const NetworkSpec& net, const ParamSet<T>& params) {
  GammaState state;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    state.layer_ids.push_back(net.layers[i].id);
    const auto& g = params.layers[i].gamma;
    state.values.emplace_back(g.begin(), g.end());
  }
  return state;
}

void TrainConfig::check() const {
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (tau < 0.0) throw ConfigError("tau must be >= 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

namespace {

struct Geometry {
  int in_h = 1, in_w = 1, in_c = 0;
  int out_h = 1, out_w = 1, out_c = 0;
  int fh = 1, fw = 1, stride = 1;
  int pad_top = 0, pad_left = 0;
  bool dense = false;
  bool pooled = false;  // dense layer averaging a spatial input
};

struct Plan {
  Topology topo;
  std::vector<Geometry> geo;
};

Plan make_plan(const NetworkSpec& net) {
  Plan plan;
  const SpatialMap spatial = spatial_shapes(net);
  plan.topo = build_topology(net);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    const SpatialDims& s = spatial.layers[i];
    Geometry g;
    g.in_c = layer.in_width;
    g.out_c = layer.out_width;
    if (layer.kind == LayerKind::kDense) {
      g.dense = true;
      g.pooled = s.in_h * s.in_w > 1;
      g.in_h = s.in_h;
      g.in_w = s.in_w;
    } else {
      g.in_h = s.in_h;
      g.in_w = s.in_w;
      g.out_h = s.out_h;
      g.out_w = s.out_w;
      g.fh = layer.filter_h;
      g.fw = layer.filter_w;
      g.stride = layer.stride;
      const int pad_h = std::max((g.out_h - 1) * g.stride + g.fh - g.in_h, 0);
      const int pad_w = std::max((g.out_w - 1) * g.stride + g.fw - g.in_w, 0);
      g.pad_top = pad_h / 2;
      g.pad_left = pad_w / 2;
    }
    plan.geo.push_back(g);
  }
  return plan;
}

// Convolution on the geometry's (possibly pooled) input; dense layers run as
// 1x1 convolutions on a 1x1 map.
struct ConvShape {
  int in_h, in_w, in_c, out_h, out_w, out_c, fh, fw, stride, pad_top, pad_left;
};

ConvShape conv_shape(const Geometry& g) {
  if (g.dense) return {1, 1, g.in_c, 1, 1, g.out_c, 1, 1, 1, 0, 0};
  return {g.in_h, g.in_w, g.in_c, g.out_h, g.out_w, g.out_c, g.fh, g.fw, g.stride, g.pad_top, g.pad_left};
}

template <typename T>
void conv_forward(const ConvShape& s, int n, const T* x, const T* w, T* y) {
  std::fill(y, y + static_cast<std::size_t>(n) * s.out_h * s.out_w * s.out_c, T(0));
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        T* out = y + ((static_cast<std::size_t>(b) * s.out_h + oy) * s.out_w + ox) * s.out_c;
        for (int fy = 0; fy < s.fh; ++fy) {
          const int iy = oy * s.stride + fy - s.pad_top;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int fx = 0; fx < s.fw; ++fx) {
            const int ix = ox * s.stride + fx - s.pad_left;
            if (ix < 0 || ix >= s.in_w) continue;
            const T* in = x + ((static_cast<std::size_t>(b) * s.in_h + iy) * s.in_w + ix) * s.in_c;
            const T* wk = w + (static_cast<std::size_t>(fy) * s.fw + fx) * s.in_c * s.out_c;
            for (int c = 0; c < s.in_c; ++c) {
              const T v = in[c];
              if (v == T(0)) continue;
              const T* wr = wk + static_cast<std::size_t>(c) * s.out_c;
              for (int o = 0; o < s.out_c; ++o) out[o] += v * wr[o];
            }
          }
        }
      }
    }
  }
}

// Accumulates into dw and (if non-null) dx.
template <typename T>
void conv_backward(const ConvShape& s, int n, const T* x, const T* w, const T* dy, T* dx, T* dw) {
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        const T* d = dy + ((static_cast<std::size_t>(b) * s.out_h + oy) * s.out_w + ox) * s.out_c;
        for (int fy = 0; fy < s.fh; ++fy) {
          const int iy = oy * s.stride + fy - s.pad_top;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int fx = 0; fx < s.fw; ++fx) {
            const int ix = ox * s.stride + fx - s.pad_left;
            if (ix < 0 || ix >= s.in_w) continue;
            const std::size_t at = ((static_cast<std::size_t>(b) * s.in_h + iy) * s.in_w + ix) * s.in_c;
            const std::size_t k = (static_cast<std::size_t>(fy) * s.fw + fx) * s.in_c * s.out_c;
            for (int c = 0; c < s.in_c; ++c) {
              const T v = x[at + c];
              const T* wr = w + k + static_cast<std::size_t>(c) * s.out_c;
              T* dwr = dw + k + static_cast<std::size_t>(c) * s.out_c;
              if (v != T(0)) {
                for (int o = 0; o < s.out_c; ++o) dwr[o] += v * d[o];
              }
              if (dx != nullptr) {
                T acc = 0;
                for (int o = 0; o < s.out_c; ++o) acc += wr[o] * d[o];
                dx[at + c] += acc;
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
struct LayerCache {
  std::vector<T> input;  // summed (and for pooled dense layers, averaged) input
  std::vector<T> xhat;
  std::vector<T> inv_std;
  std::vector<T> out;    // post-activation, logits for the final layer
};

template <typename T>
struct Forward {
  std::vector<LayerCache<T>> layers;
  std::vector<T> probs;
  T loss = 0;
  // Batch statistics, filled in train mode.
  std::vector<std::vector<double>> batch_mean;
  std::vector<std::vector<double>> batch_var;
};

void check_batch(const NetworkSpec& net, const Batch& batch) {
  if (!(batch.shape == net.input)) {
    throw DimensionError("batch shape " + std::to_string(batch.shape.height) + "x" +
                         std::to_string(batch.shape.width) + "x" + std::to_string(batch.shape.channels) +
                         " does not match network input " + std::to_string(net.input.height) + "x" +
                         std::to_string(net.input.width) + "x" + std::to_string(net.input.channels));
  }
  if (batch.n < 1) throw DimensionError("empty batch");
  if (batch.inputs.size() != batch.example_size() * static_cast<std::size_t>(batch.n) ||
      batch.labels.size() != static_cast<std::size_t>(batch.n)) {
    throw DimensionError("batch buffers do not match its size");
  }
  const int classes = net.final_layer().out_width;
  for (int label : batch.labels) {
    if (label < 0 || label >= classes) {
      throw DimensionError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

template <typename T>
Forward<T> run_forward(const NetworkSpec& net, const Plan& plan, const ParamSet<T>& params,
                       const Batch& batch, Mode mode) {
  check_batch(net, batch);
  if (params.layers.size() != net.layers.size()) {
    throw DimensionError("parameter set does not match the network");
  }
  const int n = batch.n;
  const std::size_t layers = net.layers.size();
  Forward<T> f;
  f.layers.resize(layers);
  f.batch_mean.resize(layers);
  f.batch_var.resize(layers);

  for (std::size_t i = 0; i < layers; ++i) {
    const LayerSpec& layer = net.layers[i];
    const Geometry& g = plan.geo[i];
    const LayerParams<T>& p = params.layers[i];
    LayerCache<T>& cache = f.layers[i];
    const bool last = i + 1 == layers;
    const std::size_t in_size = static_cast<std::size_t>(n) * g.in_h * g.in_w * g.in_c;
    if (p.weight.size() != static_cast<std::size_t>(g.fh) * g.fw * g.in_c * g.out_c) {
      throw DimensionError("weight tensor of layer '" + layer.id + "' has the wrong size");
    }

    std::vector<T> input(in_size, T(0));
    for (int s : plan.topo.sources[i]) {
      if (s == Topology::kInput) {
        for (std::size_t k = 0; k < in_size; ++k) input[k] += static_cast<T>(batch.inputs[k]);
      } else {
        const std::vector<T>& src = f.layers[static_cast<std::size_t>(s)].out;
        for (std::size_t k = 0; k < in_size; ++k) input[k] += src[k];
      }
    }
    if (g.pooled) {
      const int hw = g.in_h * g.in_w;
      std::vector<T> pooled(static_cast<std::size_t>(n) * g.in_c, T(0));
      for (int b = 0; b < n; ++b) {
        for (int k = 0; k < hw; ++k) {
          const T* row = input.data() + (static_cast<std::size_t>(b) * hw + k) * g.in_c;
          for (int c = 0; c < g.in_c; ++c) pooled[static_cast<std::size_t>(b) * g.in_c + c] += row[c];
        }
      }
      for (T& v : pooled) v /= static_cast<T>(hw);
      input = std::move(pooled);
    }
    cache.input = std::move(input);

    const ConvShape shape = conv_shape(g);
    const std::size_t plane = static_cast<std::size_t>(shape.out_h) * shape.out_w;
    const std::size_t count = static_cast<std::size_t>(n) * plane;  // positions per channel
    std::vector<T> pre(count * static_cast<std::size_t>(g.out_c));
    conv_forward(shape, n, cache.input.data(), p.weight.data(), pre.data());

    if (last) {
      for (std::size_t k = 0; k < count; ++k) {
        for (int o = 0; o < g.out_c; ++o) pre[k * g.out_c + o] += p.beta[static_cast<std::size_t>(o)];
      }
      cache.out = std::move(pre);
    } else {
      const int channels = g.out_c;
      std::vector<double> mean(static_cast<std::size_t>(channels), 0.0);
      std::vector<double> var(static_cast<std::size_t>(channels), 0.0);
      if (mode == Mode::kTrain) {
        for (std::size_t k = 0; k < count; ++k) {
          for (int o = 0; o < channels; ++o) mean[static_cast<std::size_t>(o)] += pre[k * channels + o];
        }
        for (double& m : mean) m /= static_cast<double>(count);
        for (std::size_t k = 0; k < count; ++k) {
          for (int o = 0; o < channels; ++o) {
            const double d = pre[k * channels + o] - mean[static_cast<std::size_t>(o)];
            var[static_cast<std::size_t>(o)] += d * d;
          }
        }
        for (double& v : var) v /= static_cast<double>(count);
        f.batch_mean[i] = mean;
        f.batch_var[i] = var;
      } else {
        for (int o = 0; o < channels; ++o) {
          mean[static_cast<std::size_t>(o)] = p.moving_mean[static_cast<std::size_t>(o)];
          var[static_cast<std::size_t>(o)] = p.moving_var[static_cast<std::size_t>(o)];
        }
      }
      cache.inv_std.resize(static_cast<std::size_t>(channels));
      std::vector<T> shift(static_cast<std::size_t>(channels));
      for (int o = 0; o < channels; ++o) {
        cache.inv_std[static_cast<std::size_t>(o)] =
            static_cast<T>(1.0 / std::sqrt(var[static_cast<std::size_t>(o)] + kBatchNormEpsilon));
        shift[static_cast<std::size_t>(o)] = static_cast<T>(mean[static_cast<std::size_t>(o)]);
      }
      cache.xhat.resize(pre.size());
      cache.out.resize(pre.size());
      for (std::size_t k = 0; k < count; ++k) {
        for (int o = 0; o < channels; ++o) {
          const std::size_t at = k * channels + o;
          const T xh = (pre[at] - shift[static_cast<std::size_t>(o)]) * cache.inv_std[static_cast<std::size_t>(o)];
          cache.xhat[at] = xh;
          const T y = p.gamma[static_cast<std::size_t>(o)] * xh + p.beta[static_cast<std::size_t>(o)];
          cache.out[at] = y > T(0) || std::isnan(y) ? y : T(0);
        }
      }
    }
    T sum = 0;
    for (T v : cache.out) sum += v;
    if (!std::isfinite(static_cast<double>(sum))) {
      throw DivergenceError("non-finite activations in layer '" + layer.id + "'", -1);
    }
  }

  // Softmax cross-entropy.
  const int classes = plan.geo.back().out_c;
  const std::vector<T>& logits = f.layers.back().out;
  f.probs.resize(logits.size());
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const T* z = logits.data() + static_cast<std::size_t>(b) * classes;
    T* pr = f.probs.data() + static_cast<std::size_t>(b) * classes;
    const T zmax = *std::max_element(z, z + classes);
    double total = 0.0;
    for (int k = 0; k < classes; ++k) total += std::exp(static_cast<double>(z[k] - zmax));
    for (int k = 0; k < classes; ++k) {
      pr[k] = static_cast<T>(std::exp(static_cast<double>(z[k] - zmax)) / total);
    }
    const int label = batch.labels[static_cast<std::size_t>(b)];
    loss += std::log(total) - static_cast<double>(z[label] - zmax);
  }
  f.loss = static_cast<T>(loss / n);
  return f;
}

template <typename T>
void update_moving_averages(ParamSet<T>& params, const Forward<T>& f) {
  const double d = kMovingAverageDecay;
  for (std::size_t i = 0; i + 1 < params.layers.size(); ++i) {
    LayerParams<T>& p = params.layers[i];
    for (std::size_t o = 0; o < p.moving_mean.size(); ++o) {
      p.moving_mean[o] = static_cast<T>(d * p.moving_mean[o] + (1.0 - d) * f.batch_mean[i][o]);
      p.moving_var[o] = static_cast<T>(d * p.moving_var[o] + (1.0 - d) * f.batch_var[i][o]);
    }
  }
}

template <typename T>
ParamSet<T> run_backward(const NetworkSpec& net, const Plan& plan, const ParamSet<T>& params,
                         const Batch& batch, const Forward<T>& f) {
  const int n = batch.n;
  const std::size_t layers = net.layers.size();
  ParamSet<T> grads = params.zeros_like();
  std::vector<std::vector<T>> dout(layers);
  for (std::size_t i = 0; i < layers; ++i) dout[i].assign(f.layers[i].out.size(), T(0));

  const int classes = plan.geo.back().out_c;
  {
    std::vector<T>& d = dout.back();
    for (int b = 0; b < n; ++b) {
      for (int k = 0; k < classes; ++k) {
        const std::size_t at = static_cast<std::size_t>(b) * classes + k;
        d[at] = f.probs[at] / static_cast<T>(n);
      }
      d[static_cast<std::size_t>(b) * classes + batch.labels[static_cast<std::size_t>(b)]] -= T(1) / static_cast<T>(n);
    }
  }

  for (std::size_t li = layers; li-- > 0;) {
    const Geometry& g = plan.geo[li];
    const LayerCache<T>& cache = f.layers[li];
    const LayerParams<T>& p = params.layers[li];
    LayerParams<T>& gp = grads.layers[li];
    const ConvShape shape = conv_shape(g);
    const std::size_t count = static_cast<std::size_t>(n) * shape.out_h * shape.out_w;
    const int channels = g.out_c;
    std::vector<T> dpre(dout[li].size());

    if (li + 1 == layers) {
      dpre = dout[li];
      for (std::size_t k = 0; k < count; ++k) {
        for (int o = 0; o < channels; ++o) gp.beta[static_cast<std::size_t>(o)] += dpre[k * channels + o];
      }
    } else {
      std::vector<T> dy(dout[li].size());
      std::vector<double> dgamma(static_cast<std::size_t>(channels), 0.0);
      std::vector<double> dbeta(static_cast<std::size_t>(channels), 0.0);
      for (std::size_t k = 0; k < count; ++k) {
        for (int o = 0; o < channels; ++o) {
          const std::size_t at = k * channels + o;
          const T v = cache.out[at] > T(0) ? dout[li][at] : T(0);
          dy[at] = v;
          dgamma[static_cast<std::size_t>(o)] += static_cast<double>(v) * cache.xhat[at];
          dbeta[static_cast<std::size_t>(o)] += v;
        }
      }
      const double m = static_cast<double>(count);
      std::vector<T> scale(static_cast<std::size_t>(channels));
      std::vector<T> mean_dy(static_cast<std::size_t>(channels));
      std::vector<T> mean_dyx(static_cast<std::size_t>(channels));
      for (int o = 0; o < channels; ++o) {
        const std::size_t c = static_cast<std::size_t>(o);
        gp.gamma[c] = static_cast<T>(dgamma[c]);
        gp.beta[c] = static_cast<T>(dbeta[c]);
        scale[c] = p.gamma[c] * cache.inv_std[c];
        mean_dy[c] = static_cast<T>(dbeta[c] / m);
        mean_dyx[c] = static_cast<T>(dgamma[c] / m);
      }
      for (std::size_t k = 0; k < count; ++k) {
        for (int o = 0; o < channels; ++o) {
          const std::size_t at = k * channels + o;
          const std::size_t c = static_cast<std::size_t>(o);
          dpre[at] = scale[c] * (dy[at] - mean_dy[c] - cache.xhat[at] * mean_dyx[c]);
        }
      }
    }

    bool feeds_layer = false;
    for (int s : plan.topo.sources[li]) feeds_layer |= s != Topology::kInput;
    std::vector<T> dinput;
    if (feeds_layer) dinput.assign(cache.input.size(), T(0));
    conv_backward(shape, n, cache.input.data(), p.weight.data(), dpre.data(),
                  feeds_layer ? dinput.data() : nullptr, gp.weight.data());
    if (!feeds_layer) continue;

    if (g.pooled) {
      const int hw = g.in_h * g.in_w;
      std::vector<T> spread(static_cast<std::size_t>(n) * hw * g.in_c);
      const T inv = T(1) / static_cast<T>(hw);
      for (int b = 0; b < n; ++b) {
        for (int k = 0; k < hw; ++k) {
          T* row = spread.data() + (static_cast<std::size_t>(b) * hw + k) * g.in_c;
          for (int c = 0; c < g.in_c; ++c) row[c] = dinput[static_cast<std::size_t>(b) * g.in_c + c] * inv;
        }
      }
      dinput = std::move(spread);
    }
    for (int s : plan.topo.sources[li]) {
      if (s == Topology::kInput) continue;
      std::vector<T>& d = dout[static_cast<std::size_t>(s)];
      for (std::size_t k = 0; k < d.size(); ++k) d[k] += dinput[k];
    }
  }
  return grads;
}

template <typename T>
struct LossAndGrads {
  T loss;
  ParamSet<T> grads;
};

template <typename T>
LossAndGrads<T> forward_backward(const NetworkSpec& net, ParamSet<T>& params, const Batch& batch,
                                 bool update_stats) {
  const Plan plan = make_plan(net);
  Forward<T> f = run_forward(net, plan, params, batch, Mode::kTrain);
  ParamSet<T> grads = run_backward(net, plan, params, batch, f);
  if (update_stats) update_moving_averages(params, f);
  return {f.loss, std::move(grads)};
}

}  // namespace

template <typename T>
ForwardResult<T> forward_loss(const NetworkSpec& net, ParamSet<T>& params, const Batch& batch,
                              Mode mode) {
  const Plan plan = make_plan(net);
  Forward<T> f = run_forward(net, plan, params, batch, mode);
  if (mode == Mode::kTrain) update_moving_averages(params, f);
  return {f.loss, std::move(f.layers.back().out)};
}

template <typename T>
T train_loss(const NetworkSpec& net, const ParamSet<T>& params, const Batch& batch) {
  const Plan plan = make_plan(net);
  return run_forward(net, plan, params, batch, Mode::kTrain).loss;
}

template <typename T>
ParamSet<T> backward(const NetworkSpec& net, const ParamSet<T>& params, const Batch& batch) {
  ParamSet<T> copy = params;
  return forward_backward(net, copy, batch, false).grads;
}

template <typename T>
void prox_step(ParamSet<T>& params, ParamSet<T>& velocity, const ParamSet<T>& data_grads,
               const GammaState& reg_coefficients, const TrainConfig& config) {
  const T lr = static_cast<T>(config.learning_rate);
  const T mu = static_cast<T>(config.momentum);
  const T decay = static_cast<T>(config.weight_decay);
  auto sgd = [&](std::vector<T>& w, std::vector<T>& v, const std::vector<T>& g, bool decayed) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      T grad = g[k];
      if (decayed && decay != T(0)) grad += decay * w[k];
      v[k] = mu * v[k] + grad;
      w[k] -= lr * v[k];
    }
  };
  const bool shrink = config.lambda > 0.0;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    LayerParams<T>& p = params.layers[i];
    LayerParams<T>& v = velocity.layers[i];
    const LayerParams<T>& g = data_grads.layers[i];
    sgd(p.weight, v.weight, g.weight, true);
    sgd(p.beta, v.beta, g.beta, false);
    sgd(p.gamma, v.gamma, g.gamma, false);
    if (!shrink || p.gamma.empty()) continue;
    const std::vector<double>& coeff = reg_coefficients.values.at(i);
    if (coeff.size() != p.gamma.size()) {
      throw DimensionError("regularizer coefficients do not match layer " + std::to_string(i));
    }
    for (std::size_t j = 0; j < p.gamma.size(); ++j) {
      const T threshold = static_cast<T>(config.learning_rate * config.lambda * coeff[j]);
      const T magnitude = std::abs(p.gamma[j]) - threshold;
      if (magnitude > T(0)) {
        p.gamma[j] = std::copysign(magnitude, p.gamma[j]);
      } else {
        p.gamma[j] = T(0);
        v.gamma[j] = T(0);
      }
    }
  }
}

double evaluate(const NetworkSpec& net, const ParamSet<float>& params, const Batch& eval_set) {
  if (eval_set.n < 1) throw ConfigError("evaluation set is empty");
  const Plan plan = make_plan(net);
  const int classes = net.final_layer().out_width;
  constexpr int kChunk = 256;
  long correct = 0;
  for (int begin = 0; begin < eval_set.n; begin += kChunk) {
    const Batch chunk = eval_set.slice(begin, std::min(begin + kChunk, eval_set.n));
    const Forward<float> f = run_forward(net, plan, params, chunk, Mode::kEval);
    const std::vector<float>& logits = f.layers.back().out;
    for (int b = 0; b < chunk.n; ++b) {
      const float* z = logits.data() + static_cast<std::size_t>(b) * classes;
      const int pred = static_cast<int>(std::max_element(z, z + classes) - z);
      if (pred == chunk.labels[static_cast<std::size_t>(b)]) ++correct;
    }
  }
  return static_cast<double>(correct) / eval_set.n;
}

TrainResult train(const NetworkSpec& net, const DataSource& data, const TrainConfig& config) {
  config.check();
  require_valid(net);
  TrainResult result;
  result.params = init_params<float>(net, config.seed);
  ParamSet<float> velocity = result.params.zeros_like();
  std::mt19937_64 rng(config.seed ^ 0x5851F42D4C957F2DULL);
  const bool shrink = config.lambda > 0.0;
  GammaState coefficients;

  for (long step = 1; step <= config.steps; ++step) {
    const Batch batch = data.sample(config.batch_size, rng);
    LossAndGrads<float> lg{0.0f, {}};
    try {
      lg = forward_backward(net, result.params, batch, true);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step), step);
    }
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step), step);
    }
    if (shrink) {
      coefficients = reg_coefficients(net, gamma_state(net, result.params), config.resource, config.tau);
    }
    prox_step(result.params, velocity, lg.grads, coefficients, config);

    if (step % config.eval_every == 0 || step == config.steps) {
      const GammaState gammas = gamma_state(net, result.params);
      TrainRecord record;
      record.step = step;
      record.loss = lg.loss;
      record.reg_value = reg_value(net, gammas, config.resource, config.tau).total;
      record.projected_flops = projected_cost(net, gammas, Resource::kFlops, config.tau).total;
      record.projected_size = projected_cost(net, gammas, Resource::kModelSize, config.tau).total;
      record.accuracy = evaluate(net, result.params, data.eval_set());
      result.history.push_back(record);
    }
  }
  return result;
}

template struct ParamSet<float>;
template struct ParamSet<double>;
template ParamSet<float> init_params<float>(const NetworkSpec&, std::uint64_t);
template ParamSet<double> init_params<double>(const NetworkSpec&, std::uint64_t);
template ParamSet<double> convert_params<double, float>(const ParamSet<float>&);
template ParamSet<float> convert_params<float, double>(const ParamSet<double>&);
template GammaState gamma_state<float>(const NetworkSpec&, const ParamSet<float>&);
template GammaState gamma_state<double>(const NetworkSpec&, const ParamSet<double>&);
template ForwardResult<float> forward_loss<float>(const NetworkSpec&, ParamSet<float>&, const Batch&, Mode);
template ForwardResult<double> forward_loss<double>(const NetworkSpec&, ParamSet<double>&, const Batch&, Mode);
template float train_loss<float>(const NetworkSpec&, const ParamSet<float>&, const Batch&);
template double train_loss<double>(const NetworkSpec&, const ParamSet<double>&, const Batch&);
template ParamSet<float> backward<float>(const NetworkSpec&, const ParamSet<float>&, const Batch&);
template ParamSet<double> backward<double>(const NetworkSpec&, const ParamSet<double>&, const Batch&);
template void prox_step<float>(ParamSet<float>&, ParamSet<float>&, const ParamSet<float>&,
                               const GammaState&, const TrainConfig&);
template void prox_step<double>(ParamSet<double>&, ParamSet<double>&, const ParamSet<double>&,
                                const GammaState&, const TrainConfig&);

}  // namespace morphnet
