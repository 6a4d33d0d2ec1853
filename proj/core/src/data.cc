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

#include "morphnet/data.h"

#include <cmath>
#include <numbers>

#include "morphnet/error.h"

namespace morphnet {

Batch Batch::slice(int begin, int end) const {
  Batch out;
  out.shape = shape;
  out.n = end - begin;
  const std::size_t size = example_size();
  out.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(size * begin),
                    inputs.begin() + static_cast<std::ptrdiff_t>(size * end));
  out.labels.assign(labels.begin() + begin, labels.begin() + end);
  return out;
}

PooledDataSource::PooledDataSource(Batch train, Batch eval, int num_classes)
    : train_(std::move(train)), eval_(std::move(eval)), num_classes_(num_classes) {
  if (train_.n <= 0) throw ConfigError("training pool is empty");
}

Batch PooledDataSource::sample(int batch_size, std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0, train_.n - 1);
  Batch batch;
  batch.n = batch_size;
  batch.shape = train_.shape;
  const std::size_t size = train_.example_size();
  batch.inputs.resize(size * static_cast<std::size_t>(batch_size));
  batch.labels.resize(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    const int i = pick(rng);
    std::copy_n(train_.inputs.begin() + static_cast<std::ptrdiff_t>(size * i), size,
                batch.inputs.begin() + static_cast<std::ptrdiff_t>(size * b));
    batch.labels[static_cast<std::size_t>(b)] = train_.labels[static_cast<std::size_t>(i)];
  }
  return batch;
}

namespace {

void check_common(const DataConfig& config) {
  if (config.classes < 2) throw ConfigError("data: classes must be >= 2");
  if (config.train_size < 1 || config.eval_size < 1) {
    throw ConfigError("data: train_size and eval_size must be >= 1");
  }
}

// Balanced labels: example i gets class i mod K.
template <typename Fill>
Batch generate(int n, const InputShape& shape, int classes, std::mt19937_64& rng, Fill fill) {
  Batch batch;
  batch.n = n;
  batch.shape = shape;
  batch.inputs.resize(batch.example_size() * static_cast<std::size_t>(n));
  batch.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = i % classes;
    batch.labels[static_cast<std::size_t>(i)] = label;
    fill(label, rng, batch.inputs.data() + batch.example_size() * static_cast<std::size_t>(i));
  }
  return batch;
}

}  // namespace

std::unique_ptr<DataSource> make_blobs(const DataConfig& config) {
  check_common(config);
  if (config.dims < 1) throw ConfigError("data: dims must be >= 1");
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(config.classes));
  for (auto& c : centers) {
    for (int d = 0; d < config.dims; ++d) c.push_back(config.spread * unit(rng));
  }
  auto fill = [&](int label, std::mt19937_64& r, float* out) {
    for (int d = 0; d < config.dims; ++d) {
      out[d] = static_cast<float>(centers[static_cast<std::size_t>(label)][static_cast<std::size_t>(d)] +
                                  config.noise * unit(r));
    }
  };
  const InputShape shape{1, 1, config.dims};
  Batch train = generate(config.train_size, shape, config.classes, rng, fill);
  Batch eval = generate(config.eval_size, shape, config.classes, rng, fill);
  return std::make_unique<PooledDataSource>(std::move(train), std::move(eval), config.classes);
}

std::unique_ptr<DataSource> make_spirals(const DataConfig& config) {
  check_common(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> position(0.05, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  auto fill = [&](int label, std::mt19937_64& r, float* out) {
    const double t = position(r);
    const double angle = two_pi * (config.turns * t + static_cast<double>(label) / config.classes);
    out[0] = static_cast<float>(t * std::cos(angle) + config.noise * unit(r));
    out[1] = static_cast<float>(t * std::sin(angle) + config.noise * unit(r));
  };
  const InputShape shape{1, 1, 2};
  Batch train = generate(config.train_size, shape, config.classes, rng, fill);
  Batch eval = generate(config.eval_size, shape, config.classes, rng, fill);
  return std::make_unique<PooledDataSource>(std::move(train), std::move(eval), config.classes);
}

std::unique_ptr<DataSource> make_textures(const DataConfig& config) {
  check_common(config);
  if (config.image_size < 2 || config.channels < 1) {
    throw ConfigError("data: textures need image_size >= 2 and channels >= 1");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> gain(0.5, 1.0);
  const int size = config.image_size;
  const int channels = config.channels;
  auto fill = [&](int label, std::mt19937_64& r, float* out) {
    const double theta = std::numbers::pi * (label % 4) / 4.0;
    // Cycles per image; level 0 is coarse, higher levels finer.
    const double freq = 1.5 + 1.5 * (label / 4);
    const double kx = 2.0 * std::numbers::pi * freq * std::cos(theta) / size;
    const double ky = 2.0 * std::numbers::pi * freq * std::sin(theta) / size;
    const double phi = phase(r);
    std::vector<double> gains(static_cast<std::size_t>(channels));
    for (double& g : gains) g = gain(r);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double wave = std::sin(kx * x + ky * y + phi);
        for (int c = 0; c < channels; ++c) {
          *out++ = static_cast<float>(gains[static_cast<std::size_t>(c)] * wave + config.noise * unit(r));
        }
      }
    }
  };
  const InputShape shape{size, size, channels};
  Batch train = generate(config.train_size, shape, config.classes, rng, fill);
  Batch eval = generate(config.eval_size, shape, config.classes, rng, fill);
  return std::make_unique<PooledDataSource>(std::move(train), std::move(eval), config.classes);
}

std::unique_ptr<DataSource> make_data_source(const DataConfig& config) {
  if (config.kind == "blobs") return make_blobs(config);
  if (config.kind == "spirals") return make_spirals(config);
  if (config.kind == "textures") return make_textures(config);
  throw ConfigError("data: unknown kind '" + config.kind + "'");
}

}  // namespace morphnet
