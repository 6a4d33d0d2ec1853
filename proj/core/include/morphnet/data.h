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

#ifndef MORPHNET_DATA_H_
#define MORPHNET_DATA_H_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "morphnet/netgraph.h"

namespace morphnet {

// A minibatch in NHWC layout.
struct Batch {
  int n = 0;
  InputShape shape;
  std::vector<float> inputs;
  std::vector<int> labels;

  std::size_t example_size() const {
    return static_cast<std::size_t>(shape.height) * shape.width * shape.channels;
  }
  // Rows [begin, end) as a new batch.
  Batch slice(int begin, int end) const;
};

class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual InputShape shape() const = 0;
  virtual int num_classes() const = 0;
  // Uniform draw with replacement from the training pool.
  virtual Batch sample(int batch_size, std::mt19937_64& rng) const = 0;
  virtual const Batch& train_set() const = 0;
  virtual const Batch& eval_set() const = 0;
};

// Fixed training and evaluation pools.
class PooledDataSource : public DataSource {
 public:
  PooledDataSource(Batch train, Batch eval, int num_classes);

  InputShape shape() const override { return train_.shape; }
  int num_classes() const override { return num_classes_; }
  Batch sample(int batch_size, std::mt19937_64& rng) const override;
  const Batch& train_set() const override { return train_; }
  const Batch& eval_set() const override { return eval_; }

 private:
  Batch train_;
  Batch eval_;
  int num_classes_;
};

// Synthetic generators. All draws come from `seed`.
struct DataConfig {
  std::string kind = "blobs";  // blobs | spirals | textures
  int classes = 2;
  int dims = 2;                // blobs: feature dimension
  int train_size = 2000;
  int eval_size = 1000;
  double noise = 0.5;          // per-feature / per-pixel Gaussian noise
  double spread = 3.0;         // blobs: std-dev of the class centres
  int image_size = 8;          // textures
  int channels = 1;            // textures
  double turns = 1.5;          // spirals
  std::uint64_t seed = 1;
};

// Gaussian clusters, one per class; input shape 1x1xdims.
std::unique_ptr<DataSource> make_blobs(const DataConfig& config);
// Interleaved spiral arms, one per class; input shape 1x1x2.
std::unique_ptr<DataSource> make_spirals(const DataConfig& config);
// Oriented sinusoidal gratings with random phase. Class k selects orientation
// k mod 4 and frequency level k / 4; input image_size x image_size x channels.
std::unique_ptr<DataSource> make_textures(const DataConfig& config);

// Dispatches on config.kind. Throws ConfigError.
std::unique_ptr<DataSource> make_data_source(const DataConfig& config);

}  // namespace morphnet

#endif  // MORPHNET_DATA_H_
