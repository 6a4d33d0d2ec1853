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

#include <gtest/gtest.h>

#include <cmath>

#include "morphnet/error.h"

namespace morphnet {
namespace {

DataConfig config(const std::string& kind) {
  DataConfig d;
  d.kind = kind;
  d.classes = 4;
  d.dims = 5;
  d.train_size = 400;
  d.eval_size = 200;
  d.image_size = 6;
  d.channels = 2;
  return d;
}

TEST(Data, ShapesAndLabels) {
  const std::vector<std::pair<std::string, InputShape>> cases{
      {"blobs", {1, 1, 5}}, {"spirals", {1, 1, 2}}, {"textures", {6, 6, 2}}};
  for (const auto& [kind, shape] : cases) {
    SCOPED_TRACE(kind);
    const auto data = make_data_source(config(kind));
    EXPECT_EQ(data->shape(), shape);
    EXPECT_EQ(data->num_classes(), 4);
    EXPECT_EQ(data->train_set().n, 400);
    EXPECT_EQ(data->eval_set().n, 200);
    EXPECT_EQ(data->eval_set().inputs.size(), 200 * data->eval_set().example_size());
    std::vector<int> counts(4, 0);
    for (int label : data->eval_set().labels) {
      ASSERT_GE(label, 0);
      ASSERT_LT(label, 4);
      ++counts[static_cast<std::size_t>(label)];
    }
    for (int c : counts) EXPECT_EQ(c, 50);
    for (float x : data->train_set().inputs) ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(Data, DeterministicInSeed) {
  for (const std::string kind : {"blobs", "spirals", "textures"}) {
    const auto a = make_data_source(config(kind));
    const auto b = make_data_source(config(kind));
    EXPECT_EQ(a->train_set().inputs, b->train_set().inputs);
    DataConfig other = config(kind);
    other.seed = 2;
    EXPECT_NE(make_data_source(other)->train_set().inputs, a->train_set().inputs);
  }
}

TEST(Data, SamplingAndSlicing) {
  const auto data = make_data_source(config("blobs"));
  std::mt19937_64 r1(5);
  std::mt19937_64 r2(5);
  const Batch a = data->sample(16, r1);
  const Batch b = data->sample(16, r2);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.n, 16);
  const Batch s = data->eval_set().slice(10, 20);
  EXPECT_EQ(s.n, 10);
  EXPECT_EQ(s.labels.front(), data->eval_set().labels[10]);
}

TEST(Data, RejectsBadConfig) {
  DataConfig d = config("mnist");
  EXPECT_THROW(make_data_source(d), ConfigError);
  d = config("blobs");
  d.classes = 1;
  EXPECT_THROW(make_data_source(d), ConfigError);
}

}  // namespace
}  // namespace morphnet
