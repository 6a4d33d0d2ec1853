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

#include "morphnet/netgraph.h"

#include <gtest/gtest.h>

#include <random>

#include "morphnet/error.h"
#include "support/test_nets.h"

namespace morphnet {
namespace {

using test::conv;
using test::dense;
using test::logits;
using test::make_net;

NetworkSpec residual_block() {
  return make_net({4, 4, 2},
                  {conv("stem", 4, 3, 1, {"input"}), conv("b1", 3, 3, 1, {"stem"}),
                   conv("b2", 4, 1, 1, {"b1"}), conv("join", 5, 3, 1, {"stem", "b2"}),
                   logits("out", 2, {"join"})},
                  {ResidualGroup{{{"stem", 0, 4}, {"b2", 0, 4}}}});
}

TEST(Validate, WellFormedChain) {
  EXPECT_TRUE(validate(test::toy_chain()).empty());
}

TEST(Validate, SumJoinWidthMismatch) {
  NetworkSpec net = residual_block();
  net.layers[2].out_width = 5;  // b2
  net.residual_groups[0].members[1].end = 5;
  recompute_in_widths(net);
  const std::vector<Violation> v = validate(net);
  ASSERT_FALSE(v.empty());
  bool names_join = false;
  for (const Violation& x : v) names_join = names_join || x.layer == "join";
  EXPECT_TRUE(names_join);
}

TEST(Validate, Cycle) {
  NetworkSpec net;
  net.input = {1, 1, 2};
  LayerSpec a = dense("a", 2, {"b"});
  LayerSpec b = dense("b", 2, {"a"});
  a.in_width = b.in_width = 2;
  net.layers = {a, b, logits("out", 2, {"b"})};
  net.layers[2].in_width = 2;
  bool found = false;
  for (const Violation& v : validate(net)) found = found || v.message == "graph not acyclic";
  EXPECT_TRUE(found);
  EXPECT_THROW(require_valid(net), GraphError);
}

TEST(Validate, StructuralRules) {
  NetworkSpec net = test::toy_chain();
  net.layers[1].has_batchnorm = true;
  EXPECT_FALSE(validate(net).empty());

  net = test::toy_chain();
  net.layers[0].has_batchnorm = false;
  EXPECT_FALSE(validate(net).empty());

  net = test::toy_chain();
  net.layers[0].inputs = {"nowhere"};
  EXPECT_FALSE(validate(net).empty());

  net = residual_block();
  net.residual_groups.clear();
  EXPECT_FALSE(validate(net).empty());
}

TEST(SpatialShapes, StrideTwoHalves) {
  const NetworkSpec net = make_net({16, 16, 1}, {conv("c", 2, 3, 2, {"input"}), logits("out", 2, {"c"})});
  const SpatialMap map = spatial_shapes(net);
  EXPECT_EQ(map.layers[0].out_h, 8);
  EXPECT_EQ(map.layers[0].out_w, 8);
  EXPECT_EQ(map.layers[1].out_h, 1);
}

TEST(SpatialShapes, OddInputRoundsUp) {
  const NetworkSpec net = make_net({7, 7, 1}, {conv("c", 2, 3, 2, {"input"}), logits("out", 2, {"c"})});
  EXPECT_EQ(spatial_shapes(net).layers[0].out_h, 4);
  EXPECT_EQ(spatial_shapes(net).layers[0].out_w, 4);
}

TEST(SpatialShapes, UnitStridePreservesDims) {
  const NetworkSpec net = residual_block();
  const SpatialMap map = spatial_shapes(net);
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    EXPECT_EQ(map.layers[i].out_h, 4);
    EXPECT_EQ(map.layers[i].out_w, 4);
  }
}

TEST(ApplyWidths, IdentityIsNoOp) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const NetworkSpec net = test::random_net(rng);
    EXPECT_EQ(apply_widths(net, net.widths()), net);
  }
}

TEST(ApplyWidths, ChainPropagatesInWidth) {
  const NetworkSpec net = make_net({1, 1, 3}, {dense("A", 8, {"input"}), dense("B", 4, {"A"}),
                                               logits("out", 2, {"B"})});
  const NetworkSpec out = apply_widths(net, {{"A", 8}, {"B", 2}});
  EXPECT_EQ(out.find("B")->out_width, 2);
  EXPECT_EQ(out.find("out")->in_width, 2);
}

TEST(ApplyWidths, DeadBranchBecomesPassThrough) {
  const NetworkSpec net = residual_block();
  const NetworkSpec out = apply_widths(net, {{"stem", 4}, {"b1", 0}, {"b2", 4}, {"join", 5}});
  EXPECT_EQ(out.find("b1"), nullptr);
  EXPECT_EQ(out.find("b2"), nullptr);
  ASSERT_NE(out.find("join"), nullptr);
  EXPECT_EQ(out.find("join")->combine, Combine::kSingle);
  EXPECT_EQ(out.find("join")->inputs, std::vector<std::string>{"stem"});
  EXPECT_TRUE(out.residual_groups.empty());
  EXPECT_TRUE(validate(out).empty());
}

TEST(ApplyWidths, DeadEndProducerIsDropped) {
  // b1 -> c -> b2: killing c strands b2 (no input) and then b1 (no reader).
  const NetworkSpec net =
      make_net({1, 1, 3},
               {dense("stem", 4, {"input"}), dense("b1", 3, {"stem"}), dense("c", 2, {"b1"}),
                dense("b2", 4, {"c"}), dense("join", 5, {"stem", "b2"}), logits("out", 2, {"join"})},
               {ResidualGroup{{{"stem", 0, 4}, {"b2", 0, 4}}}});
  const NetworkSpec out =
      apply_widths(net, {{"stem", 4}, {"b1", 3}, {"c", 0}, {"b2", 4}, {"join", 5}});
  for (const char* id : {"b1", "c", "b2"}) EXPECT_EQ(out.find(id), nullptr) << id;
  ASSERT_NE(out.find("join"), nullptr);
  EXPECT_EQ(out.find("join")->inputs, (std::vector<std::string>{"stem"}));
  EXPECT_TRUE(validate(out).empty());
}

TEST(ApplyWidths, RejectsBadMaps) {
  const NetworkSpec net = residual_block();
  EXPECT_THROW(apply_widths(net, {{"stem", 4}, {"b1", 3}, {"b2", 2}, {"join", 5}}), GraphError);
  EXPECT_THROW(apply_widths(net, {{"stem", 4}, {"b1", 3}, {"b2", 4}}), GraphError);
  EXPECT_THROW(apply_widths(net, {{"stem", 4}, {"b1", -1}, {"b2", 4}, {"join", 5}}), GraphError);
  EXPECT_THROW(apply_widths(net, {{"stem", 4}, {"b1", 3}, {"b2", 4}, {"join", 5}, {"out", 3}}),
               GraphError);
  // Killing the trunk disconnects the final layer.
  EXPECT_THROW(apply_widths(net, {{"stem", 0}, {"b1", 3}, {"b2", 0}, {"join", 5}}), GraphError);
}

TEST(ApplyWidths, RandomRewritesStayValid) {
  std::mt19937_64 rng(11);
  int rewrites = 0;
  for (int t = 0; t < 300; ++t) {
    const NetworkSpec net = test::random_net(rng);
    const Topology topo = build_topology(net);
    std::map<std::string, int> widths;
    std::map<int, int> group_width;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
      int w = std::uniform_int_distribution<int>(0, net.layers[i].out_width + 2)(rng);
      if (topo.group_of[i] >= 0) w = group_width.emplace(topo.group_of[i], w).first->second;
      widths[net.layers[i].id] = w;
    }
    NetworkSpec out;
    try {
      out = apply_widths(net, widths);
    } catch (const GraphError&) {
      continue;
    }
    ++rewrites;
    EXPECT_TRUE(validate(out).empty());
    for (const LayerSpec& l : out.layers) {
      EXPECT_GT(l.out_width, 0);
      if (&l != &out.final_layer()) EXPECT_EQ(l.out_width, widths.at(l.id));
    }
    for (const ResidualGroup& g : out.residual_groups) {
      for (const GroupMember& m : g.members) EXPECT_EQ(m.end, g.members.front().end);
    }
  }
  EXPECT_GT(rewrites, 100);
}

TEST(Topology, GroupsAndConsumers) {
  const NetworkSpec net = residual_block();
  const Topology topo = build_topology(net);
  EXPECT_EQ(topo.final_index, 4);
  EXPECT_EQ(topo.group_of[0], 0);
  EXPECT_EQ(topo.group_of[2], 0);
  EXPECT_EQ(topo.group_of[1], -1);
  EXPECT_EQ(topo.sources[3], (std::vector<int>{0, 2}));
  EXPECT_EQ(topo.consumers[0], (std::vector<int>{1, 3}));
  EXPECT_TRUE(topo.fed_by_input(0));
  EXPECT_FALSE(topo.fed_by_input(1));
}

}  // namespace
}  // namespace morphnet
