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

#include "morphnet/io.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "morphnet/error.h"
#include "support/test_nets.h"

namespace morphnet {
namespace {

TEST(NetworkIo, RoundTripRandomNets) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 100; ++t) {
    const NetworkSpec net = test::random_net(rng);
    const std::string text = serialize_network(net);
    EXPECT_EQ(parse_network(text), net);
    EXPECT_EQ(serialize_network(parse_network(text)), text);
  }
}

TEST(NetworkIo, MissingInputShape) {
  try {
    parse_network(R"({"layers": []})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("input_shape"), std::string::npos) << e.what();
  }
}

TEST(NetworkIo, UnknownLayerKind) {
  const char* doc = R"({"input_shape": {"height": 1, "width": 1, "channels": 2},
    "layers": [{"id": "a", "kind": "pool", "out_width": 2, "inputs": ["input"]}]})";
  try {
    parse_network(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), "/layers/0/kind");
  }
}

TEST(NetworkIo, SyntaxErrorCarriesOffset) {
  try {
    parse_network("{\"input_shape\": ");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where().rfind("byte ", 0), 0u) << e.where();
  }
}

TEST(NetworkIo, InvalidGraphIsGraphError) {
  const char* doc = R"({"input_shape": {"height": 1, "width": 1, "channels": 2},
    "layers": [{"id": "a", "kind": "dense", "out_width": 2, "inputs": ["ghost"]}]})";
  const NetworkSpec net = parse_network(doc);
  EXPECT_FALSE(validate(net).empty());
  EXPECT_THROW(require_valid(net), GraphError);
}

TEST(GammaIo, RoundTripIsExact) {
  std::mt19937_64 rng(67);
  const NetworkSpec net = test::random_net(rng);
  GammaState g = test::random_gammas(net, rng, 0.2);
  g.values[0][0] = 1.0 / 3.0;
  EXPECT_EQ(parse_gammas(serialize_gammas(g)), g);
  EXPECT_THROW(parse_gammas(R"({"gammas": {"a": ["x"]}})"), ParseError);
}

TEST(WidthsIo, RoundTrip) {
  const std::map<std::string, int> w{{"a", 3}, {"b", 0}};
  EXPECT_EQ(parse_widths(serialize_widths(w)), w);
  EXPECT_THROW(parse_widths(R"({"widths": {"a": -1}})"), ParseError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(1e-12), "1e-12");
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
}

TEST(Files, MissingFileIsParseError) {
  EXPECT_THROW(read_file("/nonexistent/arch.json"), ParseError);
  const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "morphnet_io_test.arch";
  write_file(tmp, serialize_network(test::toy_chain()));
  EXPECT_EQ(load_network(tmp), test::toy_chain());
  std::filesystem::remove(tmp);
}

}  // namespace
}  // namespace morphnet
