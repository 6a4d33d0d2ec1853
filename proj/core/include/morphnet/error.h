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

#ifndef MORPHNET_ERROR_H_
#define MORPHNET_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace morphnet {

// Base for every error raised by the library. The CLI maps subclasses onto
// its exit-code taxonomy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document. `where` is a byte offset ("byte 17") or a JSON
// pointer ("/layers/2/kind") locating the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(where), detail_(what) {}
  const std::string& where() const { return where_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string where_;
  std::string detail_;
};

// Shapes of two inputs disagree (gamma snapshot vs architecture, batch vs
// network, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid network or an illegal rewrite of one.
class GraphError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// No admissible width assignment fits the budget.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::int64_t min_cost)
      : Error(what), min_cost_(min_cost) {}
  // Smallest cost reachable under the rule that was violated.
  std::int64_t min_cost() const { return min_cost_; }

 private:
  std::int64_t min_cost_;
};

// Budget is below what the fixed final layer alone costs.
class DegenerateBudgetError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

// Non-finite loss or activation during training.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Regularization removed every prunable channel.
class AllDeadError : public Error {
 public:
  using Error::Error;
};

}  // namespace morphnet

#endif  // MORPHNET_ERROR_H_
