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

#ifndef MORPHNET_TESTS_SUPPORT_GRADCHECK_H_
#define MORPHNET_TESTS_SUPPORT_GRADCHECK_H_

#include <cstdint>

#include "morphnet/netgraph.h"

namespace morphnet::test {

// Largest componentwise relative error between backward() and central
// differences of the train-mode loss, in double, over every weight, gamma
// and beta. Gammas and betas are randomized first.
double gradient_check(const NetworkSpec& net, std::uint64_t seed, int batch_size = 4);

// Nets covering conv (with stride and odd filters), dense, batch norm and
// residual sums.
std::vector<NetworkSpec> gradient_fixtures();

}  // namespace morphnet::test

#endif  // MORPHNET_TESTS_SUPPORT_GRADCHECK_H_
