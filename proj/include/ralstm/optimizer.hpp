// Copyright 2026 the ralstm authors
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

#pragma once

#include <cstdint>
#include <map>

#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"

namespace ralstm {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. First/second moments are kept per parameter
/// name; parameters absent from a gradient map are left untouched.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(ParamStore& params, const GradMap& grads);

  double learning_rate() const { return cfg_.lr; }
  void set_learning_rate(double lr) { cfg_.lr = lr; }
  std::uint64_t steps() const { return t_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace ralstm
