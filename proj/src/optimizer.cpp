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

#include "ralstm/optimizer.hpp"

#include <cmath>

#include "ralstm/errors.hpp"

namespace ralstm {

void Adam::step(ParamStore& params, const GradMap& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, grad] : grads) {
    Tensor& param = params.get(name);
    if (!param.same_shape(grad)) {
      throw DimensionError("adam: gradient " + grad.shape_str() + " does not match parameter '" +
                           name + "' with shape " + param.shape_str());
    }
    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) {
      it->second.m = Tensor::zeros(param.shape());
      it->second.v = Tensor::zeros(param.shape());
    }
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      param[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace ralstm
