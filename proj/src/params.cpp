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

#include "ralstm/params.hpp"

#include <cmath>
#include <random>

#include "ralstm/errors.hpp"

namespace ralstm {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Tensor& ParamStore::create(const std::string& name, std::vector<std::size_t> shape,
                           std::size_t fan_in) {
  auto it = tensors_.find(name);
  if (it != tensors_.end()) {
    if (it->second.shape() != shape) {
      throw DimensionError("parameter '" + name + "' already exists with shape " +
                           it->second.shape_str());
    }
    return it->second;
  }
  if (fan_in == 0) throw ConfigError("parameter '" + name + "' needs a positive fan_in");
  Tensor t(std::move(shape));
  std::mt19937_64 rng((seed_ * 0x9E3779B97F4A7C15ull) ^ fnv1a64(name));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return tensors_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::put(const std::string& name, Tensor value) {
  return tensors_.insert_or_assign(name, std::move(value)).first->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NotFoundError("no parameter named '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NotFoundError("no parameter named '" + name + "'");
  return it->second;
}

}  // namespace ralstm
