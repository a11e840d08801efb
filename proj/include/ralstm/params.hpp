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
#include <string>
#include <string_view>

#include "ralstm/tensor.hpp"

namespace ralstm {

std::uint64_t fnv1a64(std::string_view s);

/// Named parameter collection for one model. Each tensor is initialized
/// uniformly in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a generator derived
/// from (store seed, parameter name), so values do not depend on creation
/// order or on which other parameters exist.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// Creates (or returns, when already present with the same shape) a tensor.
  Tensor& create(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in);

  /// Inserts a tensor with explicit values, replacing any previous entry.
  Tensor& put(const std::string& name, Tensor value);

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t count() const { return tensors_.size(); }

 private:
  std::uint64_t seed_;
  std::map<std::string, Tensor> tensors_;
};

}  // namespace ralstm
