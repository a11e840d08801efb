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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ralstm/tensor.hpp"

namespace ralstm {

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid for the lifetime of
/// the tape that produced it.
struct Value {
  Tape* tape = nullptr;
  std::uint32_t idx = 0;
  bool valid() const { return tape != nullptr; }
};

using GradMap = std::map<std::string, Tensor>;

/// Records forward operations in execution order and replays them in reverse
/// to accumulate gradients. One backward pass per tape; a second backward
/// without re-running forward is an error.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Constant input. With requires_grad the node participates in backward
  /// (used for probing gradients of non-parameter inputs in tests).
  Value leaf(Tensor value, bool requires_grad = false);

  /// Named trainable leaf. Registering the same name twice on one tape
  /// returns the original handle, so batched forwards share one leaf.
  Value param(const std::string& name, const Tensor& value);

  const Tensor& value(Value v) const;
  std::size_t node_count() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Runs reverse accumulation from a scalar loss. Returns one gradient per
  /// registered parameter (exact zeros for parameters untouched by the loss).
  /// Marks the tape consumed.
  GradMap backward(Value loss);

  // --- low-level interface for op implementations ---
  std::uint32_t emit(Tensor value, std::vector<std::uint32_t> parents, BackwardFn fn);
  bool node_requires_grad(std::uint32_t idx) const { return nodes_[idx].requires_grad; }
  const Tensor& node_value(std::uint32_t idx) const { return nodes_[idx].value; }
  Tensor& node_grad(std::uint32_t idx) { return nodes_[idx].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::uint32_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::map<std::string, std::uint32_t> params_;
  bool consumed_ = false;
};

namespace detail {
/// Validates that all handles live on the same tape and are usable.
Tape& tape_of(std::initializer_list<Value> values);
Tape& tape_of(const std::vector<Value>& values);
}  // namespace detail

}  // namespace ralstm
