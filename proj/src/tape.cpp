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

#include "ralstm/tape.hpp"

#include "ralstm/errors.hpp"

namespace ralstm {

Value Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Value{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Value Tape::param(const std::string& name, const Tensor& value) {
  auto it = params_.find(name);
  if (it != params_.end()) return Value{this, it->second};
  Value v = leaf(value, /*requires_grad=*/true);
  params_.emplace(name, v.idx);
  return v;
}

const Tensor& Tape::value(Value v) const {
  if (v.tape != this) throw Error("value handle does not belong to this tape");
  return nodes_[v.idx].value;
}

std::uint32_t Tape::emit(Tensor value, std::vector<std::uint32_t> parents, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.parents = std::move(parents);
  for (std::uint32_t p : node.parents) {
    if (nodes_[p].requires_grad) {
      node.requires_grad = true;
      break;
    }
  }
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

GradMap Tape::backward(Value loss) {
  if (loss.tape != this) throw Error("loss does not belong to this tape");
  if (consumed_) throw Error("backward already ran on this tape; re-run forward first");
  const Tensor& loss_value = nodes_[loss.idx].value;
  if (loss_value.size() != 1) {
    throw DimensionError("backward requires a scalar loss, got shape " + loss_value.shape_str());
  }
  consumed_ = true;

  for (Node& node : nodes_) {
    if (node.requires_grad) node.grad = Tensor::zeros(node.value.shape());
  }
  if (nodes_[loss.idx].requires_grad) nodes_[loss.idx].grad[0] = 1.0;

  for (std::uint32_t i = loss.idx + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.requires_grad && node.backward) node.backward(*this, i);
  }

  GradMap grads;
  for (const auto& [name, idx] : params_) grads.emplace(name, nodes_[idx].grad);
  return grads;
}

namespace detail {

namespace {

template <typename Range>
Tape& tape_of_range(const Range& values) {
  Tape* tape = nullptr;
  for (const Value& v : values) {
    if (!v.valid()) throw Error("operation received an invalid value handle");
    if (tape == nullptr) tape = v.tape;
    if (v.tape != tape) throw Error("operation mixes values from different tapes");
  }
  if (tape == nullptr) throw Error("operation requires at least one value");
  return *tape;
}

}  // namespace

Tape& tape_of(std::initializer_list<Value> values) { return tape_of_range(values); }

Tape& tape_of(const std::vector<Value>& values) { return tape_of_range(values); }

}  // namespace detail

}  // namespace ralstm
