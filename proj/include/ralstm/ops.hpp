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

#include <cstddef>
#include <random>

#include "ralstm/tape.hpp"

namespace ralstm {

// Elementwise; operands must share a shape.
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);

Value scale(Value a, double c);

/// out_i = a_i * s where s is a scalar node. Used for convex combinations
/// whose weights are themselves differentiable.
Value mul_scalar(Value a, Value s);

/// General product. Vectors are interpreted by position: a {k} left operand
/// acts as (1 x k), a {k} right operand as (k x 1). Result drops the
/// singleton dimension, so mat*vec -> vec, vec*mat -> vec, vec*vec -> scalar.
Value matmul(Value a, Value b);

/// W x + b with W (out x in), x {in}, b {out}. The bias-free overload is the
/// plain linear map.
Value dense(Value x, Value w, Value b);
Value dense(Value x, Value w);

/// M + v broadcast over columns: out(i,j) = M(i,j) + v(i).
Value add_col_broadcast(Value m, Value v);

Value concat(Value a, Value b);

Value sigmoid(Value a);
Value tanh(Value a);

/// Stable softmax over a non-empty vector (max subtraction).
Value softmax(Value a);

/// Inverted dropout: in training each entry is zeroed with probability p and
/// survivors are scaled by 1/(1-p); outside training this is the identity.
Value dropout(Value x, double p, bool training, std::mt19937_64* rng);

/// Categorical cross-entropy of logits against a class index, computed with
/// log-sum-exp.
Value cross_entropy(Value logits, std::size_t target_index);

/// Binary cross-entropy of a probability against a 0/1 label. The probability
/// is clamped to [1e-7, 1 - 1e-7] before the logs.
Value binary_cross_entropy(Value prob, int label);

Value sum(Value a);

/// Extracts element i as a scalar node.
Value pick(Value a, std::size_t i);

/// Extracts row r of a matrix as a vector node (gradients flow back into
/// that row only).
Value row(Value m, std::size_t r);

/// Stacks same-length vectors as the columns of a new matrix.
Value stack_cols(const std::vector<Value>& columns);

inline constexpr double kProbClamp = 1e-7;

}  // namespace ralstm
