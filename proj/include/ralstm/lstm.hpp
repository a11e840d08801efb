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

#include <string>
#include <utility>
#include <vector>

#include "ralstm/ops.hpp"
#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"

namespace ralstm {

struct LstmSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

/// Per-tape handles to one LSTM cell's weights. Gate weights have shape
/// (hidden_dim, input_dim + hidden_dim) and act on concat(x, h_prev); biases
/// have shape (hidden_dim).
struct LstmParams {
  LstmSpec spec;
  Value w_input, w_forget, w_output, w_candidate;
  Value b_input, b_forget, b_output, b_candidate;
};

/// Creates the cell's tensors in the store under `prefix`.
void lstm_create(ParamStore& store, const std::string& prefix, LstmSpec spec);

/// Registers the cell's tensors on a tape.
LstmParams lstm_bind(Tape& tape, const ParamStore& store, const std::string& prefix, LstmSpec spec);

/// One step of the standard cell: sigmoid input/forget/output gates, tanh
/// candidate. Returns (h_t, m_t).
std::pair<Value, Value> lstm_cell(Value x_t, Value h_prev, Value m_prev, const LstmParams& p);

/// Runs the cell over a sequence; element t of the result is (h_t, m_t).
std::vector<std::pair<Value, Value>> lstm_run(const std::vector<Value>& xs, Value h0, Value m0,
                                              const LstmParams& p);

}  // namespace ralstm
