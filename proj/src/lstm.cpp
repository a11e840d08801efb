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

#include "ralstm/lstm.hpp"

#include "ralstm/errors.hpp"

namespace ralstm {

namespace {
void check_dims(const Tape& tape, Value x, Value h, Value m, const LstmSpec& spec) {
  const Tensor& vx = tape.value(x);
  const Tensor& vh = tape.value(h);
  const Tensor& vm = tape.value(m);
  if (vx.ndim() != 1 || vx.size() != spec.input_dim) {
    throw DimensionError("lstm_cell: input " + vx.shape_str() + " does not match input_dim " +
                         std::to_string(spec.input_dim));
  }
  if (vh.ndim() != 1 || vh.size() != spec.hidden_dim) {
    throw DimensionError("lstm_cell: hidden state " + vh.shape_str() +
                         " does not match hidden_dim " + std::to_string(spec.hidden_dim));
  }
  if (vm.ndim() != 1 || vm.size() != spec.hidden_dim) {
    throw DimensionError("lstm_cell: memory state " + vm.shape_str() +
                         " does not match hidden_dim " + std::to_string(spec.hidden_dim));
  }
}
}  // namespace

void lstm_create(ParamStore& store, const std::string& prefix, LstmSpec spec) {
  const std::size_t in = spec.input_dim + spec.hidden_dim;
  for (const char* gate : {"input", "forget", "output", "candidate"}) {
    store.create(prefix + ".w_" + gate, {spec.hidden_dim, in}, in);
    store.create(prefix + ".b_" + gate, {spec.hidden_dim}, in);
  }
}

LstmParams lstm_bind(Tape& tape, const ParamStore& store, const std::string& prefix, LstmSpec spec) {
  LstmParams p;
  p.spec = spec;
  p.w_input = tape.param(prefix + ".w_input", store.get(prefix + ".w_input"));
  p.w_forget = tape.param(prefix + ".w_forget", store.get(prefix + ".w_forget"));
  p.w_output = tape.param(prefix + ".w_output", store.get(prefix + ".w_output"));
  p.w_candidate = tape.param(prefix + ".w_candidate", store.get(prefix + ".w_candidate"));
  p.b_input = tape.param(prefix + ".b_input", store.get(prefix + ".b_input"));
  p.b_forget = tape.param(prefix + ".b_forget", store.get(prefix + ".b_forget"));
  p.b_output = tape.param(prefix + ".b_output", store.get(prefix + ".b_output"));
  p.b_candidate = tape.param(prefix + ".b_candidate", store.get(prefix + ".b_candidate"));
  return p;
}

std::pair<Value, Value> lstm_cell(Value x_t, Value h_prev, Value m_prev, const LstmParams& p) {
  Tape& tape = detail::tape_of({x_t, h_prev, m_prev});
  check_dims(tape, x_t, h_prev, m_prev, p.spec);
  Value z = concat(x_t, h_prev);
  Value gate_in = sigmoid(dense(z, p.w_input, p.b_input));
  Value gate_forget = sigmoid(dense(z, p.w_forget, p.b_forget));
  Value gate_out = sigmoid(dense(z, p.w_output, p.b_output));
  Value candidate = tanh(dense(z, p.w_candidate, p.b_candidate));
  Value m_t = add(mul(gate_forget, m_prev), mul(gate_in, candidate));
  Value h_t = mul(gate_out, tanh(m_t));
  return {h_t, m_t};
}

std::vector<std::pair<Value, Value>> lstm_run(const std::vector<Value>& xs, Value h0, Value m0,
                                              const LstmParams& p) {
  std::vector<std::pair<Value, Value>> states;
  states.reserve(xs.size());
  Value h = h0;
  Value m = m0;
  for (Value x : xs) {
    auto [h_t, m_t] = lstm_cell(x, h, m, p);
    states.emplace_back(h_t, m_t);
    h = h_t;
    m = m_t;
  }
  return states;
}

}  // namespace ralstm
