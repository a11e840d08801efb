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

#include <cmath>
#include <random>

#include <doctest.h>

#include "ralstm/errors.hpp"
#include "ralstm/lstm.hpp"
#include "ralstm/ops.hpp"
#include "ralstm/optimizer.hpp"
#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"
#include "ralstm/tensor.hpp"
#include "support/finite_diff.hpp"

using namespace ralstm;

namespace {

// Scalar reference for a hidden_dim = 1 LSTM cell, written against the gate
// equations directly.
struct ScalarLstmRef {
  double wi_x, wi_h, bi;
  double wf_x, wf_h, bf;
  double wo_x, wo_h, bo;
  double wg_x, wg_h, bg;

  static double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

  std::pair<double, double> step(double x, double h, double m) const {
    const double i = sig(wi_x * x + wi_h * h + bi);
    const double f = sig(wf_x * x + wf_h * h + bf);
    const double o = sig(wo_x * x + wo_h * h + bo);
    const double g = std::tanh(wg_x * x + wg_h * h + bg);
    const double m_t = f * m + i * g;
    const double h_t = o * std::tanh(m_t);
    return {h_t, m_t};
  }
};

Tensor random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t({n});
  for (std::size_t i = 0; i < n; ++i) t[i] = dist(rng);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("tensor_autodiff");

TEST_CASE("tensor shape/data invariants") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), DimensionError);
  CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
  CHECK(Tensor::scalar(4.0).shape_str() == "(1)");
}

TEST_CASE("dense identity and zero cases") {
  Tape tape;
  Value w_id = tape.leaf(Tensor({2, 2}, {1, 0, 0, 1}));
  Value b0 = tape.leaf(Tensor::vec({0.0, 0.0}));
  Value x = tape.leaf(Tensor::vec({3.0, 4.0}));
  Value y = dense(x, w_id, b0);
  CHECK(tape.value(y)[0] == 3.0);
  CHECK(tape.value(y)[1] == 4.0);

  Value w0 = tape.leaf(Tensor({2, 2}));
  Value b1 = tape.leaf(Tensor::vec({1.0, 1.0}));
  Value y2 = dense(x, w0, b1);
  CHECK(tape.value(y2)[0] == 1.0);
  CHECK(tape.value(y2)[1] == 1.0);
}

TEST_CASE("dense against hand matrix-vector result") {
  // W = [[1,2],[3,4]], x = (1,1) -> (3, 7)
  Tape tape;
  Value w = tape.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  Value x = tape.leaf(Tensor::vec({1.0, 1.0}));
  Value y = dense(x, w);
  CHECK(tape.value(y)[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(tape.value(y)[1] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("dense shape mismatch names both shapes") {
  Tape tape;
  Value w = tape.leaf(Tensor({2, 3}));
  Value x = tape.leaf(Tensor::vec({1.0, 2.0}));
  try {
    dense(x, w);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2, 3)") != std::string::npos);
    CHECK(msg.find("(2)") != std::string::npos);
  }
}

TEST_CASE("lstm_cell with all-zero weights collapses to zero") {
  ParamStore store(7);
  LstmSpec spec{3, 2};
  lstm_create(store, "cell", spec);
  for (auto& [name, tensor] : store.tensors()) tensor.fill(0.0);

  Tape tape;
  LstmParams p = lstm_bind(tape, store, "cell", spec);
  Value x = tape.leaf(Tensor::vec({0.3, -2.0, 11.0}));
  Value h = tape.leaf(Tensor::vec({1.5, -0.5}));
  Value m = tape.leaf(Tensor::vec({0.0, 0.0}));
  auto [h_t, m_t] = lstm_cell(x, h, m, p);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(tape.value(h_t)[i] == 0.0);
    CHECK(tape.value(m_t)[i] == 0.0);
  }
}

TEST_CASE("lstm_cell matches scalar reference to 1e-12") {
  ScalarLstmRef ref{0.2, -0.4, 0.1, 0.5, 0.3, -0.2, -0.7, 0.6, 0.05, 0.9, -0.1, 0.3};
  ParamStore store(0);
  LstmSpec spec{1, 1};
  lstm_create(store, "cell", spec);
  store.get("cell.w_input") = Tensor({1, 2}, {ref.wi_x, ref.wi_h});
  store.get("cell.w_forget") = Tensor({1, 2}, {ref.wf_x, ref.wf_h});
  store.get("cell.w_output") = Tensor({1, 2}, {ref.wo_x, ref.wo_h});
  store.get("cell.w_candidate") = Tensor({1, 2}, {ref.wg_x, ref.wg_h});
  store.get("cell.b_input") = Tensor::vec({ref.bi});
  store.get("cell.b_forget") = Tensor::vec({ref.bf});
  store.get("cell.b_output") = Tensor::vec({ref.bo});
  store.get("cell.b_candidate") = Tensor::vec({ref.bg});

  const double x = 0.37, h = -0.21, m = 0.88;
  auto [h_ref, m_ref] = ref.step(x, h, m);

  Tape tape;
  LstmParams p = lstm_bind(tape, store, "cell", spec);
  auto [h_t, m_t] = lstm_cell(tape.leaf(Tensor::vec({x})), tape.leaf(Tensor::vec({h})),
                              tape.leaf(Tensor::vec({m})), p);
  CHECK(tape.value(h_t)[0] == doctest::Approx(h_ref).epsilon(1e-12));
  CHECK(tape.value(m_t)[0] == doctest::Approx(m_ref).epsilon(1e-12));
}

TEST_CASE("lstm_cell output depends on the memory state") {
  std::mt19937_64 rng(11);
  ParamStore store(11);
  LstmSpec spec{2, 3};
  lstm_create(store, "cell", spec);

  Tape tape;
  LstmParams p = lstm_bind(tape, store, "cell", spec);
  Value x = tape.leaf(random_vec(2, rng));
  Value h = tape.leaf(random_vec(3, rng));
  auto [h_zero, m_zero] = lstm_cell(x, h, tape.leaf(Tensor::zeros({3})), p);
  auto [h_mem, m_mem] = lstm_cell(x, h, tape.leaf(Tensor::vec({0.7, -0.3, 1.1})), p);
  (void)m_zero;
  (void)m_mem;
  bool differs = false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (tape.value(h_zero)[i] != tape.value(h_mem)[i]) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("lstm_run equals repeated lstm_cell exactly") {
  std::mt19937_64 rng(5);
  ParamStore store(5);
  LstmSpec spec{2, 4};
  lstm_create(store, "cell", spec);

  Tape tape;
  LstmParams p = lstm_bind(tape, store, "cell", spec);
  std::vector<Value> xs;
  for (int t = 0; t < 6; ++t) xs.push_back(tape.leaf(random_vec(2, rng)));
  Value h0 = tape.leaf(random_vec(4, rng));
  Value m0 = tape.leaf(random_vec(4, rng));

  auto seq = lstm_run(xs, h0, m0, p);

  Value h = h0, m = m0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    auto [h_t, m_t] = lstm_cell(xs[t], h, m, p);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(tape.value(seq[t].first)[i] == tape.value(h_t)[i]);
      CHECK(tape.value(seq[t].second)[i] == tape.value(m_t)[i]);
    }
    h = h_t;
    m = m_t;
  }
}

TEST_CASE("softmax unit values") {
  Tape tape;
  Value a = softmax(tape.leaf(Tensor::vec({0.0, 0.0})));
  CHECK(tape.value(a)[0] == doctest::Approx(0.5).epsilon(1e-12));

  Value b = softmax(tape.leaf(Tensor::vec({3.7, 3.7, 3.7, 3.7})));
  for (std::size_t i = 0; i < 4; ++i) CHECK(tape.value(b)[i] == doctest::Approx(0.25).epsilon(1e-12));

  Value c = softmax(tape.leaf(Tensor::vec({std::log(2.0), 0.0})));
  CHECK(tape.value(c)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(tape.value(c)[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(softmax(tape.leaf(Tensor({2, 2}))), DimensionError);
}

TEST_CASE("softmax sums to one and shifts cancel") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor logits = random_vec(1 + trial % 9, rng, -10.0, 10.0);
    const double c = shift(rng);
    Tensor shifted = logits;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += c;

    Tape tape;
    Value a = softmax(tape.leaf(logits));
    Value b = softmax(tape.leaf(shifted));
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      total += tape.value(a)[i];
      CHECK(tape.value(a)[i] == doctest::Approx(tape.value(b)[i]).epsilon(1e-9));
      CHECK(tape.value(a)[i] > 0.0);
      CHECK(tape.value(a)[i] < 1.0 + 1e-15);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("dropout eval mode and p=0 are the identity") {
  Tape tape;
  std::mt19937_64 rng(3);
  Value x = tape.leaf(Tensor::vec({1.0, -2.0, 3.0}));
  Value eval_out = dropout(x, 0.5, false, nullptr);
  CHECK(eval_out.idx == x.idx);
  Value p0 = dropout(x, 0.0, true, &rng);
  CHECK(p0.idx == x.idx);
  CHECK_THROWS_AS(dropout(x, 1.0, true, &rng), ConfigError);
  CHECK_THROWS_AS(dropout(x, -0.1, true, &rng), ConfigError);
}

TEST_CASE("dropout keeps the mean at p=0.5") {
  Tape tape;
  std::mt19937_64 rng(99);
  const std::size_t n = 100000;
  Value ones = tape.leaf(Tensor::full({n}, 1.0));
  Value out = dropout(ones, 0.5, true, &rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += tape.value(out)[i];
  mean /= static_cast<double>(n);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cross-entropy unit values") {
  Tape tape;
  Value uniform = tape.leaf(Tensor::full({7}, 0.42));
  Value loss = cross_entropy(uniform, 3);
  CHECK(tape.value(loss)[0] == doctest::Approx(std::log(7.0)).epsilon(1e-12));

  Value half = tape.leaf(Tensor::scalar(0.5));
  CHECK(tape.value(binary_cross_entropy(half, 0))[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(tape.value(binary_cross_entropy(half, 1))[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Value margin = tape.leaf(Tensor::vec({40.0, 0.0}));
  CHECK(tape.value(cross_entropy(margin, 0))[0] == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(cross_entropy(uniform, 7), Error);
  CHECK_THROWS_AS(binary_cross_entropy(half, 2), Error);
}

TEST_CASE("row extracts a matrix row and routes gradients into it alone") {
  ParamStore store(0);
  store.put("m", Tensor({3, 2}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  Tape tape;
  Value m = tape.param("m", store.get("m"));
  Value r = row(m, 1);
  Tensor r_val = tape.value(r);
  REQUIRE(r_val.size() == 2);
  CHECK(r_val[0] == 3.0);
  CHECK(r_val[1] == 4.0);

  // loss = 2*r[0] + 5*r[1]: the gradient lands in row 1, zeros elsewhere.
  GradMap grads = tape.backward(add(scale(pick(r, 0), 2.0), scale(pick(r, 1), 5.0)));
  const Tensor& g = grads.at("m");
  CHECK(g.at(0, 0) == 0.0);
  CHECK(g.at(1, 0) == 2.0);
  CHECK(g.at(1, 1) == 5.0);
  CHECK(g.at(2, 1) == 0.0);

  Tape bad;
  Value v = bad.leaf(Tensor::vec({1.0}));
  CHECK_THROWS_AS(row(v, 0), DimensionError);
  Value mm = bad.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  CHECK_THROWS_AS(row(mm, 2), DimensionError);
}

TEST_CASE("stack_cols packs vectors as columns and splits gradients back") {
  Tape tape;
  Value a = tape.leaf(Tensor::vec({1.0, 2.0}), true);
  Value b = tape.leaf(Tensor::vec({3.0, 4.0}), true);
  Value m = stack_cols({a, b});
  Tensor m_val = tape.value(m);
  REQUIRE(m_val.rows() == 2);
  REQUIRE(m_val.cols() == 2);
  CHECK(m_val.at(0, 0) == 1.0);
  CHECK(m_val.at(0, 1) == 3.0);
  CHECK(m_val.at(1, 0) == 2.0);
  CHECK(m_val.at(1, 1) == 4.0);

  // loss = sum(M * M): d/dM = 2M, split back column by column.
  ParamStore store(0);
  store.put("a", Tensor::vec({1.0, 2.0}));
  Tape tp;
  Value pa = tp.param("a", store.get("a"));
  Value lb = tp.leaf(Tensor::vec({3.0, 4.0}));
  GradMap grads = tp.backward(sum(mul(stack_cols({pa, lb}), stack_cols({pa, lb}))));
  CHECK(grads.at("a")[0] == 2.0);
  CHECK(grads.at("a")[1] == 4.0);

  Tape bad;
  CHECK_THROWS_AS(stack_cols({}), DimensionError);
  Value u = bad.leaf(Tensor::vec({1.0}));
  Value w = bad.leaf(Tensor::vec({1.0, 2.0}));
  CHECK_THROWS_AS(stack_cols({u, w}), DimensionError);
}

TEST_CASE("backward on a linear loss") {
  // loss = w * x with x = 2 -> dloss/dw = 2
  ParamStore store(0);
  store.put("w", Tensor::scalar(1.5));
  Tape tape;
  Value w = tape.param("w", store.get("w"));
  Value x = tape.leaf(Tensor::scalar(2.0));
  Value loss = mul(w, x);
  GradMap grads = tape.backward(loss);
  CHECK(grads.at("w")[0] == 2.0);
}

TEST_CASE("unused parameters get exact zero gradients") {
  ParamStore store(0);
  store.put("used", Tensor::scalar(1.0));
  store.put("unused", Tensor::vec({3.0, 4.0}));
  Tape tape;
  Value w = tape.param("used", store.get("used"));
  tape.param("unused", store.get("unused"));
  GradMap grads = tape.backward(scale(w, 3.0));
  CHECK(grads.at("used")[0] == 3.0);
  CHECK(grads.at("unused")[0] == 0.0);
  CHECK(grads.at("unused")[1] == 0.0);
}

TEST_CASE("double backward and non-scalar loss are errors") {
  Tape tape;
  Value v = tape.leaf(Tensor::vec({1.0, 2.0}), true);
  CHECK_THROWS_AS(tape.backward(v), DimensionError);

  Tape tape2;
  Value w = tape2.leaf(Tensor::scalar(1.0), true);
  Value loss = scale(w, 2.0);
  tape2.backward(loss);
  CHECK_THROWS_AS(tape2.backward(loss), Error);
}

TEST_CASE("gradient check over a composite graph") {
  std::mt19937_64 rng(21);
  ParamStore store(21);
  store.create("w1", {4, 3}, 3);
  store.create("b1", {4}, 3);
  store.create("w2", {2, 4}, 4);
  store.create("s", {1}, 1);
  Tensor input = random_vec(3, rng);

  auto forward = [&](Tape& tape) {
    Value x = tape.leaf(input);
    Value h = tanh(dense(x, tape.param("w1", store.get("w1")), tape.param("b1", store.get("b1"))));
    Value z = dense(h, tape.param("w2", store.get("w2")));
    Value p = softmax(z);
    Value mixed = mul_scalar(sigmoid(z), tape.param("s", store.get("s")));
    Value both = add(concat(p, mixed), concat(mixed, p));
    return sum(mul(both, both));
  };

  Tape tape;
  Value loss = forward(tape);
  GradMap grads = tape.backward(loss);

  auto eval = [&]() {
    Tape t;
    Value l = [&]() {
      Value x = t.leaf(input);
      Value h = tanh(dense(x, t.param("w1", store.get("w1")), t.param("b1", store.get("b1"))));
      Value z = dense(h, t.param("w2", store.get("w2")));
      Value p = softmax(z);
      Value mixed = mul_scalar(sigmoid(z), t.param("s", store.get("s")));
      Value both = add(concat(p, mixed), concat(mixed, p));
      return sum(mul(both, both));
    }();
    return t.value(l)[0];
  };
  auto result = ralstm::testing::finite_diff_check(store, grads, eval);
  INFO("worst: ", result.worst_param, "[", result.worst_index, "] tape=", result.tape_grad,
       " fd=", result.fd_grad);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("gradient check through an LSTM step with losses") {
  std::mt19937_64 rng(31);
  ParamStore store(31);
  LstmSpec spec{3, 4};
  lstm_create(store, "cell", spec);
  store.create("out", {5, 4}, 4);
  Tensor x0 = random_vec(3, rng);
  Tensor x1 = random_vec(3, rng);

  auto eval = [&]() {
    Tape t;
    LstmParams p = lstm_bind(t, store, "cell", spec);
    Value h = t.leaf(Tensor::zeros({4}));
    Value m = t.leaf(Tensor::zeros({4}));
    auto s0 = lstm_cell(t.leaf(x0), h, m, p);
    auto s1 = lstm_cell(t.leaf(x1), s0.first, s0.second, p);
    Value logits = dense(s1.first, t.param("out", store.get("out")));
    Value loss = cross_entropy(logits, 2);
    return t.value(loss)[0];
  };

  Tape tape;
  LstmParams p = lstm_bind(tape, store, "cell", spec);
  Value h = tape.leaf(Tensor::zeros({4}));
  Value m = tape.leaf(Tensor::zeros({4}));
  auto s0 = lstm_cell(tape.leaf(x0), h, m, p);
  auto s1 = lstm_cell(tape.leaf(x1), s0.first, s0.second, p);
  Value logits = dense(s1.first, tape.param("out", store.get("out")));
  Value loss = cross_entropy(logits, 2);
  GradMap grads = tape.backward(loss);

  auto result = ralstm::testing::finite_diff_check(store, grads, eval);
  INFO("worst: ", result.worst_param, "[", result.worst_index, "] tape=", result.tape_grad,
       " fd=", result.fd_grad);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("adam unit behaviors") {
  ParamStore store(0);
  store.put("a", Tensor::vec({1.0, 2.0}));
  store.put("b", Tensor::vec({1.0, 2.0}));

  Adam adam(AdamConfig{.lr = 1e-3});
  GradMap zero;
  zero.emplace("a", Tensor::zeros({2}));
  adam.step(store, zero);
  CHECK(store.get("a")[0] == 1.0);
  CHECK(store.get("a")[1] == 2.0);

  // Identical params and grads step identically.
  GradMap same;
  same.emplace("a", Tensor::vec({0.3, -0.7}));
  same.emplace("b", Tensor::vec({0.3, -0.7}));
  Adam adam2(AdamConfig{.lr = 1e-3});
  adam2.step(store, same);
  CHECK(store.get("a")[0] == store.get("b")[0]);
  CHECK(store.get("a")[1] == store.get("b")[1]);
}

TEST_CASE("adam first-step magnitude equals the learning rate") {
  ParamStore store(0);
  store.put("w", Tensor::scalar(0.4));
  const double lr = 2.5e-4;
  Adam adam(AdamConfig{.lr = lr});
  GradMap grads;
  grads.emplace("w", Tensor::scalar(0.9));
  adam.step(store, grads);
  const double update = 0.4 - store.get("w")[0];
  CHECK(std::fabs(update - lr) < 1e-9);
}

TEST_CASE("adam rejects mismatched gradient shapes") {
  ParamStore store(0);
  store.put("w", Tensor::vec({1.0, 2.0}));
  Adam adam(AdamConfig{});
  GradMap grads;
  grads.emplace("w", Tensor::scalar(1.0));
  CHECK_THROWS_AS(adam.step(store, grads), DimensionError);
}

TEST_SUITE_END();
