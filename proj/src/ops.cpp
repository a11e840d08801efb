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

#include "ralstm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "ralstm/errors.hpp"

namespace ralstm {

namespace {

using detail::tape_of;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    std::ostringstream os;
    os << op << ": shapes " << a.shape_str() << " and " << b.shape_str() << " do not match";
    throw DimensionError(os.str());
  }
}

// C += A * B with row-major (m x k) * (k x n).
void mm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T with A (m x k), B (n x k).
void mm_abt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* arow = a + i * k;
      const double* brow = b + j * k;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

// C += A^T * B with A (k x m), B (k x n).
void mm_atb_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void acc(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Value add(Value a, Value b) {
  Tape& t = tape_of({a, b});
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require_same_shape(va, vb, "add");
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  std::uint32_t idx = t.emit(std::move(out), {a.idx, b.idx},
                             [pa = a.idx, pb = b.idx](Tape& tp, std::uint32_t self) {
                               const Tensor& g = tp.node_grad(self);
                               if (tp.node_requires_grad(pa)) acc(tp.node_grad(pa), g);
                               if (tp.node_requires_grad(pb)) acc(tp.node_grad(pb), g);
                             });
  return Value{&t, idx};
}

Value sub(Value a, Value b) {
  Tape& t = tape_of({a, b});
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require_same_shape(va, vb, "sub");
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  std::uint32_t idx = t.emit(std::move(out), {a.idx, b.idx},
                             [pa = a.idx, pb = b.idx](Tape& tp, std::uint32_t self) {
                               const Tensor& g = tp.node_grad(self);
                               if (tp.node_requires_grad(pa)) acc(tp.node_grad(pa), g);
                               if (tp.node_requires_grad(pb)) {
                                 Tensor& gb = tp.node_grad(pb);
                                 for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                               }
                             });
  return Value{&t, idx};
}

Value mul(Value a, Value b) {
  Tape& t = tape_of({a, b});
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require_same_shape(va, vb, "mul");
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  std::uint32_t idx =
      t.emit(std::move(out), {a.idx, b.idx},
             [pa = a.idx, pb = b.idx, va, vb](Tape& tp, std::uint32_t self) {
               const Tensor& g = tp.node_grad(self);
               if (tp.node_requires_grad(pa)) {
                 Tensor& ga = tp.node_grad(pa);
                 for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
               }
               if (tp.node_requires_grad(pb)) {
                 Tensor& gb = tp.node_grad(pb);
                 for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
               }
             });
  return Value{&t, idx};
}

Value scale(Value a, double c) {
  Tape& t = tape_of({a});
  const Tensor& va = t.value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * c;
  std::uint32_t idx = t.emit(std::move(out), {a.idx}, [pa = a.idx, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.node_grad(self);
    if (!tp.node_requires_grad(pa)) return;
    Tensor& ga = tp.node_grad(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
  return Value{&t, idx};
}

Value mul_scalar(Value a, Value s) {
  Tape& t = tape_of({a, s});
  const Tensor& va = t.value(a);
  const Tensor& vs = t.value(s);
  if (vs.size() != 1) {
    throw DimensionError("mul_scalar: weight must be a scalar, got shape " + vs.shape_str());
  }
  const double sv = vs[0];
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * sv;
  std::uint32_t idx =
      t.emit(std::move(out), {a.idx, s.idx},
             [pa = a.idx, ps = s.idx, va, sv](Tape& tp, std::uint32_t self) {
               const Tensor& g = tp.node_grad(self);
               if (tp.node_requires_grad(pa)) {
                 Tensor& ga = tp.node_grad(pa);
                 for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sv;
               }
               if (tp.node_requires_grad(ps)) {
                 double d = 0.0;
                 for (std::size_t i = 0; i < g.size(); ++i) d += g[i] * va[i];
                 tp.node_grad(ps)[0] += d;
               }
             });
  return Value{&t, idx};
}

namespace {

struct MulDims {
  std::size_t m, k, n;
  bool a_vec, b_vec;
};

MulDims infer_mul_dims(const Tensor& a, const Tensor& b) {
  MulDims d{};
  d.a_vec = a.ndim() == 1;
  d.b_vec = b.ndim() == 1;
  if (a.ndim() > 2 || b.ndim() > 2 || a.ndim() == 0 || b.ndim() == 0) {
    throw DimensionError("matmul supports vectors and matrices, got shapes " + a.shape_str() +
                         " and " + b.shape_str());
  }
  std::size_t ka;
  if (d.a_vec) {
    d.m = 1;
    ka = a.size();
  } else {
    d.m = a.rows();
    ka = a.cols();
  }
  std::size_t kb;
  if (d.b_vec) {
    kb = b.size();
    d.n = 1;
  } else {
    kb = b.rows();
    d.n = b.cols();
  }
  if (ka != kb) {
    throw DimensionError("matmul: inner dimensions of " + a.shape_str() + " and " + b.shape_str() +
                         " do not conform");
  }
  d.k = ka;
  return d;
}

}  // namespace

Value matmul(Value a, Value b) {
  Tape& t = tape_of({a, b});
  const Tensor va = t.value(a);
  const Tensor vb = t.value(b);
  MulDims d = infer_mul_dims(va, vb);

  std::vector<std::size_t> out_shape;
  if (d.a_vec && d.b_vec) out_shape = {1};
  else if (d.a_vec) out_shape = {d.n};
  else if (d.b_vec) out_shape = {d.m};
  else out_shape = {d.m, d.n};

  Tensor out(std::move(out_shape));
  mm_acc(va.data(), vb.data(), out.data(), d.m, d.k, d.n);

  std::uint32_t idx = t.emit(
      std::move(out), {a.idx, b.idx},
      [pa = a.idx, pb = b.idx, va, vb, d](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (tp.node_requires_grad(pa)) {
          // dA += dC * B^T
          mm_abt_acc(g.data(), vb.data(), tp.node_grad(pa).data(), d.m, d.n, d.k);
        }
        if (tp.node_requires_grad(pb)) {
          // dB += A^T * dC
          mm_atb_acc(va.data(), g.data(), tp.node_grad(pb).data(), d.k, d.m, d.n);
        }
      });
  return Value{&t, idx};
}

Value dense(Value x, Value w, Value b) {
  Tape& t = tape_of({x, w, b});
  const Tensor& vw = t.value(w);
  const Tensor& vx = t.value(x);
  const Tensor& vbias = t.value(b);
  if (vw.ndim() != 2 || vx.ndim() != 1 || vw.cols() != vx.size()) {
    throw DimensionError("dense: weight " + vw.shape_str() + " incompatible with input " +
                         vx.shape_str());
  }
  if (vbias.ndim() != 1 || vbias.size() != vw.rows()) {
    throw DimensionError("dense: bias " + vbias.shape_str() + " incompatible with weight " +
                         vw.shape_str());
  }
  return add(matmul(w, x), b);
}

Value dense(Value x, Value w) {
  Tape& t = tape_of({x, w});
  const Tensor& vw = t.value(w);
  const Tensor& vx = t.value(x);
  if (vw.ndim() != 2 || vx.ndim() != 1 || vw.cols() != vx.size()) {
    throw DimensionError("dense: weight " + vw.shape_str() + " incompatible with input " +
                         vx.shape_str());
  }
  return matmul(w, x);
}

Value add_col_broadcast(Value m, Value v) {
  Tape& t = tape_of({m, v});
  const Tensor& vm = t.value(m);
  const Tensor& vv = t.value(v);
  if (vm.ndim() != 2 || vv.ndim() != 1 || vv.size() != vm.rows()) {
    throw DimensionError("add_col_broadcast: matrix " + vm.shape_str() +
                         " incompatible with column " + vv.shape_str());
  }
  const std::size_t rows = vm.rows(), cols = vm.cols();
  Tensor out(vm.shape());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = vm.at(i, j) + vv[i];
  std::uint32_t idx = t.emit(
      std::move(out), {m.idx, v.idx},
      [pm = m.idx, pv = v.idx, rows, cols](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (tp.node_requires_grad(pm)) acc(tp.node_grad(pm), g);
        if (tp.node_requires_grad(pv)) {
          Tensor& gv = tp.node_grad(pv);
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) gv[i] += g.at(i, j);
        }
      });
  return Value{&t, idx};
}

Value concat(Value a, Value b) {
  Tape& t = tape_of({a, b});
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (va.ndim() != 1 || vb.ndim() != 1) {
    throw DimensionError("concat expects vectors, got " + va.shape_str() + " and " +
                         vb.shape_str());
  }
  Tensor out({va.size() + vb.size()});
  std::copy(va.data(), va.data() + va.size(), out.data());
  std::copy(vb.data(), vb.data() + vb.size(), out.data() + va.size());
  std::uint32_t idx = t.emit(
      std::move(out), {a.idx, b.idx},
      [pa = a.idx, pb = b.idx, na = va.size()](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (tp.node_requires_grad(pa)) {
          Tensor& ga = tp.node_grad(pa);
          for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        }
        if (tp.node_requires_grad(pb)) {
          Tensor& gb = tp.node_grad(pb);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
        }
      });
  return Value{&t, idx};
}

Value sigmoid(Value a) {
  Tape& t = tape_of({a});
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
  Tensor saved = y;
  std::uint32_t idx =
      t.emit(std::move(y), {a.idx}, [pa = a.idx, saved](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (!tp.node_requires_grad(pa)) return;
        Tensor& ga = tp.node_grad(pa);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * saved[i] * (1.0 - saved[i]);
      });
  return Value{&t, idx};
}

Value tanh(Value a) {
  Tape& t = tape_of({a});
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  Tensor saved = y;
  std::uint32_t idx =
      t.emit(std::move(y), {a.idx}, [pa = a.idx, saved](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (!tp.node_requires_grad(pa)) return;
        Tensor& ga = tp.node_grad(pa);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - saved[i] * saved[i]);
      });
  return Value{&t, idx};
}

Value softmax(Value a) {
  Tape& t = tape_of({a});
  const Tensor& x = t.value(a);
  if (x.ndim() != 1 || x.empty()) {
    throw DimensionError("softmax requires a non-empty vector, got shape " + x.shape_str());
  }
  const double mx = *std::max_element(x.data(), x.data() + x.size());
  Tensor y(x.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= z;
  Tensor saved = y;
  std::uint32_t idx =
      t.emit(std::move(y), {a.idx}, [pa = a.idx, saved](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (!tp.node_requires_grad(pa)) return;
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * saved[i];
        Tensor& ga = tp.node_grad(pa);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += saved[i] * (g[i] - dot);
      });
  return Value{&t, idx};
}

Value dropout(Value x, double p, bool training, std::mt19937_64* rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  if (rng == nullptr) throw ConfigError("dropout in training mode requires a generator");
  Tape& t = tape_of({x});
  const Tensor& vx = t.value(x);
  const double keep = 1.0 - p;
  std::bernoulli_distribution coin(keep);
  Tensor mask(vx.shape());
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    mask[i] = coin(*rng) ? 1.0 / keep : 0.0;
    out[i] = vx[i] * mask[i];
  }
  std::uint32_t idx =
      t.emit(std::move(out), {x.idx}, [px = x.idx, mask](Tape& tp, std::uint32_t self) {
        const Tensor& g = tp.node_grad(self);
        if (!tp.node_requires_grad(px)) return;
        Tensor& gx = tp.node_grad(px);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
      });
  return Value{&t, idx};
}

Value cross_entropy(Value logits, std::size_t target_index) {
  Tape& t = tape_of({logits});
  const Tensor& x = t.value(logits);
  if (x.ndim() != 1 || x.empty()) {
    throw DimensionError("cross_entropy requires a non-empty logit vector, got shape " +
                         x.shape_str());
  }
  if (target_index >= x.size()) {
    throw Error("cross_entropy: target index " + std::to_string(target_index) +
                " outside vocabulary of size " + std::to_string(x.size()));
  }
  const double mx = *std::max_element(x.data(), x.data() + x.size());
  double z = 0.0;
  Tensor probs(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probs[i] = std::exp(x[i] - mx);
    z += probs[i];
  }
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] /= z;
  const double loss = mx + std::log(z) - x[target_index];
  std::uint32_t idx = t.emit(
      Tensor::scalar(loss), {logits.idx},
      [pl = logits.idx, probs, target_index](Tape& tp, std::uint32_t self) {
        const double g = tp.node_grad(self)[0];
        if (!tp.node_requires_grad(pl)) return;
        Tensor& gl = tp.node_grad(pl);
        for (std::size_t i = 0; i < probs.size(); ++i) {
          gl[i] += g * (probs[i] - (i == target_index ? 1.0 : 0.0));
        }
      });
  return Value{&t, idx};
}

Value binary_cross_entropy(Value prob, int label) {
  if (label != 0 && label != 1) {
    throw Error("binary_cross_entropy: label must be 0 or 1, got " + std::to_string(label));
  }
  Tape& t = tape_of({prob});
  const Tensor& vp = t.value(prob);
  if (vp.size() != 1) {
    throw DimensionError("binary_cross_entropy expects a scalar probability, got shape " +
                         vp.shape_str());
  }
  const double raw = vp[0];
  const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
  const double loss = label == 1 ? -std::log(p) : -std::log(1.0 - p);
  const bool clamped = raw < kProbClamp || raw > 1.0 - kProbClamp;
  std::uint32_t idx = t.emit(
      Tensor::scalar(loss), {prob.idx},
      [pp = prob.idx, p, label, clamped](Tape& tp, std::uint32_t self) {
        if (!tp.node_requires_grad(pp) || clamped) return;
        const double g = tp.node_grad(self)[0];
        tp.node_grad(pp)[0] += g * (p - static_cast<double>(label)) / (p * (1.0 - p));
      });
  return Value{&t, idx};
}

Value sum(Value a) {
  Tape& t = tape_of({a});
  const Tensor& x = t.value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  std::uint32_t idx =
      t.emit(Tensor::scalar(s), {a.idx}, [pa = a.idx](Tape& tp, std::uint32_t self) {
        const double g = tp.node_grad(self)[0];
        if (!tp.node_requires_grad(pa)) return;
        Tensor& ga = tp.node_grad(pa);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
      });
  return Value{&t, idx};
}

Value pick(Value a, std::size_t i) {
  Tape& t = tape_of({a});
  const Tensor& x = t.value(a);
  if (i >= x.size()) {
    throw DimensionError("pick: index " + std::to_string(i) + " outside tensor of size " +
                         std::to_string(x.size()));
  }
  std::uint32_t idx =
      t.emit(Tensor::scalar(x[i]), {a.idx}, [pa = a.idx, i](Tape& tp, std::uint32_t self) {
        if (!tp.node_requires_grad(pa)) return;
        tp.node_grad(pa)[i] += tp.node_grad(self)[0];
      });
  return Value{&t, idx};
}

Value row(Value m, std::size_t r) {
  Tape& t = tape_of({m});
  const Tensor& x = t.value(m);
  if (x.ndim() != 2) {
    throw DimensionError("row expects a matrix, got shape " + x.shape_str());
  }
  if (r >= x.rows()) {
    throw DimensionError("row " + std::to_string(r) + " outside matrix with " +
                         std::to_string(x.rows()) + " rows");
  }
  const std::size_t cols = x.cols();
  Tensor out({cols});
  std::copy(x.data() + r * cols, x.data() + (r + 1) * cols, out.data());
  std::uint32_t idx =
      t.emit(std::move(out), {m.idx}, [pm = m.idx, r, cols](Tape& tp, std::uint32_t self) {
        if (!tp.node_requires_grad(pm)) return;
        const Tensor& g = tp.node_grad(self);
        Tensor& gm = tp.node_grad(pm);
        for (std::size_t c = 0; c < cols; ++c) gm[r * cols + c] += g[c];
      });
  return Value{&t, idx};
}

Value stack_cols(const std::vector<Value>& columns) {
  if (columns.empty()) throw DimensionError("stack_cols needs at least one column");
  Tape& t = tape_of(columns);
  const std::size_t n = t.value(columns[0]).size();
  std::vector<std::uint32_t> parents;
  parents.reserve(columns.size());
  for (const Value& col : columns) {
    const Tensor& v = t.value(col);
    if (v.ndim() != 1 || v.size() != n) {
      throw DimensionError("stack_cols: column has shape " + v.shape_str() + ", expected (" +
                           std::to_string(n) + ")");
    }
    parents.push_back(col.idx);
  }
  const std::size_t k = columns.size();
  Tensor out({n, k});
  for (std::size_t j = 0; j < k; ++j) {
    const Tensor& v = t.value(columns[j]);
    for (std::size_t i = 0; i < n; ++i) out.at(i, j) = v[i];
  }
  std::uint32_t idx = t.emit(std::move(out), parents,
                             [ps = parents, n, k](Tape& tp, std::uint32_t self) {
                               const Tensor& g = tp.node_grad(self);
                               for (std::size_t j = 0; j < k; ++j) {
                                 if (!tp.node_requires_grad(ps[j])) continue;
                                 Tensor& gc = tp.node_grad(ps[j]);
                                 for (std::size_t i = 0; i < n; ++i) gc[i] += g[i * k + j];
                               }
                             });
  return Value{&t, idx};
}

}  // namespace ralstm
