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

#include "ralstm/attention.hpp"

#include <cmath>

#include <json.hpp>

#include "ralstm/errors.hpp"
#include "ralstm/ops.hpp"

namespace ralstm {

void additive_attn_create(ParamStore& store, const std::string& prefix,
                          const AdditiveAttnSpec& spec) {
  if (spec.feature_dim == 0 || spec.hidden_dim == 0 || spec.attn_dim == 0) {
    throw ConfigError("attention dimensions must be positive");
  }
  store.create(prefix + ".w_features", {spec.attn_dim, spec.feature_dim}, spec.feature_dim);
  store.create(prefix + ".w_hidden", {spec.attn_dim, spec.hidden_dim}, spec.hidden_dim);
  store.create(prefix + ".w_score", {spec.attn_dim}, spec.attn_dim);
}

AdditiveAttnParams additive_attn_bind(Tape& tape, const ParamStore& store, const std::string& prefix,
                                      const AdditiveAttnSpec& spec) {
  (void)spec;
  AdditiveAttnParams params;
  params.w_features = tape.param(prefix + ".w_features", store.get(prefix + ".w_features"));
  params.w_hidden = tape.param(prefix + ".w_hidden", store.get(prefix + ".w_hidden"));
  params.w_score = tape.param(prefix + ".w_score", store.get(prefix + ".w_score"));
  return params;
}

AttnResult additive_attention(Value features, Value h_prev, const AdditiveAttnParams& params) {
  Tape& tape = *features.tape;
  const Tensor& v = tape.value(features);
  if (v.ndim() != 2) {
    throw DimensionError("attention features must be a matrix, got shape " + v.shape_str());
  }
  if (v.cols() == 0) throw Error("attention needs at least one feature column");

  // (attn_dim x K) scores through the tanh bottleneck, queried per column.
  Value projected = matmul(params.w_features, features);
  Value query = matmul(params.w_hidden, h_prev);
  Value scores = matmul(params.w_score, ralstm::tanh(add_col_broadcast(projected, query)));

  AttnResult result;
  result.alpha = softmax(scores);
  result.context = matmul(features, result.alpha);
  return result;
}

void multi_level_attn_create(ParamStore& store, const std::string& prefix,
                             const MultiLevelAttnSpec& spec) {
  if (spec.dim == 0 || spec.hidden_dim == 0 || spec.attn_dim == 0) {
    throw ConfigError("attention dimensions must be positive");
  }
  store.create(prefix + ".w_merge", {spec.attn_dim, 2 * spec.dim}, 2 * spec.dim);
  store.create(prefix + ".w_hidden", {spec.attn_dim, spec.hidden_dim}, spec.hidden_dim);
  store.create(prefix + ".w_pair", {2, spec.attn_dim}, spec.attn_dim);
}

MultiLevelAttnParams multi_level_attn_bind(Tape& tape, const ParamStore& store,
                                           const std::string& prefix,
                                           const MultiLevelAttnSpec& spec) {
  (void)spec;
  MultiLevelAttnParams params;
  params.w_merge = tape.param(prefix + ".w_merge", store.get(prefix + ".w_merge"));
  params.w_hidden = tape.param(prefix + ".w_hidden", store.get(prefix + ".w_hidden"));
  params.w_pair = tape.param(prefix + ".w_pair", store.get(prefix + ".w_pair"));
  return params;
}

MultiLevelResult multi_level_attention(Value context, Value retrieved, Value h_prev,
                                       const MultiLevelAttnParams& params) {
  Tape& tape = *context.tape;
  const Tensor& c = tape.value(context);
  const Tensor& r = tape.value(retrieved);
  if (c.ndim() != 1 || r.ndim() != 1 || c.size() != r.size()) {
    throw DimensionError("fused vectors must be same-length vectors, got " + c.shape_str() +
                         " and " + r.shape_str());
  }

  Value merged = matmul(params.w_merge, concat(context, retrieved));
  Value query = matmul(params.w_hidden, h_prev);
  Value logits = matmul(params.w_pair, ralstm::tanh(add(merged, query)));

  MultiLevelResult result;
  result.weights = softmax(logits);
  result.context = add(mul_scalar(context, pick(result.weights, 0)),
                       mul_scalar(retrieved, pick(result.weights, 1)));
  return result;
}

SentimentAttnResult sentiment_attention(Value hidden_states, Value h_last, Value retrieved,
                                        const AdditiveAttnParams& attn,
                                        const MultiLevelAttnParams& fusion) {
  AttnResult inner = additive_attention(hidden_states, h_last, attn);
  MultiLevelResult fused = multi_level_attention(inner.context, retrieved, h_last, fusion);
  SentimentAttnResult result;
  result.context = fused.context;
  result.alpha = inner.alpha;
  result.weights = fused.weights;
  return result;
}

void AttnTrace::validate() const {
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const AttnTraceStep& step = steps[s];
    if (step.alpha_regions.empty()) {
      throw Error("trace step " + std::to_string(s) + " has no region weights");
    }
    double sum = 0.0;
    for (double a : step.alpha_regions) {
      if (a < 0.0) throw Error("negative region weight in trace step " + std::to_string(s));
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error("region weights in trace step " + std::to_string(s) + " sum to " +
                  std::to_string(sum));
    }
    if (std::abs(step.alpha_image + step.alpha_retrieved - 1.0) > 1e-9) {
      throw Error("fusion weights in trace step " + std::to_string(s) + " do not sum to 1");
    }
  }
}

std::string AttnTrace::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& step : steps) {
    arr.push_back({{"token", step.token},
                   {"alpha_regions", step.alpha_regions},
                   {"alpha_image", step.alpha_image},
                   {"alpha_retrieved", step.alpha_retrieved}});
  }
  return arr.dump(2);
}

AttnTrace AttnTrace::from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bad attention trace JSON: ") + e.what());
  }
  if (!arr.is_array()) throw FormatError("attention trace must be a JSON array");
  AttnTrace trace;
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("token") || !item.contains("alpha_regions") ||
        !item.contains("alpha_image") || !item.contains("alpha_retrieved")) {
      throw FormatError("attention trace step missing required fields");
    }
    AttnTraceStep step;
    step.token = item.at("token").get<std::string>();
    step.alpha_regions = item.at("alpha_regions").get<std::vector<double>>();
    step.alpha_image = item.at("alpha_image").get<double>();
    step.alpha_retrieved = item.at("alpha_retrieved").get<double>();
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

AttnTraceStep make_trace_step(const std::string& token, const Tensor& alpha,
                              const Tensor* fusion_weights) {
  AttnTraceStep step;
  step.token = token;
  step.alpha_regions.assign(alpha.data(), alpha.data() + alpha.size());
  if (fusion_weights != nullptr) {
    if (fusion_weights->size() != 2) {
      throw DimensionError("fusion weights must have exactly 2 entries, got shape " +
                           fusion_weights->shape_str());
    }
    step.alpha_image = (*fusion_weights)[0];
    step.alpha_retrieved = (*fusion_weights)[1];
  }
  return step;
}

}  // namespace ralstm
