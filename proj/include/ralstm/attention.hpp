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

// Attention blocks: additive attention over a set of feature columns, the
// two-way fusion of an attended context with a retrieved-target vector, and
// the composition of both used by the sentiment classifier. Also the
// machine-readable attention trace emitted for inspection.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"

namespace ralstm {

/// Shapes for additive attention: scores each of the K columns of a
/// (feature_dim x K) matrix against a hidden_dim query through an attn_dim
/// bottleneck.
struct AdditiveAttnSpec {
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t attn_dim = 0;
};

struct AdditiveAttnParams {
  Value w_features;  // (attn_dim x feature_dim)
  Value w_hidden;    // (attn_dim x hidden_dim)
  Value w_score;     // (attn_dim)
};

void additive_attn_create(ParamStore& store, const std::string& prefix,
                          const AdditiveAttnSpec& spec);
AdditiveAttnParams additive_attn_bind(Tape& tape, const ParamStore& store, const std::string& prefix,
                                      const AdditiveAttnSpec& spec);

struct AttnResult {
  Value context;  // (feature_dim): convex combination of the columns
  Value alpha;    // (K): the attention weights, non-negative, sum 1
};

/// score_i = w_score . tanh(w_features v_i + w_hidden h_prev) per column v_i,
/// alpha = softmax(scores), context = V alpha.
AttnResult additive_attention(Value features, Value h_prev, const AdditiveAttnParams& params);

/// Shapes for the two-way fusion: both fused vectors have dim, the query has
/// hidden_dim, the bottleneck attn_dim.
struct MultiLevelAttnSpec {
  std::size_t dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t attn_dim = 0;
};

struct MultiLevelAttnParams {
  Value w_merge;   // (attn_dim x 2 dim)
  Value w_hidden;  // (attn_dim x hidden_dim)
  Value w_pair;    // (2 x attn_dim): one logit per fused item
};

void multi_level_attn_create(ParamStore& store, const std::string& prefix,
                             const MultiLevelAttnSpec& spec);
MultiLevelAttnParams multi_level_attn_bind(Tape& tape, const ParamStore& store,
                                           const std::string& prefix,
                                           const MultiLevelAttnSpec& spec);

struct MultiLevelResult {
  Value context;  // (dim): weights[0] * context_in + weights[1] * retrieved
  Value weights;  // (2): softmax over the two item logits
};

/// Fuses an attended context vector with the retrieved-target vector by a
/// learned two-way softmax over [context, retrieved].
MultiLevelResult multi_level_attention(Value context, Value retrieved, Value h_prev,
                                       const MultiLevelAttnParams& params);

struct SentimentAttnResult {
  Value context;  // (dim): fused output
  Value alpha;    // (T): weights over the hidden-state columns
  Value weights;  // (2): [own context, retrieved] fusion weights
};

/// Sentiment variant: additive attention over all hidden states (columns of
/// hidden_states) queried by the last one, then two-way fusion with the
/// retrieved-label vector.
SentimentAttnResult sentiment_attention(Value hidden_states, Value h_last, Value retrieved,
                                        const AdditiveAttnParams& attn,
                                        const MultiLevelAttnParams& fusion);

/// One decode step of the attention record: weights over input regions (or
/// hidden states) plus the two fusion weights.
struct AttnTraceStep {
  std::string token;
  std::vector<double> alpha_regions;
  double alpha_image = 1.0;
  double alpha_retrieved = 0.0;

  bool operator==(const AttnTraceStep&) const = default;
};

struct AttnTrace {
  std::vector<AttnTraceStep> steps;

  /// Throws when a step's region weights do not sum to 1 within 1e-6 or the
  /// fusion pair does not sum to 1 within 1e-9.
  void validate() const;

  std::string to_json() const;
  static AttnTrace from_json(const std::string& text);

  bool operator==(const AttnTrace&) const = default;
};

/// Builds a trace step from tape values. `fusion_weights` may be null for
/// models without the two-way fusion (the pair then reads (1, 0)).
AttnTraceStep make_trace_step(const std::string& token, const Tensor& alpha,
                              const Tensor* fusion_weights);

}  // namespace ralstm
