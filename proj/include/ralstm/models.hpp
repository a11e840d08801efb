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

// The caption decoder and the sentiment classifier, each with selectable
// retrieval augmentation: injecting the retrieved target into the initial
// memory cell, fusing it through two-way attention, both, or neither.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ralstm/attention.hpp"
#include "ralstm/lstm.hpp"
#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"
#include "ralstm/target_encoders.hpp"
#include "ralstm/tensor.hpp"

namespace ralstm {

// Reserved vocabulary slots.
inline constexpr std::uint32_t kPadId = 0;
inline constexpr std::uint32_t kBosId = 1;
inline constexpr std::uint32_t kEosId = 2;
inline constexpr std::uint32_t kUnkId = 3;
inline constexpr std::size_t kNumSpecialTokens = 4;

enum class RetrievalMode { kOff, kM0Init, kMultiAttn, kCombined };

RetrievalMode retrieval_mode_from_string(const std::string& name);
std::string to_string(RetrievalMode mode);

inline bool mode_uses_retrieval(RetrievalMode m) { return m != RetrievalMode::kOff; }
inline bool mode_uses_memory_init(RetrievalMode m) {
  return m == RetrievalMode::kM0Init || m == RetrievalMode::kCombined;
}
inline bool mode_uses_fusion(RetrievalMode m) {
  return m == RetrievalMode::kMultiAttn || m == RetrievalMode::kCombined;
}

struct CaptionModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 512;
  std::size_t feature_dim = 2048;
  std::size_t attn_dim = 0;    // 0: use hidden_dim
  std::size_t encode_dim = 0;  // dimension of the encoded target; 0: embed_dim
  RetrievalMode retrieval = RetrievalMode::kOff;
  TargetEncoderMode encoder = TargetEncoderMode::kWeighted;
  double dropout = 0.5;
  bool train_embeddings = false;
  std::uint64_t seed = 0;

  std::size_t attention_dim() const { return attn_dim != 0 ? attn_dim : hidden_dim; }
  std::size_t target_encode_dim() const;
  void validate() const;
  std::string to_json() const;
  static CaptionModelConfig from_json(const std::string& text);
};

struct SentimentModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 512;
  std::size_t attn_dim = 0;
  std::size_t encode_dim = 0;  // required for class_contextual
  RetrievalMode retrieval = RetrievalMode::kOff;
  TargetEncoderMode encoder = TargetEncoderMode::kPlusMinus;
  double dropout = 0.5;
  bool train_embeddings = false;
  std::uint64_t seed = 0;

  std::size_t attention_dim() const { return attn_dim != 0 ? attn_dim : hidden_dim; }
  std::size_t target_encode_dim() const;
  void validate() const;
  std::string to_json() const;
  static SentimentModelConfig from_json(const std::string& text);
};

/// Recurrent state carried between decode steps.
struct DecodeState {
  Value h;
  Value m;
  std::size_t step = 0;
  std::vector<std::uint32_t> emitted;
};

class CaptionModel {
 public:
  explicit CaptionModel(const CaptionModelConfig& cfg);

  const CaptionModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// Overwrites the embedding rows of vocabulary entries present in the
  /// table; missing entries keep their random initialization.
  void init_embeddings(const EmbeddingTable& table, const std::vector<std::string>& id_to_token);

  /// One bound forward pass over a single image.
  struct Graph {
    Tape* tape = nullptr;
    bool training = false;
    std::mt19937_64* rng = nullptr;
    Value embed;     // (vocab x embed_dim)
    Value features;  // projected features, (hidden x K)
    Value r_yn;      // projected retrieved target; valid iff has_target
    bool has_target = false;
    LstmParams lstm;
    AdditiveAttnParams attn;
    MultiLevelAttnParams fuse;  // bound iff the mode fuses
    Value out_w, out_b;
    DecodeState state;
  };

  /// Binds parameters on the tape, projects the raw (feature_dim x K)
  /// features, and computes the initial recurrent state. `encoded_target`
  /// must be given exactly when the retrieval mode consumes one.
  Graph start(Tape& tape, const Tensor& features, const Tensor* encoded_target,
              bool training = false, std::mt19937_64* dropout_rng = nullptr) const;

  struct StepResult {
    Value logits;  // (vocab)
    Value alpha;   // (K) weights over regions
    Value fusion;  // (2) fusion weights; valid iff has_fusion
    bool has_fusion = false;
  };

  /// Advances one step with the given input token and updates graph.state.
  StepResult step(Graph& graph, std::uint32_t token) const;

  /// Mean per-token cross-entropy of the reference caption under teacher
  /// forcing: inputs are BOS, w1..wn; targets are w1..wn, EOS.
  Value loss(Tape& tape, const Tensor& features, const Tensor* encoded_target,
             const std::vector<std::uint32_t>& caption,
             std::mt19937_64* dropout_rng = nullptr) const;

  /// Greedy argmax decoding from BOS until EOS or max_len tokens; logit ties
  /// break toward the smaller token id. Returns tokens without BOS/EOS.
  std::vector<std::uint32_t> greedy_decode(
      const Tensor& features, const Tensor* encoded_target, std::size_t max_len,
      AttnTrace* trace = nullptr, const std::vector<std::string>* id_to_token = nullptr) const;

  void save(const std::string& path) const;
  static CaptionModel load(const std::string& path);

 private:
  CaptionModelConfig cfg_;
  ParamStore store_;
};

class SentimentModel {
 public:
  explicit SentimentModel(const SentimentModelConfig& cfg);

  const SentimentModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  void init_embeddings(const EmbeddingTable& table, const std::vector<std::string>& id_to_token);

  struct ForwardResult {
    Value prob;    // size-1 positive-class probability
    Value alpha;   // (T) weights over hidden states; valid iff has_attention
    Value fusion;  // (2) fusion weights; valid iff has_attention
    bool has_attention = false;
  };

  /// Runs the classifier over a token sequence. `encoded_label` must be given
  /// exactly when the retrieval mode consumes one.
  ForwardResult forward(Tape& tape, const std::vector<std::uint32_t>& tokens,
                        const Tensor* encoded_label, bool training = false,
                        std::mt19937_64* dropout_rng = nullptr) const;

  /// Binary cross-entropy of forward() against a 0/1 label.
  Value loss(Tape& tape, const std::vector<std::uint32_t>& tokens, const Tensor* encoded_label,
             int label, std::mt19937_64* dropout_rng = nullptr) const;

  /// Inference-only probability; optionally records the attention trace.
  double predict(const std::vector<std::uint32_t>& tokens, const Tensor* encoded_label,
                 AttnTrace* trace = nullptr) const;

  void save(const std::string& path) const;
  static SentimentModel load(const std::string& path);

 private:
  SentimentModelConfig cfg_;
  ParamStore store_;
};

/// Binary checkpoint: magic "RAFM", version, a task-tagged config JSON block,
/// then every named tensor as (name, shape, little-endian f64 data).
/// Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& store);

struct CheckpointData {
  std::string config_json;
  std::map<std::string, Tensor> tensors;
};

CheckpointData load_checkpoint(const std::string& path);

}  // namespace ralstm
