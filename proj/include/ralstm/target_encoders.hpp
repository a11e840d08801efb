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

// Fixed-length representations of retrieved targets: pooled word vectors for
// captions, class-level vectors for sentiment labels, plus the learned
// projection that maps them into the recurrent state dimensionality.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"
#include "ralstm/tensor.hpp"

namespace ralstm {

/// Static word vectors loaded from a text table (one "token v1 .. vD" line
/// per word, optionally preceded by a "count dim" header line).
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  static EmbeddingTable load(const std::string& path);

  void put(const std::string& token, std::vector<double> vector);
  bool contains(const std::string& token) const { return vectors_.count(token) != 0; }
  const std::vector<double>& at(const std::string& token) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Precomputed per-example sentence vectors, ingested from a text file with a
/// "#dim D" header followed by "id<TAB>v1 v2 .. vD" lines.
class SentenceEmbeddings {
 public:
  explicit SentenceEmbeddings(std::size_t dim);

  static SentenceEmbeddings load(const std::string& path);

  void put(std::uint64_t id, std::vector<double> vector);
  bool contains(std::uint64_t id) const { return vectors_.count(id) != 0; }
  const std::vector<double>& at(std::uint64_t id) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::size_t dim_;
  std::unordered_map<std::uint64_t, std::vector<double>> vectors_;
};

/// Mean of the in-vocabulary token vectors; unknown tokens are skipped.
Tensor avg_embedding(const std::vector<std::string>& tokens, const EmbeddingTable& table);

/// Mean of the in-vocabulary token vectors weighted by their L2 norms.
Tensor norm_weighted_avg(const std::vector<std::string>& tokens, const EmbeddingTable& table);

/// The stored sentence vector for an example, verbatim.
Tensor contextual_embedding(std::uint64_t example_id, const SentenceEmbeddings& embeddings);

enum class TargetEncoderMode {
  kAvg,
  kWeighted,
  kContextual,
  kPlusMinus,
  kClassAvg,
  kClassWeighted,
  kClassContextual,
};

TargetEncoderMode target_encoder_mode_from_string(const std::string& name);
std::string to_string(TargetEncoderMode mode);

/// True for the modes that encode a retrieved caption (token sequence).
bool is_caption_encoder_mode(TargetEncoderMode mode);
/// True for the modes that encode a retrieved sentiment label.
bool is_sentiment_encoder_mode(TargetEncoderMode mode);

/// Minimal view of one training sentence used to build class-level vectors.
struct LabeledSentence {
  std::uint64_t id = 0;
  std::vector<std::string> tokens;
  int label = 0;
};

/// All-ones (label 1) or all-minus-ones (label 0) vector of the given size.
Tensor plus_minus_encoding(int label, std::size_t dim);

/// Encodes a retrieved sentiment label as a fixed class vector. The class
/// vectors for the class-mean modes are computed once, from the training
/// split only.
class SentimentTargetEncoder {
 public:
  /// kPlusMinus: no corpus needed, output dimension given directly.
  SentimentTargetEncoder(TargetEncoderMode mode, std::size_t dim);

  /// kClassAvg / kClassWeighted: per-class mean of per-sentence pooled word
  /// vectors under the matching caption-style encoder.
  SentimentTargetEncoder(TargetEncoderMode mode,
                         const std::vector<LabeledSentence>& train_split,
                         const EmbeddingTable& table);

  /// kClassContextual: per-class mean of stored sentence vectors.
  SentimentTargetEncoder(TargetEncoderMode mode,
                         const std::vector<LabeledSentence>& train_split,
                         const SentenceEmbeddings& embeddings);

  const Tensor& encode(int label) const;
  std::size_t dim() const { return class_vectors_[0].size(); }
  TargetEncoderMode mode() const { return mode_; }

 private:
  TargetEncoderMode mode_;
  Tensor class_vectors_[2];
};

/// Learned affine map from the encoder output space to the recurrent state
/// space. `use_bias = false` makes the map exactly linear.
struct ProjectionSpec {
  std::size_t encode_dim = 0;
  std::size_t lstm_dim = 0;
  bool use_bias = true;
};

struct Projection {
  Value weight;
  Value bias;  // unused when the spec disables the bias
  bool use_bias = true;
};

/// Registers `prefix + ".weight"` (and `.bias` when enabled) in the store.
void projection_create(ParamStore& store, const std::string& prefix, const ProjectionSpec& spec);

/// Binds the projection parameters onto a tape.
Projection projection_bind(Tape& tape, const ParamStore& store, const std::string& prefix,
                           const ProjectionSpec& spec);

/// Applies the projection to an encoded target vector.
Value project(const Projection& proj, Value f_yn);

}  // namespace ralstm
