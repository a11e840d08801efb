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

// Dataset, feature-file, and vocabulary formats, plus the synthetic benchmark
// generator. Everything here is deterministic given its inputs and a seed.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ralstm/target_encoders.hpp"
#include "ralstm/tensor.hpp"
#include "ralstm/train_eval.hpp"

namespace ralstm {

// ---------------------------------------------------------------------------
// Atomic file writes
// ---------------------------------------------------------------------------

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename, so readers never observe a half-written file.
void atomic_write_file(const std::string& path, const std::string& bytes);

// ---------------------------------------------------------------------------
// Region-feature files ("RAFX"): magic, u32 region count K, u32 dim D, then
// K*D little-endian f32 values, region-major. Total length 12 + 4*K*D bytes.
// ---------------------------------------------------------------------------

/// Saves a (D x K) feature block, one column per region.
void save_features(const std::string& path, const Tensor& features);

/// Loads a feature file back into a (D x K) block.
Tensor load_features(const std::string& path);

// ---------------------------------------------------------------------------
// Tokenization and vocabulary
// ---------------------------------------------------------------------------

/// Lowercases and splits on runs of whitespace.
std::vector<std::string> tokenize(const std::string& text);

/// Token-id mapping with the four reserved ids (pad, bos, eos, unk) up front.
/// Built from training text only; tokens below the occurrence threshold fall
/// back to the unk id.
class Vocab {
 public:
  Vocab();

  /// Counts tokens across `texts` and keeps those occurring at least
  /// `min_count` times, ordered by count descending then token ascending.
  static Vocab build(const std::vector<std::vector<std::string>>& texts, std::size_t min_count);

  /// Manifest round trip: one token per line, line number = id.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  std::uint32_t id_or_unk(const std::string& token) const;
  std::vector<std::uint32_t> encode(const std::vector<std::string>& tokens) const;
  const std::string& token(std::uint32_t id) const;
  const std::vector<std::string>& id_to_token() const { return id_to_token_; }

  std::size_t size() const { return id_to_token_.size(); }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::uint32_t> token_to_id_;
};

// ---------------------------------------------------------------------------
// Datasets: JSON-lines files, one record per line.
//
// Caption record:   {"id": 7, "split": "train", "features": "f/7.rafx",
//                    "captions": ["a dog runs", ...]}
// Sentiment record: {"id": 7, "split": "train", "text": "good fun", "label": 1}
//
// Feature paths are resolved relative to the dataset file's directory.
// ---------------------------------------------------------------------------

enum class Split { kTrain, kVal, kTest };

Split split_from_string(const std::string& name);
std::string to_string(Split split);

struct DatasetRecord {
  std::uint64_t id = 0;
  Split split = Split::kTrain;
  // Caption payload.
  std::string feature_path;
  std::vector<std::string> captions;
  // Sentiment payload.
  std::string text;
  int label = -1;

  bool is_caption() const { return !feature_path.empty(); }
  bool is_sentiment() const { return label >= 0; }
};

/// Parses every line of a JSON-lines dataset file. Malformed lines, unknown
/// splits, out-of-range labels, empty caption lists, and records mixing both
/// payload kinds raise errors prefixed with "<path>:<line>:".
std::vector<DatasetRecord> read_dataset_records(const std::string& path);

struct LoadedCaptionData {
  CaptionDataset data;  // captions encoded as token ids, features loaded
  Vocab vocab;          // built from the train split
  /// Tokenized reference captions per example id (pre-encoding), used to
  /// build the retrieval index and to render decoded ids back to text.
  std::map<std::uint64_t, std::vector<std::vector<std::string>>> tokens;
};

/// Loads a caption dataset: reads records, loads each referenced feature
/// file, builds the vocabulary from train-split captions, and encodes every
/// caption. Throws if any record carries a sentiment payload.
LoadedCaptionData load_caption_dataset(const std::string& path, std::size_t min_count = 5);

struct LoadedSentimentData {
  SentimentDataset data;
  Vocab vocab;
  std::map<std::uint64_t, std::vector<std::string>> tokens;  // tokenized text per id
};

LoadedSentimentData load_sentiment_dataset(const std::string& path, std::size_t min_count = 5);

/// Fills each example's neighbor-lookup query with its stored sentence
/// vector; every example id must be present.
void fill_queries_from_sentences(std::vector<SentimentExample>& split,
                                 const SentenceEmbeddings& sentences);

/// Fills queries with the norm-weighted average of each example's word
/// vectors. Examples whose tokens are all out of vocabulary raise an error.
void fill_queries_from_words(std::vector<SentimentExample>& split,
                             const std::map<std::uint64_t, std::vector<std::string>>& tokens,
                             const EmbeddingTable& words);

// ---------------------------------------------------------------------------
// Synthetic benchmark
// ---------------------------------------------------------------------------

/// Generator settings. Prototype vectors are drawn once, each is assigned a
/// fixed target (a three-token caption or a binary label), and every example
/// is its prototype plus per-coordinate Gaussian noise, so nearest-neighbor
/// lookup recovers the target as noise shrinks.
struct SynthSpec {
  std::size_t prototypes = 0;  // P >= 2
  std::size_t dim = 0;
  double noise = 0.0;  // per-coordinate standard deviation
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::size_t test_count = 0;
  std::uint64_t seed = 0;
  std::string task;  // "caption" or "sentiment"
  /// Fraction of prototypes reserved for the val/test splits only; 0 means
  /// all splits share the full prototype pool.
  double held_fraction = 0.0;
  /// Sentiment only: probability that a text's first token truthfully names
  /// its label, giving the text-only model a weak signal to learn.
  double text_signal = 0.3;

  void validate() const;

  static SynthSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct SynthResult {
  std::string dataset_path;             // <out>/dataset.jsonl
  std::string word_vectors_path;        // caption task: <out>/words.vec
  std::string sentence_vectors_path;    // sentiment task: <out>/sentences.vec
  std::string features_dir;             // caption task: <out>/features/
  double min_separation = 0.0;          // smallest pairwise prototype distance
};

/// Writes the benchmark files under `out_dir` (created if needed). Throws if
/// the drawn prototypes violate the separation invariant
/// (noise < min_separation / 2).
SynthResult synth_generate(const SynthSpec& spec, const std::string& out_dir);

}  // namespace ralstm
