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

// Training loops (Adam, early stopping, learning-rate decay), corpus BLEU,
// accuracy / macro-F1, and the four-mode ablation runner.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ralstm/knn_store.hpp"
#include "ralstm/models.hpp"
#include "ralstm/tensor.hpp"

namespace ralstm {

enum class SelectionMetric { kBleu4, kAccuracy };

SelectionMetric selection_metric_from_string(const std::string& name);
std::string to_string(SelectionMetric metric);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t patience_stop = 12;   // consecutive non-improving epochs before stopping
  std::size_t patience_decay = 5;   // consecutive non-improving epochs before each decay
  double shrink = 0.8;              // learning-rate multiplier on decay
  std::size_t max_epochs = 0;
  std::uint64_t seed = 0;
  SelectionMetric metric = SelectionMetric::kAccuracy;
  std::size_t decode_max_len = 20;  // budget for validation decoding

  /// Test hook: when set, replaces the validation metric with a scripted
  /// value per epoch (1-based). Never serialized.
  std::function<double(std::size_t)> validation_override;

  void validate() const;

  static TrainConfig caption_defaults();
  static TrainConfig sentiment_defaults();
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;
  double lr = 0.0;  // rate in effect during this epoch's updates
  bool stopped = false;

  std::string to_json() const;
};

/// Early-stopping and decay state machine, decoupled from any model so the
/// schedule can be verified against scripted metric sequences. "Improvement"
/// means strictly greater than the best seen so far; ties count as
/// non-improving. The stop check runs before the decay check.
class TrainSchedule {
 public:
  TrainSchedule(double lr, double shrink, std::size_t patience_decay, std::size_t patience_stop);

  struct Outcome {
    bool improved = false;
    bool decayed = false;
    bool stopped = false;
    double lr = 0.0;  // rate after any decay
  };

  /// Feed one epoch's validation metric.
  Outcome observe(double metric);

  double lr() const { return lr_; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epoch() const { return epoch_; }

 private:
  double lr_;
  double shrink_;
  std::size_t patience_decay_;
  std::size_t patience_stop_;
  std::size_t epoch_ = 0;
  double best_;
  std::size_t best_epoch_ = 0;
  std::size_t since_improve_ = 0;
  std::size_t since_decay_ = 0;
};

// ---------------------------------------------------------------------------
// In-memory datasets. File parsing lives in the io layer; training consumes
// these directly.
// ---------------------------------------------------------------------------

struct CaptionExample {
  std::uint64_t id = 0;
  Tensor features;  // (feature_dim x K) region features
  std::vector<std::vector<std::uint32_t>> captions;  // >= 1 references, token ids
  /// Representation used for neighbor lookup. May be left empty, in which
  /// case the column mean of `features` is used.
  std::vector<float> query;
};

struct SentimentExample {
  std::uint64_t id = 0;
  std::vector<std::uint32_t> tokens;
  int label = 0;  // 0 or 1
  std::vector<float> query;  // required when retrieval is on
};

struct CaptionDataset {
  std::vector<CaptionExample> train, val, test;
};

struct SentimentDataset {
  std::vector<SentimentExample> train, val, test;
};

/// Frozen neighbor index plus the pre-encoded target vector of every stored
/// example, keyed by id.
struct RetrievalContext {
  const ExampleStore* store = nullptr;
  std::map<std::uint64_t, Tensor> encoded;
};

/// Nearest stored example (optionally excluding one id, for training-time
/// self-exclusion) and its pre-encoded target vector.
const Tensor& retrieve_encoded(const RetrievalContext& ctx, const std::vector<float>& query,
                               std::optional<std::uint64_t> exclude_id);

/// Column mean of a (D x K) feature block as the f32 query vector.
std::vector<float> pooled_query(const Tensor& features);

struct TrainResult {
  std::vector<EpochReport> reports;
  double best_metric = 0.0;
  std::size_t best_epoch = 0;  // 1-based; 0 if training never ran
};

/// Trains in place: shuffled minibatches, Adam, decay/early-stopping per the
/// schedule. On return the model holds the parameters of the best validation
/// epoch. When `run_dir` is non-empty, writes `<run_dir>/epoch_<k>.rafm` per
/// epoch and `<run_dir>/best.rafm` on each improvement.
TrainResult train_caption(CaptionModel& model, const CaptionDataset& data,
                          const RetrievalContext* retrieval, const TrainConfig& cfg,
                          const std::string& run_dir = "");

TrainResult train_sentiment(SentimentModel& model, const SentimentDataset& data,
                            const RetrievalContext* retrieval, const TrainConfig& cfg,
                            const std::string& run_dir = "");

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

using TokenSeq = std::vector<std::string>;

/// Corpus-level cumulative BLEU-1..max_n: geometric mean of clipped modified
/// n-gram precisions times the brevity penalty exp(1 - r/c) when c < r, with
/// r the sum of closest reference lengths (ties toward the shorter).
std::vector<double> bleu(const std::vector<TokenSeq>& candidates,
                         const std::vector<std::vector<TokenSeq>>& references,
                         std::size_t max_n = 4);

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

/// Macro-averaged F1 over the two classes; empty precision/recall fractions
/// (0/0) count as zero.
double f_score(const std::vector<int>& preds, const std::vector<int>& labels);

/// Greedy-decodes every example and scores corpus BLEU-1..4 against its
/// references (token ids are compared as opaque symbols).
std::vector<double> evaluate_caption(const CaptionModel& model,
                                     const std::vector<CaptionExample>& split,
                                     const RetrievalContext* retrieval,
                                     std::size_t max_len = 20);

struct SentimentEval {
  double accuracy = 0.0;
  double f1 = 0.0;
};

SentimentEval evaluate_sentiment(const SentimentModel& model,
                                 const std::vector<SentimentExample>& split,
                                 const RetrievalContext* retrieval);

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

struct AblationRow {
  std::string mode;
  std::map<std::string, double> metrics;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  std::string to_json() const;
  /// Aligned-column plain text, one row per mode.
  std::string to_text() const;
};

/// Trains one model per retrieval mode {off, m0_init, multi_attn, combined}
/// from the same base config and seed, then scores each on the test split.
AblationTable run_caption_ablation(const CaptionModelConfig& base, const CaptionDataset& data,
                                   const RetrievalContext* retrieval, const TrainConfig& cfg);

AblationTable run_sentiment_ablation(const SentimentModelConfig& base,
                                     const SentimentDataset& data,
                                     const RetrievalContext* retrieval, const TrainConfig& cfg);

}  // namespace ralstm
