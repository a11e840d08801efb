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

#include "ralstm/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ralstm/errors.hpp"
#include "ralstm/optimizer.hpp"

namespace ralstm {

namespace {

void add_grads(GradMap& acc, const GradMap& grads) {
  for (const auto& [name, g] : grads) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, g);
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
}

void scale_grads(GradMap& acc, double s) {
  for (auto& [name, g] : acc) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
  }
}

struct TaskHooks {
  /// Runs one example's forward+backward; returns the loss value and fills
  /// the gradient map.
  std::function<double(std::size_t, std::mt19937_64&, std::mt19937_64&, GradMap&)> backward_example;
  std::function<double()> validation_metric;
  std::function<void(const std::string&)> save;
};

TrainResult training_loop(ParamStore& params, std::size_t train_count, const TrainConfig& cfg,
                          const TaskHooks& hooks, const std::string& run_dir) {
  cfg.validate();
  if (train_count == 0) throw Error("empty training split");
  if (!run_dir.empty()) std::filesystem::create_directories(run_dir);

  Adam opt({cfg.lr, 0.9, 0.999, 1e-8});
  TrainSchedule sched(cfg.lr, cfg.shrink, cfg.patience_decay, cfg.patience_stop);
  // Independent streams so batch order, reference sampling, and dropout masks
  // do not perturb one another across config changes.
  std::mt19937_64 order_rng(cfg.seed * 0x9E3779B97F4A7C15ull + 1);
  std::mt19937_64 sample_rng(cfg.seed * 0x9E3779B97F4A7C15ull + 2);
  std::mt19937_64 dropout_rng(cfg.seed * 0x9E3779B97F4A7C15ull + 3);

  std::vector<std::size_t> order(train_count);
  std::iota(order.begin(), order.end(), 0);
  std::map<std::string, Tensor> best_params = params.tensors();

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_count; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, train_count);
      GradMap acc;
      for (std::size_t i = start; i < end; ++i) {
        GradMap grads;
        loss_sum += hooks.backward_example(order[i], sample_rng, dropout_rng, grads);
        add_grads(acc, grads);
      }
      scale_grads(acc, 1.0 / static_cast<double>(end - start));
      opt.step(params, acc);
    }

    const double lr_during = opt.learning_rate();
    const double metric =
        cfg.validation_override ? cfg.validation_override(epoch) : hooks.validation_metric();
    TrainSchedule::Outcome out = sched.observe(metric);

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_sum / static_cast<double>(train_count);
    report.val_metric = metric;
    report.lr = lr_during;
    report.stopped = out.stopped;
    result.reports.push_back(report);

    if (out.improved) {
      best_params = params.tensors();
      result.best_metric = metric;
      result.best_epoch = epoch;
      if (!run_dir.empty()) hooks.save(run_dir + "/best.rafm");
    }
    if (!run_dir.empty()) hooks.save(run_dir + "/epoch_" + std::to_string(epoch) + ".rafm");
    if (out.stopped) break;
    if (out.decayed) opt.set_learning_rate(out.lr);
  }

  params.tensors() = best_params;
  return result;
}

std::size_t closest_ref_length(std::size_t cand_len,
                               const std::vector<TokenSeq>& refs) {
  std::size_t best = refs[0].size();
  for (const TokenSeq& ref : refs) {
    const std::size_t len = ref.size();
    const std::size_t d_new = len > cand_len ? len - cand_len : cand_len - len;
    const std::size_t d_old = best > cand_len ? best - cand_len : cand_len - best;
    if (d_new < d_old || (d_new == d_old && len < best)) best = len;
  }
  return best;
}

/// n-gram histogram keyed by the joined tokens (0x1f cannot occur inside a
/// whitespace token).
std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSeq& tokens, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

TokenSeq ids_to_symbols(const std::vector<std::uint32_t>& ids) {
  TokenSeq out;
  out.reserve(ids.size());
  for (std::uint32_t id : ids) out.push_back(std::to_string(id));
  return out;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

SelectionMetric selection_metric_from_string(const std::string& name) {
  if (name == "bleu4") return SelectionMetric::kBleu4;
  if (name == "accuracy") return SelectionMetric::kAccuracy;
  throw ConfigError("unknown selection metric '" + name + "'");
}

std::string to_string(SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::kBleu4: return "bleu4";
    case SelectionMetric::kAccuracy: return "accuracy";
  }
  throw ConfigError("unknown selection metric");
}

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (shrink <= 0.0 || shrink >= 1.0) {
    throw ConfigError("shrink factor must lie in (0, 1), got " + std::to_string(shrink));
  }
  if (patience_decay == 0) throw ConfigError("patience_decay must be positive");
  if (patience_decay >= patience_stop) {
    throw ConfigError("patience_decay (" + std::to_string(patience_decay) +
                      ") must be smaller than patience_stop (" + std::to_string(patience_stop) +
                      ")");
  }
  if (decode_max_len == 0) throw ConfigError("decode_max_len must be positive");
}

TrainConfig TrainConfig::caption_defaults() {
  TrainConfig cfg;
  cfg.lr = 4e-4;
  cfg.metric = SelectionMetric::kBleu4;
  return cfg;
}

TrainConfig TrainConfig::sentiment_defaults() {
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.metric = SelectionMetric::kAccuracy;
  return cfg;
}

std::string EpochReport::to_json() const {
  nlohmann::json j = {{"epoch", epoch},
                      {"train_loss", train_loss},
                      {"val_metric", val_metric},
                      {"lr", lr},
                      {"stopped", stopped}};
  return j.dump();
}

TrainSchedule::TrainSchedule(double lr, double shrink, std::size_t patience_decay,
                             std::size_t patience_stop)
    : lr_(lr),
      shrink_(shrink),
      patience_decay_(patience_decay),
      patience_stop_(patience_stop),
      best_(-std::numeric_limits<double>::infinity()) {
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (shrink <= 0.0 || shrink >= 1.0) throw ConfigError("shrink factor must lie in (0, 1)");
  if (patience_decay == 0 || patience_decay >= patience_stop) {
    throw ConfigError("patience_decay must be positive and smaller than patience_stop");
  }
}

TrainSchedule::Outcome TrainSchedule::observe(double metric) {
  ++epoch_;
  Outcome out;
  out.improved = metric > best_;
  if (out.improved) {
    best_ = metric;
    best_epoch_ = epoch_;
    since_improve_ = 0;
    since_decay_ = 0;
  } else {
    ++since_improve_;
    ++since_decay_;
  }
  out.stopped = since_improve_ >= patience_stop_;
  if (!out.stopped && since_decay_ >= patience_decay_) {
    lr_ *= shrink_;
    since_decay_ = 0;
    out.decayed = true;
  }
  out.lr = lr_;
  return out;
}

const Tensor& retrieve_encoded(const RetrievalContext& ctx, const std::vector<float>& query,
                               std::optional<std::uint64_t> exclude_id) {
  if (ctx.store == nullptr) throw ConfigError("retrieval context has no store");
  IdSet exclude;
  if (exclude_id.has_value()) exclude.insert(*exclude_id);
  const std::vector<RetrievalHit> hits = ctx.store->search(query, 1, exclude);
  const std::uint64_t id = hits.front().id;
  auto it = ctx.encoded.find(id);
  if (it == ctx.encoded.end()) {
    throw NotFoundError("no encoded target for retrieved example id " + std::to_string(id));
  }
  return it->second;
}

std::vector<float> pooled_query(const Tensor& features) {
  if (features.ndim() != 2 || features.cols() == 0) {
    throw DimensionError("feature block must be a (D x K) matrix with K >= 1, got " +
                         features.shape_str());
  }
  std::vector<float> out(features.rows());
  for (std::size_t d = 0; d < features.rows(); ++d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < features.cols(); ++k) acc += features.at(d, k);
    out[d] = static_cast<float>(acc / static_cast<double>(features.cols()));
  }
  return out;
}

TrainResult train_caption(CaptionModel& model, const CaptionDataset& data,
                          const RetrievalContext* retrieval, const TrainConfig& cfg,
                          const std::string& run_dir) {
  if (cfg.metric != SelectionMetric::kBleu4) {
    throw ConfigError("caption training selects on bleu4");
  }
  if (data.train.empty()) throw Error("empty training split");
  if (data.val.empty()) throw Error("empty validation split");
  const bool uses_retrieval = mode_uses_retrieval(model.config().retrieval);
  if (uses_retrieval) {
    if (retrieval == nullptr || retrieval->store == nullptr) {
      throw ConfigError("retrieval mode " + to_string(model.config().retrieval) +
                        " needs a retrieval store");
    }
    if (!retrieval->store->frozen()) {
      throw ConfigError("retrieval store must be frozen before training");
    }
  }
  for (const CaptionExample& ex : data.train) {
    if (ex.captions.empty()) {
      throw Error("training example " + std::to_string(ex.id) + " has no reference captions");
    }
  }

  std::vector<std::vector<float>> queries;
  if (uses_retrieval) {
    queries.reserve(data.train.size());
    for (const CaptionExample& ex : data.train) {
      queries.push_back(ex.query.empty() ? pooled_query(ex.features) : ex.query);
    }
  }

  TaskHooks hooks;
  hooks.backward_example = [&](std::size_t idx, std::mt19937_64& sample_rng,
                               std::mt19937_64& dropout_rng, GradMap& grads) {
    const CaptionExample& ex = data.train[idx];
    std::size_t ref = 0;
    if (ex.captions.size() > 1) {
      ref = std::uniform_int_distribution<std::size_t>(0, ex.captions.size() - 1)(sample_rng);
    }
    Tape tape;
    Tensor encoded;
    const Tensor* encoded_ptr = nullptr;
    if (uses_retrieval) {
      encoded = retrieve_encoded(*retrieval, queries[idx], ex.id);
      encoded_ptr = &encoded;
    }
    Value loss = model.loss(tape, ex.features, encoded_ptr, ex.captions[ref], &dropout_rng);
    const double value = tape.value(loss)[0];
    grads = tape.backward(loss);
    return value;
  };
  hooks.validation_metric = [&]() {
    return evaluate_caption(model, data.val, uses_retrieval ? retrieval : nullptr,
                            cfg.decode_max_len)[3];
  };
  hooks.save = [&](const std::string& path) { model.save(path); };

  return training_loop(model.params(), data.train.size(), cfg, hooks, run_dir);
}

TrainResult train_sentiment(SentimentModel& model, const SentimentDataset& data,
                            const RetrievalContext* retrieval, const TrainConfig& cfg,
                            const std::string& run_dir) {
  if (cfg.metric != SelectionMetric::kAccuracy) {
    throw ConfigError("sentiment training selects on accuracy");
  }
  if (data.train.empty()) throw Error("empty training split");
  if (data.val.empty()) throw Error("empty validation split");
  const bool uses_retrieval = mode_uses_retrieval(model.config().retrieval);
  if (uses_retrieval) {
    if (retrieval == nullptr || retrieval->store == nullptr) {
      throw ConfigError("retrieval mode " + to_string(model.config().retrieval) +
                        " needs a retrieval store");
    }
    if (!retrieval->store->frozen()) {
      throw ConfigError("retrieval store must be frozen before training");
    }
    for (const SentimentExample& ex : data.train) {
      if (ex.query.empty()) {
        throw ConfigError("example " + std::to_string(ex.id) +
                          " has no retrieval query vector");
      }
    }
  }

  TaskHooks hooks;
  hooks.backward_example = [&](std::size_t idx, std::mt19937_64&, std::mt19937_64& dropout_rng,
                               GradMap& grads) {
    const SentimentExample& ex = data.train[idx];
    Tape tape;
    Tensor encoded;
    const Tensor* encoded_ptr = nullptr;
    if (uses_retrieval) {
      encoded = retrieve_encoded(*retrieval, ex.query, ex.id);
      encoded_ptr = &encoded;
    }
    Value loss = model.loss(tape, ex.tokens, encoded_ptr, ex.label, &dropout_rng);
    const double value = tape.value(loss)[0];
    grads = tape.backward(loss);
    return value;
  };
  hooks.validation_metric = [&]() {
    return evaluate_sentiment(model, data.val, uses_retrieval ? retrieval : nullptr).accuracy;
  };
  hooks.save = [&](const std::string& path) { model.save(path); };

  return training_loop(model.params(), data.train.size(), cfg, hooks, run_dir);
}

std::vector<double> bleu(const std::vector<TokenSeq>& candidates,
                         const std::vector<std::vector<TokenSeq>>& references,
                         std::size_t max_n) {
  if (candidates.empty()) throw Error("no candidates to score");
  if (candidates.size() != references.size()) {
    throw Error("got " + std::to_string(candidates.size()) + " candidates but " +
                std::to_string(references.size()) + " reference sets");
  }
  if (max_n == 0) throw Error("bleu needs max_n >= 1");

  std::vector<double> matches(max_n, 0.0), totals(max_n, 0.0);
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const TokenSeq& cand = candidates[c];
    const std::vector<TokenSeq>& refs = references[c];
    if (refs.empty()) {
      throw Error("candidate " + std::to_string(c) + " has no references");
    }
    cand_len += cand.size();
    ref_len += closest_ref_length(cand.size(), refs);

    for (std::size_t n = 1; n <= max_n; ++n) {
      auto cand_counts = ngram_counts(cand, n);
      if (cand.size() >= n) totals[n - 1] += cand.size() - n + 1;
      if (cand_counts.empty()) continue;
      std::unordered_map<std::string, std::size_t> max_ref;
      for (const TokenSeq& ref : refs) {
        for (const auto& [gram, count] : ngram_counts(ref, n)) {
          std::size_t& slot = max_ref[gram];
          slot = std::max(slot, count);
        }
      }
      for (const auto& [gram, count] : cand_counts) {
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  std::vector<double> scores(max_n, 0.0);
  if (cand_len == 0) return scores;  // nothing generated at all
  const double bp =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  double log_sum = 0.0;
  bool dead = false;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (totals[n - 1] == 0.0 || matches[n - 1] == 0.0) {
      dead = true;  // this order and all cumulative scores above it are zero
    } else {
      log_sum += std::log(matches[n - 1] / totals[n - 1]);
    }
    scores[n - 1] = dead ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n));
  }
  return scores;
}

namespace {
void check_binary_pairs(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) {
    throw Error("got " + std::to_string(preds.size()) + " predictions but " +
                std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw Error("no predictions to score");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1)) {
      throw Error("predictions and labels must be 0 or 1");
    }
  }
}
}  // namespace

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  check_binary_pairs(preds, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double f_score(const std::vector<int>& preds, const std::vector<int>& labels) {
  check_binary_pairs(preds, labels);
  double f_sum = 0.0;
  for (int cls : {0, 1}) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == cls, l = labels[i] == cls;
      if (p && l) ++tp;
      if (p && !l) ++fp;
      if (!p && l) ++fn;
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    const double f1 =
        precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    f_sum += f1;
  }
  return f_sum / 2.0;
}

std::vector<double> evaluate_caption(const CaptionModel& model,
                                     const std::vector<CaptionExample>& split,
                                     const RetrievalContext* retrieval, std::size_t max_len) {
  if (split.empty()) throw Error("empty evaluation split");
  const bool uses_retrieval = mode_uses_retrieval(model.config().retrieval);
  if (uses_retrieval && (retrieval == nullptr || retrieval->store == nullptr)) {
    throw ConfigError("retrieval mode " + to_string(model.config().retrieval) +
                      " needs a retrieval store");
  }

  std::vector<TokenSeq> candidates;
  std::vector<std::vector<TokenSeq>> references;
  candidates.reserve(split.size());
  references.reserve(split.size());
  for (const CaptionExample& ex : split) {
    if (ex.captions.empty()) {
      throw Error("example " + std::to_string(ex.id) + " has no reference captions");
    }
    Tensor encoded;
    const Tensor* encoded_ptr = nullptr;
    if (uses_retrieval) {
      // Test-time lookup keeps every stored example, including the query's own
      // id when it happens to be stored.
      encoded = retrieve_encoded(
          *retrieval, ex.query.empty() ? pooled_query(ex.features) : ex.query, std::nullopt);
      encoded_ptr = &encoded;
    }
    candidates.push_back(ids_to_symbols(model.greedy_decode(ex.features, encoded_ptr, max_len)));
    std::vector<TokenSeq> refs;
    refs.reserve(ex.captions.size());
    for (const auto& caption : ex.captions) refs.push_back(ids_to_symbols(caption));
    references.push_back(std::move(refs));
  }
  return bleu(candidates, references, 4);
}

SentimentEval evaluate_sentiment(const SentimentModel& model,
                                 const std::vector<SentimentExample>& split,
                                 const RetrievalContext* retrieval) {
  if (split.empty()) throw Error("empty evaluation split");
  const bool uses_retrieval = mode_uses_retrieval(model.config().retrieval);
  if (uses_retrieval && (retrieval == nullptr || retrieval->store == nullptr)) {
    throw ConfigError("retrieval mode " + to_string(model.config().retrieval) +
                      " needs a retrieval store");
  }

  std::vector<int> preds, labels;
  preds.reserve(split.size());
  labels.reserve(split.size());
  for (const SentimentExample& ex : split) {
    Tensor encoded;
    const Tensor* encoded_ptr = nullptr;
    if (uses_retrieval) {
      if (ex.query.empty()) {
        throw ConfigError("example " + std::to_string(ex.id) +
                          " has no retrieval query vector");
      }
      encoded = retrieve_encoded(*retrieval, ex.query, std::nullopt);
      encoded_ptr = &encoded;
    }
    preds.push_back(model.predict(ex.tokens, encoded_ptr) >= 0.5 ? 1 : 0);
    labels.push_back(ex.label);
  }
  SentimentEval eval;
  eval.accuracy = accuracy(preds, labels);
  eval.f1 = f_score(preds, labels);
  return eval;
}

std::string AblationTable::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const AblationRow& row : rows) {
    nlohmann::json j = {{"mode", row.mode}};
    for (const auto& [name, value] : row.metrics) j[name] = value;
    arr.push_back(j);
  }
  return arr.dump(2);
}

std::string AblationTable::to_text() const {
  if (rows.empty()) return "";
  std::vector<std::string> headers = {"mode"};
  for (const auto& [name, value] : rows[0].metrics) headers.push_back(name);

  std::vector<std::vector<std::string>> cells;
  for (const AblationRow& row : rows) {
    std::vector<std::string> line = {row.mode};
    for (std::size_t h = 1; h < headers.size(); ++h) {
      auto it = row.metrics.find(headers[h]);
      line.push_back(it == row.metrics.end() ? "-" : format_metric(it->second));
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t h = 0; h < headers.size(); ++h) {
    widths[h] = headers[h].size();
    for (const auto& line : cells) widths[h] = std::max(widths[h], line[h].size());
  }

  std::ostringstream os;
  auto emit_row = [&](const std::vector<std::string>& line) {
    for (std::size_t h = 0; h < line.size(); ++h) {
      if (h > 0) os << "  ";
      os << line[h] << std::string(widths[h] - line[h].size(), ' ');
    }
    os << '\n';
  };
  emit_row(headers);
  for (const auto& line : cells) emit_row(line);
  return os.str();
}

namespace {
const RetrievalMode kAblationModes[] = {RetrievalMode::kOff, RetrievalMode::kM0Init,
                                        RetrievalMode::kMultiAttn, RetrievalMode::kCombined};
}

AblationTable run_caption_ablation(const CaptionModelConfig& base, const CaptionDataset& data,
                                   const RetrievalContext* retrieval, const TrainConfig& cfg) {
  if (retrieval == nullptr || retrieval->store == nullptr) {
    throw ConfigError("ablation needs a retrieval store for the retrieval-bearing modes");
  }
  if (data.test.empty()) throw Error("empty test split");

  AblationTable table;
  for (RetrievalMode mode : kAblationModes) {
    CaptionModelConfig mode_cfg = base;
    mode_cfg.retrieval = mode;
    CaptionModel model(mode_cfg);
    train_caption(model, data, mode_uses_retrieval(mode) ? retrieval : nullptr, cfg);
    std::vector<double> scores = evaluate_caption(
        model, data.test, mode_uses_retrieval(mode) ? retrieval : nullptr, cfg.decode_max_len);
    AblationRow row;
    row.mode = to_string(mode);
    for (std::size_t n = 0; n < scores.size(); ++n) {
      row.metrics["bleu" + std::to_string(n + 1)] = scores[n];
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

AblationTable run_sentiment_ablation(const SentimentModelConfig& base,
                                     const SentimentDataset& data,
                                     const RetrievalContext* retrieval, const TrainConfig& cfg) {
  if (retrieval == nullptr || retrieval->store == nullptr) {
    throw ConfigError("ablation needs a retrieval store for the retrieval-bearing modes");
  }
  if (data.test.empty()) throw Error("empty test split");

  AblationTable table;
  for (RetrievalMode mode : kAblationModes) {
    SentimentModelConfig mode_cfg = base;
    mode_cfg.retrieval = mode;
    SentimentModel model(mode_cfg);
    train_sentiment(model, data, mode_uses_retrieval(mode) ? retrieval : nullptr, cfg);
    SentimentEval eval = evaluate_sentiment(model, data.test,
                                            mode_uses_retrieval(mode) ? retrieval : nullptr);
    AblationRow row;
    row.mode = to_string(mode);
    row.metrics["accuracy"] = eval.accuracy;
    row.metrics["f_score"] = eval.f1;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace ralstm
