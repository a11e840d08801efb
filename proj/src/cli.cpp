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

#include "ralstm/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ralstm/errors.hpp"
#include "ralstm/io.hpp"
#include "ralstm/knn_store.hpp"
#include "ralstm/models.hpp"
#include "ralstm/target_encoders.hpp"
#include "ralstm/train_eval.hpp"

namespace ralstm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config file: versioned JSON, addressed by JSON pointer so error messages
// name the exact offending field.
// ---------------------------------------------------------------------------

class Config {
 public:
  static Config load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw NotFoundError("config file not found: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    Config cfg;
    try {
      cfg.j_ = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      throw FormatError(path + ": invalid JSON: " + e.what());
    }
    if (!cfg.j_.is_object()) throw FormatError(path + ": config root must be an object");
    for (const std::string& set : overrides) cfg.apply_override(set);
    const auto version = cfg.get_size("/version");
    if (version != 1) {
      throw ConfigError("config error at /version: unsupported config version " +
                        std::to_string(version) + " (this build reads version 1)");
    }
    return cfg;
  }

  bool has(const std::string& ptr) const { return j_.contains(pointer(ptr)); }

  const json& at(const std::string& ptr) const {
    if (!has(ptr)) throw ConfigError("config error at " + ptr + ": missing required field");
    return j_.at(pointer(ptr));
  }

  std::string get_string(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_string() || v.get<std::string>().empty()) {
      throw ConfigError("config error at " + ptr + ": expected a non-empty string");
    }
    return v.get<std::string>();
  }

  std::string get_string_or(const std::string& ptr, const std::string& fallback) const {
    return has(ptr) ? get_string(ptr) : fallback;
  }

  std::size_t get_size(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_number_unsigned()) {
      throw ConfigError("config error at " + ptr + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  std::size_t get_size_or(const std::string& ptr, std::size_t fallback) const {
    return has(ptr) ? get_size(ptr) : fallback;
  }

  double get_double_or(const std::string& ptr, double fallback) const {
    if (!has(ptr)) return fallback;
    const json& v = at(ptr);
    if (!v.is_number()) throw ConfigError("config error at " + ptr + ": expected a number");
    return v.get<double>();
  }

  bool get_bool_or(const std::string& ptr, bool fallback) const {
    if (!has(ptr)) return fallback;
    const json& v = at(ptr);
    if (!v.is_boolean()) throw ConfigError("config error at " + ptr + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<std::string> get_string_array_or(const std::string& ptr,
                                               std::vector<std::string> fallback) const {
    if (!has(ptr)) return fallback;
    const json& v = at(ptr);
    if (!v.is_array() || v.empty()) {
      throw ConfigError("config error at " + ptr + ": expected a non-empty array of strings");
    }
    std::vector<std::string> out;
    for (const json& item : v) {
      if (!item.is_string()) {
        throw ConfigError("config error at " + ptr + ": expected a non-empty array of strings");
      }
      out.push_back(item.get<std::string>());
    }
    return out;
  }

 private:
  static json::json_pointer pointer(const std::string& ptr) {
    try {
      return json::json_pointer(ptr);
    } catch (const json::parse_error&) {
      throw ConfigError("config error at " + ptr + ": not a valid JSON pointer");
    }
  }

  /// Applies one "--set /a/b=value" override; the value is parsed as JSON
  /// when possible and treated as a bare string otherwise.
  void apply_override(const std::string& set) {
    const std::size_t eq = set.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + set + "' must look like /pointer=value");
    }
    const std::string ptr = set.substr(0, eq);
    const std::string raw = set.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    j_[pointer(ptr)] = value;
  }

  json j_;
};

// ---------------------------------------------------------------------------
// Shared resource loading
// ---------------------------------------------------------------------------

std::string config_task(const Config& cfg) {
  const std::string task = cfg.get_string("/task");
  if (task != "caption" && task != "sentiment") {
    throw ConfigError("config error at /task: expected 'caption' or 'sentiment', got '" + task +
                      "'");
  }
  return task;
}

EmbeddingTable load_word_vectors(const Config& cfg) {
  return EmbeddingTable::load(cfg.get_string("/data/word_vectors"));
}

SentenceEmbeddings load_sentence_vectors(const Config& cfg) {
  return SentenceEmbeddings::load(cfg.get_string("/data/sentence_vectors"));
}

/// Owns the neighbor index together with the pre-encoded target of every
/// stored example. The context points into the store, so the bundle is
/// heap-allocated and never moved.
struct RetrievalBundle {
  ExampleStore store{1};
  RetrievalContext ctx;
};

std::string index_path(const Config& cfg) { return cfg.get_string("/retrieval/index"); }

ExampleStore load_index(const Config& cfg) {
  const std::string path = index_path(cfg);
  if (!fs::exists(path)) {
    throw NotFoundError("index file not found: " + path + " (run build-index first)");
  }
  return ExampleStore::load(path);
}

std::unique_ptr<RetrievalBundle> build_caption_retrieval(const Config& cfg,
                                                         const LoadedCaptionData& loaded,
                                                         const CaptionModelConfig& model_cfg) {
  auto bundle = std::make_unique<RetrievalBundle>();
  bundle->store = load_index(cfg);
  bundle->ctx.store = &bundle->store;

  const TargetEncoderMode mode = model_cfg.encoder;
  std::optional<EmbeddingTable> words;
  std::optional<SentenceEmbeddings> sentences;
  if (mode == TargetEncoderMode::kContextual) {
    sentences.emplace(load_sentence_vectors(cfg));
  } else {
    words.emplace(load_word_vectors(cfg));
  }
  for (std::uint64_t id : bundle->store.ids()) {
    const TargetPayload& payload = bundle->store.target(id);
    if (payload.kind != TargetPayload::Kind::kCaption) {
      throw FormatError("index entry " + std::to_string(id) +
                        " holds a label target but the task is caption");
    }
    Tensor encoded;
    if (mode == TargetEncoderMode::kContextual) {
      encoded = contextual_embedding(id, *sentences);
    } else {
      std::vector<std::string> tokens;
      for (std::uint32_t t : payload.caption) tokens.push_back(loaded.vocab.token(t));
      try {
        encoded = mode == TargetEncoderMode::kAvg ? avg_embedding(tokens, *words)
                                                  : norm_weighted_avg(tokens, *words);
      } catch (const Error& e) {
        throw Error("index entry " + std::to_string(id) + ": " + e.what());
      }
    }
    if (encoded.size() != model_cfg.target_encode_dim()) {
      throw ConfigError("encoded target for index entry " + std::to_string(id) + " has dimension " +
                        std::to_string(encoded.size()) + " but the model expects " +
                        std::to_string(model_cfg.target_encode_dim()) +
                        "; align /model/encode_dim with the vector files");
    }
    bundle->ctx.encoded.emplace(id, std::move(encoded));
  }
  return bundle;
}

std::unique_ptr<RetrievalBundle> build_sentiment_retrieval(const Config& cfg,
                                                           const LoadedSentimentData& loaded,
                                                           const SentimentModelConfig& model_cfg) {
  auto bundle = std::make_unique<RetrievalBundle>();
  bundle->store = load_index(cfg);
  bundle->ctx.store = &bundle->store;

  const TargetEncoderMode mode = model_cfg.encoder;
  std::optional<SentimentTargetEncoder> encoder;
  if (mode == TargetEncoderMode::kPlusMinus) {
    encoder.emplace(mode, model_cfg.target_encode_dim());
  } else {
    std::vector<LabeledSentence> train_split;
    for (const SentimentExample& ex : loaded.data.train) {
      train_split.push_back({ex.id, loaded.tokens.at(ex.id), ex.label});
    }
    if (mode == TargetEncoderMode::kClassContextual) {
      encoder.emplace(mode, train_split, load_sentence_vectors(cfg));
    } else {
      encoder.emplace(mode, train_split, load_word_vectors(cfg));
    }
  }
  if (encoder->dim() != model_cfg.target_encode_dim()) {
    throw ConfigError("target encoder produces dimension " + std::to_string(encoder->dim()) +
                      " but the model expects " + std::to_string(model_cfg.target_encode_dim()) +
                      "; align /model/encode_dim with the vector files");
  }
  for (std::uint64_t id : bundle->store.ids()) {
    const TargetPayload& payload = bundle->store.target(id);
    if (payload.kind != TargetPayload::Kind::kLabel) {
      throw FormatError("index entry " + std::to_string(id) +
                        " holds a caption target but the task is sentiment");
    }
    bundle->ctx.encoded.emplace(id, encoder->encode(payload.label));
  }
  return bundle;
}

/// Fills neighbor-lookup queries for every sentiment split, preferring
/// precomputed sentence vectors over word-vector averages.
void fill_sentiment_queries(const Config& cfg, LoadedSentimentData& loaded) {
  if (cfg.has("/data/sentence_vectors")) {
    const SentenceEmbeddings sentences = load_sentence_vectors(cfg);
    fill_queries_from_sentences(loaded.data.train, sentences);
    fill_queries_from_sentences(loaded.data.val, sentences);
    fill_queries_from_sentences(loaded.data.test, sentences);
  } else if (cfg.has("/data/word_vectors")) {
    const EmbeddingTable words = load_word_vectors(cfg);
    fill_queries_from_words(loaded.data.train, loaded.tokens, words);
    fill_queries_from_words(loaded.data.val, loaded.tokens, words);
    fill_queries_from_words(loaded.data.test, loaded.tokens, words);
  } else {
    throw ConfigError(
        "config error at /data/sentence_vectors: retrieval needs either sentence vectors or "
        "word vectors (/data/word_vectors) to form queries");
  }
}

// ---------------------------------------------------------------------------
// Model and training configuration
// ---------------------------------------------------------------------------

CaptionModelConfig caption_model_config(const Config& cfg, std::size_t vocab_size,
                                        std::size_t feature_dim) {
  CaptionModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.feature_dim = feature_dim;
  mc.embed_dim = cfg.get_size_or("/model/embed_dim", 64);
  mc.hidden_dim = cfg.get_size_or("/model/hidden_dim", 128);
  mc.attn_dim = cfg.get_size_or("/model/attn_dim", 0);
  mc.encode_dim = cfg.get_size_or("/model/encode_dim", 0);
  mc.retrieval = retrieval_mode_from_string(cfg.get_string_or("/model/mode", "off"));
  mc.encoder = target_encoder_mode_from_string(cfg.get_string_or("/model/encoder", "weighted"));
  mc.dropout = cfg.get_double_or("/model/dropout", 0.0);
  mc.train_embeddings = cfg.get_bool_or("/model/train_embeddings", true);
  mc.seed = cfg.get_size_or("/model/seed", 0);
  mc.validate();
  return mc;
}

SentimentModelConfig sentiment_model_config(const Config& cfg, std::size_t vocab_size) {
  SentimentModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.embed_dim = cfg.get_size_or("/model/embed_dim", 64);
  mc.hidden_dim = cfg.get_size_or("/model/hidden_dim", 128);
  mc.attn_dim = cfg.get_size_or("/model/attn_dim", 0);
  mc.encode_dim = cfg.get_size_or("/model/encode_dim", 0);
  mc.retrieval = retrieval_mode_from_string(cfg.get_string_or("/model/mode", "off"));
  mc.encoder = target_encoder_mode_from_string(cfg.get_string_or("/model/encoder", "plusminus"));
  mc.dropout = cfg.get_double_or("/model/dropout", 0.0);
  mc.train_embeddings = cfg.get_bool_or("/model/train_embeddings", true);
  mc.seed = cfg.get_size_or("/model/seed", 0);
  mc.validate();
  return mc;
}

TrainConfig train_config(const Config& cfg, const std::string& task) {
  TrainConfig tc =
      task == "caption" ? TrainConfig::caption_defaults() : TrainConfig::sentiment_defaults();
  tc.lr = cfg.get_double_or("/train/lr", tc.lr);
  tc.batch_size = cfg.get_size_or("/train/batch_size", tc.batch_size);
  tc.max_epochs = cfg.get_size("/train/max_epochs");
  tc.patience_stop = cfg.get_size_or("/train/patience_stop", tc.patience_stop);
  tc.patience_decay = cfg.get_size_or("/train/patience_decay", tc.patience_decay);
  tc.shrink = cfg.get_double_or("/train/shrink", tc.shrink);
  tc.seed = cfg.get_size_or("/train/seed", 0);
  tc.decode_max_len = cfg.get_size_or("/train/decode_max_len", tc.decode_max_len);
  tc.validate();
  return tc;
}

std::string run_dir(const Config& cfg) { return cfg.get_string("/paths/run_dir"); }

std::size_t min_count(const Config& cfg) { return cfg.get_size_or("/data/min_count", 5); }

std::string dataset_path(const Config& cfg) { return cfg.get_string("/data/dataset"); }

template <typename Example>
const std::vector<Example>& pick_split(const std::string& name, const std::vector<Example>& train,
                                       const std::vector<Example>& val,
                                       const std::vector<Example>& test) {
  switch (split_from_string(name)) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    case Split::kTest: return test;
  }
  throw Error("unreachable");
}

void write_output(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
  } else {
    atomic_write_file(out_path, text);
    out << "wrote " << out_path << "\n";
  }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_synth(const Config& cfg, const std::string& out_override, std::ostream& out) {
  if (!cfg.has("/synth")) throw ConfigError("config error at /synth: missing required field");
  const SynthSpec spec = SynthSpec::from_json(cfg.at("/synth").dump());
  const std::string out_dir =
      !out_override.empty() ? out_override : cfg.get_string("/synth/out_dir");
  const SynthResult result = synth_generate(spec, out_dir);
  json j;
  j["dataset"] = result.dataset_path;
  j["min_separation"] = result.min_separation;
  if (!result.word_vectors_path.empty()) j["word_vectors"] = result.word_vectors_path;
  if (!result.sentence_vectors_path.empty()) j["sentence_vectors"] = result.sentence_vectors_path;
  if (!result.features_dir.empty()) j["features_dir"] = result.features_dir;
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_build_index(const Config& cfg, std::ostream& out) {
  const std::string task = config_task(cfg);
  const std::vector<std::string> splits =
      cfg.get_string_array_or("/retrieval/index_splits", {"train"});
  const std::string path = index_path(cfg);

  std::unique_ptr<ExampleStore> store;
  if (task == "caption") {
    const LoadedCaptionData loaded = load_caption_dataset(dataset_path(cfg), min_count(cfg));
    for (const std::string& name : splits) {
      const auto& split =
          pick_split(name, loaded.data.train, loaded.data.val, loaded.data.test);
      for (const CaptionExample& ex : split) {
        if (!store) store = std::make_unique<ExampleStore>(ex.features.rows());
        store->add(ex.id, pooled_query(ex.features), TargetPayload::make_caption(ex.captions[0]));
      }
    }
  } else {
    LoadedSentimentData loaded = load_sentiment_dataset(dataset_path(cfg), min_count(cfg));
    fill_sentiment_queries(cfg, loaded);
    for (const std::string& name : splits) {
      const auto& split =
          pick_split(name, loaded.data.train, loaded.data.val, loaded.data.test);
      for (const SentimentExample& ex : split) {
        if (!store) store = std::make_unique<ExampleStore>(ex.query.size());
        store->add(ex.id, ex.query, TargetPayload::make_label(ex.label));
      }
    }
  }
  if (!store || store->count() == 0) {
    throw Error("no examples found in index splits; nothing to index");
  }
  store->freeze();
  const std::string tmp = path + ".tmp";
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  store->save(tmp);
  fs::rename(tmp, path);

  json j;
  j["path"] = path;
  j["count"] = store->count();
  j["dim"] = store->dim();
  out << j.dump(2) << "\n";
  return 0;
}

void print_reports(const TrainResult& result, std::ostream& out) {
  for (const EpochReport& r : result.reports) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %4zu  train_loss %.6f  val %.6f  lr %.6g%s",
                  r.epoch, r.train_loss, r.val_metric, r.lr, r.stopped ? "  [stopped]" : "");
    out << line << "\n";
  }
  out << "best epoch " << result.best_epoch << " (val " << result.best_metric << ")\n";
}

void write_train_report(const std::string& dir, const TrainResult& result) {
  json j;
  j["epochs"] = json::array();
  for (const EpochReport& r : result.reports) j["epochs"].push_back(json::parse(r.to_json()));
  j["best_epoch"] = result.best_epoch;
  j["best_metric"] = result.best_metric;
  atomic_write_file(dir + "/report.json", j.dump(2) + "\n");
}

int cmd_train(const Config& cfg, std::ostream& out) {
  const std::string task = config_task(cfg);
  const std::string dir = run_dir(cfg);
  const TrainConfig tc = train_config(cfg, task);

  TrainResult result;
  if (task == "caption") {
    const LoadedCaptionData loaded = load_caption_dataset(dataset_path(cfg), min_count(cfg));
    if (loaded.data.train.empty()) throw Error("caption dataset has no train split");
    const std::size_t feature_dim = loaded.data.train[0].features.rows();
    CaptionModelConfig mc = caption_model_config(cfg, loaded.vocab.size(), feature_dim);
    std::unique_ptr<RetrievalBundle> bundle;
    if (mode_uses_retrieval(mc.retrieval)) {
      bundle = build_caption_retrieval(cfg, loaded, mc);
    }
    CaptionModel model(mc);
    if (cfg.has("/data/word_vectors")) {
      model.init_embeddings(load_word_vectors(cfg), loaded.vocab.id_to_token());
    }
    loaded.vocab.save(dir + "/vocab.txt");
    result = train_caption(model, loaded.data, bundle ? &bundle->ctx : nullptr, tc, dir);
  } else {
    LoadedSentimentData loaded = load_sentiment_dataset(dataset_path(cfg), min_count(cfg));
    SentimentModelConfig mc = sentiment_model_config(cfg, loaded.vocab.size());
    std::unique_ptr<RetrievalBundle> bundle;
    if (mode_uses_retrieval(mc.retrieval)) {
      fill_sentiment_queries(cfg, loaded);
      bundle = build_sentiment_retrieval(cfg, loaded, mc);
    }
    SentimentModel model(mc);
    if (cfg.has("/data/word_vectors")) {
      model.init_embeddings(load_word_vectors(cfg), loaded.vocab.id_to_token());
    }
    loaded.vocab.save(dir + "/vocab.txt");
    result = train_sentiment(model, loaded.data, bundle ? &bundle->ctx : nullptr, tc, dir);
  }
  print_reports(result, out);
  write_train_report(dir, result);
  out << "wrote " << dir << "/best.rafm\n";
  return 0;
}

std::string checkpoint_path(const Config& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  return run_dir(cfg) + "/best.rafm";
}

void require_checkpoint(const std::string& path) {
  if (!fs::exists(path)) {
    throw NotFoundError("checkpoint not found: " + path + " (run train first)");
  }
}

int cmd_evaluate(const Config& cfg, const std::string& ckpt_flag, const std::string& split_name,
                 const std::string& out_path, std::ostream& out) {
  const std::string task = config_task(cfg);
  const std::string ckpt = checkpoint_path(cfg, ckpt_flag);
  require_checkpoint(ckpt);
  const std::size_t max_len = cfg.get_size_or("/train/decode_max_len", 20);

  json j;
  if (task == "caption") {
    const CaptionModel model = CaptionModel::load(ckpt);
    const LoadedCaptionData loaded = load_caption_dataset(dataset_path(cfg), min_count(cfg));
    if (loaded.vocab.size() != model.config().vocab_size) {
      throw ConfigError("dataset vocabulary has " + std::to_string(loaded.vocab.size()) +
                        " tokens but the checkpoint was trained with " +
                        std::to_string(model.config().vocab_size) +
                        "; check /data/dataset and /data/min_count");
    }
    std::unique_ptr<RetrievalBundle> bundle;
    if (mode_uses_retrieval(model.config().retrieval)) {
      bundle = build_caption_retrieval(cfg, loaded, model.config());
    }
    const auto& split =
        pick_split(split_name, loaded.data.train, loaded.data.val, loaded.data.test);
    const std::vector<double> scores =
        evaluate_caption(model, split, bundle ? &bundle->ctx : nullptr, max_len);
    j["split"] = split_name;
    j["count"] = split.size();
    for (std::size_t n = 0; n < scores.size(); ++n) {
      j["bleu" + std::to_string(n + 1)] = scores[n];
    }
  } else {
    const SentimentModel model = SentimentModel::load(ckpt);
    LoadedSentimentData loaded = load_sentiment_dataset(dataset_path(cfg), min_count(cfg));
    if (loaded.vocab.size() != model.config().vocab_size) {
      throw ConfigError("dataset vocabulary has " + std::to_string(loaded.vocab.size()) +
                        " tokens but the checkpoint was trained with " +
                        std::to_string(model.config().vocab_size) +
                        "; check /data/dataset and /data/min_count");
    }
    std::unique_ptr<RetrievalBundle> bundle;
    if (mode_uses_retrieval(model.config().retrieval)) {
      fill_sentiment_queries(cfg, loaded);
      bundle = build_sentiment_retrieval(cfg, loaded, model.config());
    }
    const auto& split =
        pick_split(split_name, loaded.data.train, loaded.data.val, loaded.data.test);
    const SentimentEval eval = evaluate_sentiment(model, split, bundle ? &bundle->ctx : nullptr);
    j["split"] = split_name;
    j["count"] = split.size();
    j["accuracy"] = eval.accuracy;
    j["f_score"] = eval.f1;
  }
  write_output(out_path, j.dump(2) + "\n", out);
  return 0;
}

/// Neighbor lookup helper shared by generate/attend: returns the nearest
/// stored id and its encoded target.
std::pair<std::uint64_t, const Tensor*> lookup_neighbor(const RetrievalContext& ctx,
                                                        const std::vector<float>& query) {
  const RetrievalHit hit = ctx.store->search(query, 1)[0];
  auto it = ctx.encoded.find(hit.id);
  if (it == ctx.encoded.end()) {
    throw NotFoundError("no encoded target for index entry " + std::to_string(hit.id));
  }
  return {hit.id, &it->second};
}

int cmd_generate(const Config& cfg, const std::string& ckpt_flag, const std::string& split_name,
                 const std::string& out_path, std::ostream& out) {
  const std::string task = config_task(cfg);
  if (task != "caption") throw ConfigError("generate only applies to the caption task");
  const std::string ckpt = checkpoint_path(cfg, ckpt_flag);
  require_checkpoint(ckpt);
  const std::size_t max_len = cfg.get_size_or("/train/decode_max_len", 20);

  const CaptionModel model = CaptionModel::load(ckpt);
  const LoadedCaptionData loaded = load_caption_dataset(dataset_path(cfg), min_count(cfg));
  std::unique_ptr<RetrievalBundle> bundle;
  if (mode_uses_retrieval(model.config().retrieval)) {
    bundle = build_caption_retrieval(cfg, loaded, model.config());
  }
  const auto& split = pick_split(split_name, loaded.data.train, loaded.data.val, loaded.data.test);

  std::ostringstream lines;
  for (const CaptionExample& ex : split) {
    json j;
    j["id"] = ex.id;
    const Tensor* target = nullptr;
    if (bundle) {
      const std::vector<float> query = ex.query.empty() ? pooled_query(ex.features) : ex.query;
      auto [neighbor, encoded] = lookup_neighbor(bundle->ctx, query);
      j["neighbor"] = neighbor;
      target = encoded;
    }
    const std::vector<std::uint32_t> ids =
        model.greedy_decode(ex.features, target, max_len, nullptr, &loaded.vocab.id_to_token());
    std::string text;
    for (std::uint32_t id : ids) {
      if (!text.empty()) text += " ";
      text += loaded.vocab.token(id);
    }
    j["caption"] = text;
    lines << j.dump() << "\n";
  }
  write_output(out_path, lines.str(), out);
  return 0;
}

int cmd_attend(const Config& cfg, const std::string& ckpt_flag, const std::string& split_name,
               const std::string& out_path, std::ostream& out) {
  const std::string task = config_task(cfg);
  const std::string ckpt = checkpoint_path(cfg, ckpt_flag);
  require_checkpoint(ckpt);
  const std::size_t max_len = cfg.get_size_or("/train/decode_max_len", 20);

  std::ostringstream lines;
  if (task == "caption") {
    const CaptionModel model = CaptionModel::load(ckpt);
    const LoadedCaptionData loaded = load_caption_dataset(dataset_path(cfg), min_count(cfg));
    std::unique_ptr<RetrievalBundle> bundle;
    if (mode_uses_retrieval(model.config().retrieval)) {
      bundle = build_caption_retrieval(cfg, loaded, model.config());
    }
    const auto& split =
        pick_split(split_name, loaded.data.train, loaded.data.val, loaded.data.test);
    for (const CaptionExample& ex : split) {
      json j;
      j["id"] = ex.id;
      const Tensor* target = nullptr;
      if (bundle) {
        const std::vector<float> query = ex.query.empty() ? pooled_query(ex.features) : ex.query;
        auto [neighbor, encoded] = lookup_neighbor(bundle->ctx, query);
        j["neighbor"] = neighbor;
        target = encoded;
      }
      AttnTrace trace;
      model.greedy_decode(ex.features, target, max_len, &trace, &loaded.vocab.id_to_token());
      j["trace"] = json::parse(trace.to_json());
      lines << j.dump() << "\n";
    }
  } else {
    const SentimentModel model = SentimentModel::load(ckpt);
    LoadedSentimentData loaded = load_sentiment_dataset(dataset_path(cfg), min_count(cfg));
    std::unique_ptr<RetrievalBundle> bundle;
    if (mode_uses_retrieval(model.config().retrieval)) {
      fill_sentiment_queries(cfg, loaded);
      bundle = build_sentiment_retrieval(cfg, loaded, model.config());
    }
    const auto& split =
        pick_split(split_name, loaded.data.train, loaded.data.val, loaded.data.test);
    for (const SentimentExample& ex : split) {
      json j;
      j["id"] = ex.id;
      const Tensor* target = nullptr;
      if (bundle) {
        auto [neighbor, encoded] = lookup_neighbor(bundle->ctx, ex.query);
        j["neighbor"] = neighbor;
        target = encoded;
      }
      AttnTrace trace;
      const double prob = model.predict(ex.tokens, target, &trace);
      j["prob"] = prob;
      j["label"] = ex.label;
      j["trace"] = json::parse(trace.to_json());
      lines << j.dump() << "\n";
    }
  }
  write_output(out_path, lines.str(), out);
  return 0;
}

int cmd_ablate(const Config& cfg, const std::string& out_path, std::ostream& out) {
  const std::string task = config_task(cfg);
  const TrainConfig tc = train_config(cfg, task);

  AblationTable table;
  if (task == "caption") {
    const LoadedCaptionData loaded = load_caption_dataset(dataset_path(cfg), min_count(cfg));
    if (loaded.data.train.empty()) throw Error("caption dataset has no train split");
    CaptionModelConfig mc =
        caption_model_config(cfg, loaded.vocab.size(), loaded.data.train[0].features.rows());
    // The bundle must serve the retrieval-bearing arms regardless of the
    // configured base mode.
    CaptionModelConfig probe = mc;
    probe.retrieval = RetrievalMode::kCombined;
    std::unique_ptr<RetrievalBundle> bundle = build_caption_retrieval(cfg, loaded, probe);
    table = run_caption_ablation(mc, loaded.data, &bundle->ctx, tc);
  } else {
    LoadedSentimentData loaded = load_sentiment_dataset(dataset_path(cfg), min_count(cfg));
    SentimentModelConfig mc = sentiment_model_config(cfg, loaded.vocab.size());
    fill_sentiment_queries(cfg, loaded);
    SentimentModelConfig probe = mc;
    probe.retrieval = RetrievalMode::kCombined;
    std::unique_ptr<RetrievalBundle> bundle = build_sentiment_retrieval(cfg, loaded, probe);
    table = run_sentiment_ablation(mc, loaded.data, &bundle->ctx, tc);
  }
  out << table.to_text();
  if (!out_path.empty()) {
    atomic_write_file(out_path, table.to_json() + "\n");
    out << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"retrieval-augmented recurrent models: train, evaluate, and inspect"};
  app.require_subcommand(1);

  struct SubOpts {
    std::string config;
    std::vector<std::string> sets;
    std::string checkpoint;
    std::string split = "test";
    std::string out_path;
  };
  std::map<std::string, SubOpts> opts;

  auto add_common = [&](CLI::App* sub) {
    SubOpts& o = opts[sub->get_name()];
    sub->add_option("--config", o.config, "JSON config file")->required();
    sub->add_option("--set", o.sets, "override a config field: /json/pointer=value");
  };
  auto add_eval_opts = [&](CLI::App* sub) {
    SubOpts& o = opts[sub->get_name()];
    sub->add_option("--checkpoint", o.checkpoint, "model checkpoint (default <run_dir>/best.rafm)");
    sub->add_option("--split", o.split, "dataset split: train, val, or test");
    sub->add_option("--out", o.out_path, "write results to this file");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
  add_common(synth);
  synth->add_option("--out", opts["synth"].out_path, "output directory (default /synth/out_dir)");

  CLI::App* build_index =
      app.add_subcommand("build-index", "ingest examples into a neighbor index");
  add_common(build_index);

  CLI::App* train = app.add_subcommand("train", "train a model and write checkpoints");
  add_common(train);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a split");
  add_common(evaluate);
  add_eval_opts(evaluate);

  CLI::App* generate = app.add_subcommand("generate", "greedy-decode captions for a split");
  add_common(generate);
  add_eval_opts(generate);

  CLI::App* attend = app.add_subcommand("attend", "dump attention traces for a split");
  add_common(attend);
  add_eval_opts(attend);

  CLI::App* ablate = app.add_subcommand("ablate", "train and score all four retrieval modes");
  add_common(ablate);
  ablate->add_option("--out", opts["ablate"].out_path, "write the JSON table to this file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* sub = app.get_subcommands().front();
  const SubOpts& o = opts[sub->get_name()];
  try {
    const Config cfg = Config::load(o.config, o.sets);
    if (sub == synth) return cmd_synth(cfg, o.out_path, out);
    if (sub == build_index) return cmd_build_index(cfg, out);
    if (sub == train) return cmd_train(cfg, out);
    if (sub == evaluate) return cmd_evaluate(cfg, o.checkpoint, o.split, o.out_path, out);
    if (sub == generate) return cmd_generate(cfg, o.checkpoint, o.split, o.out_path, out);
    if (sub == attend) return cmd_attend(cfg, o.checkpoint, o.split, o.out_path, out);
    if (sub == ablate) return cmd_ablate(cfg, o.out_path, out);
    throw Error("unreachable");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ralstm
