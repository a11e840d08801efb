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

#include "ralstm/models.hpp"

#include <fstream>

#include <json.hpp>

#include "ralstm/errors.hpp"
#include "ralstm/ops.hpp"
#include "ralstm/wire.hpp"

namespace ralstm {

namespace {

constexpr char kModelMagic[5] = "RAFM";
constexpr std::uint16_t kModelVersion = 1;

/// Mean over the K columns of a (D x K) matrix, computed outside the tape
/// since the features are constant inputs.
Tensor column_mean(const Tensor& features) {
  const std::size_t rows = features.rows(), cols = features.cols();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += features.at(r, c);
    out[r] = acc / static_cast<double>(cols);
  }
  return out;
}

std::uint32_t argmax_smallest_id(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<std::uint32_t>(best);
}

std::string token_name(std::uint32_t id, const std::vector<std::string>* id_to_token) {
  if (id_to_token != nullptr && id < id_to_token->size()) return (*id_to_token)[id];
  return std::to_string(id);
}

void check_shared_config(std::size_t vocab_size, std::size_t embed_dim, std::size_t hidden_dim,
                         double dropout) {
  if (vocab_size < kNumSpecialTokens + 1) {
    throw ConfigError("vocabulary must hold the " + std::to_string(kNumSpecialTokens) +
                      " reserved tokens plus at least one word, got size " +
                      std::to_string(vocab_size));
  }
  if (embed_dim == 0 || hidden_dim == 0) {
    throw ConfigError("embedding and hidden dimensions must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must lie in [0, 1), got " + std::to_string(dropout));
  }
}

void overwrite_embedding_rows(Tensor& embed, const EmbeddingTable& table,
                              const std::vector<std::string>& id_to_token) {
  if (table.dim() != embed.cols()) {
    throw DimensionError("embedding table dimension " + std::to_string(table.dim()) +
                         " does not match model embedding dimension " +
                         std::to_string(embed.cols()));
  }
  const std::size_t n = std::min<std::size_t>(embed.rows(), id_to_token.size());
  for (std::size_t id = 0; id < n; ++id) {
    if (!table.contains(id_to_token[id])) continue;
    const auto& vec = table.at(id_to_token[id]);
    for (std::size_t c = 0; c < embed.cols(); ++c) embed.at(id, c) = vec[c];
  }
}

nlohmann::json parse_config_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bad model config JSON: ") + e.what());
  }
}

template <typename T>
T json_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("model config missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("model config field '") + key + "' has the wrong type");
  }
}

void check_task(const nlohmann::json& j, const std::string& want) {
  const auto task = json_field<std::string>(j, "task");
  if (task != want) {
    throw FormatError("config is for task '" + task + "', expected '" + want + "'");
  }
}

}  // namespace

RetrievalMode retrieval_mode_from_string(const std::string& name) {
  if (name == "off") return RetrievalMode::kOff;
  if (name == "m0_init") return RetrievalMode::kM0Init;
  if (name == "multi_attn") return RetrievalMode::kMultiAttn;
  if (name == "combined") return RetrievalMode::kCombined;
  throw ConfigError("unknown retrieval mode '" + name + "'");
}

std::string to_string(RetrievalMode mode) {
  switch (mode) {
    case RetrievalMode::kOff: return "off";
    case RetrievalMode::kM0Init: return "m0_init";
    case RetrievalMode::kMultiAttn: return "multi_attn";
    case RetrievalMode::kCombined: return "combined";
  }
  throw ConfigError("unknown retrieval mode");
}

std::size_t CaptionModelConfig::target_encode_dim() const {
  if (encoder == TargetEncoderMode::kContextual) return encode_dim;
  return encode_dim != 0 ? encode_dim : embed_dim;
}

void CaptionModelConfig::validate() const {
  check_shared_config(vocab_size, embed_dim, hidden_dim, dropout);
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  if (!is_caption_encoder_mode(encoder)) {
    throw ConfigError("encoder mode " + ralstm::to_string(encoder) +
                      " does not encode captions");
  }
  if (mode_uses_retrieval(retrieval) && target_encode_dim() == 0) {
    throw ConfigError("encoder mode " + ralstm::to_string(encoder) +
                      " requires encode_dim to be set");
  }
}

std::string CaptionModelConfig::to_json() const {
  nlohmann::json j = {
      {"task", "caption"},
      {"vocab_size", vocab_size},
      {"embed_dim", embed_dim},
      {"hidden_dim", hidden_dim},
      {"feature_dim", feature_dim},
      {"attn_dim", attn_dim},
      {"encode_dim", encode_dim},
      {"retrieval", ralstm::to_string(retrieval)},
      {"encoder", ralstm::to_string(encoder)},
      {"dropout", dropout},
      {"train_embeddings", train_embeddings},
      {"seed", seed},
  };
  return j.dump();
}

CaptionModelConfig CaptionModelConfig::from_json(const std::string& text) {
  nlohmann::json j = parse_config_json(text);
  check_task(j, "caption");
  CaptionModelConfig cfg;
  cfg.vocab_size = json_field<std::size_t>(j, "vocab_size");
  cfg.embed_dim = json_field<std::size_t>(j, "embed_dim");
  cfg.hidden_dim = json_field<std::size_t>(j, "hidden_dim");
  cfg.feature_dim = json_field<std::size_t>(j, "feature_dim");
  cfg.attn_dim = json_field<std::size_t>(j, "attn_dim");
  cfg.encode_dim = json_field<std::size_t>(j, "encode_dim");
  cfg.retrieval = retrieval_mode_from_string(json_field<std::string>(j, "retrieval"));
  cfg.encoder = target_encoder_mode_from_string(json_field<std::string>(j, "encoder"));
  cfg.dropout = json_field<double>(j, "dropout");
  cfg.train_embeddings = json_field<bool>(j, "train_embeddings");
  cfg.seed = json_field<std::uint64_t>(j, "seed");
  cfg.validate();
  return cfg;
}

std::size_t SentimentModelConfig::target_encode_dim() const {
  switch (encoder) {
    case TargetEncoderMode::kPlusMinus: return hidden_dim;
    case TargetEncoderMode::kClassContextual: return encode_dim;
    default: return encode_dim != 0 ? encode_dim : embed_dim;
  }
}

void SentimentModelConfig::validate() const {
  check_shared_config(vocab_size, embed_dim, hidden_dim, dropout);
  if (!is_sentiment_encoder_mode(encoder)) {
    throw ConfigError("encoder mode " + ralstm::to_string(encoder) +
                      " does not encode sentiment labels");
  }
  if (mode_uses_retrieval(retrieval) && target_encode_dim() == 0) {
    throw ConfigError("encoder mode " + ralstm::to_string(encoder) +
                      " requires encode_dim to be set");
  }
}

std::string SentimentModelConfig::to_json() const {
  nlohmann::json j = {
      {"task", "sentiment"},
      {"vocab_size", vocab_size},
      {"embed_dim", embed_dim},
      {"hidden_dim", hidden_dim},
      {"attn_dim", attn_dim},
      {"encode_dim", encode_dim},
      {"retrieval", ralstm::to_string(retrieval)},
      {"encoder", ralstm::to_string(encoder)},
      {"dropout", dropout},
      {"train_embeddings", train_embeddings},
      {"seed", seed},
  };
  return j.dump();
}

SentimentModelConfig SentimentModelConfig::from_json(const std::string& text) {
  nlohmann::json j = parse_config_json(text);
  check_task(j, "sentiment");
  SentimentModelConfig cfg;
  cfg.vocab_size = json_field<std::size_t>(j, "vocab_size");
  cfg.embed_dim = json_field<std::size_t>(j, "embed_dim");
  cfg.hidden_dim = json_field<std::size_t>(j, "hidden_dim");
  cfg.attn_dim = json_field<std::size_t>(j, "attn_dim");
  cfg.encode_dim = json_field<std::size_t>(j, "encode_dim");
  cfg.retrieval = retrieval_mode_from_string(json_field<std::string>(j, "retrieval"));
  cfg.encoder = target_encoder_mode_from_string(json_field<std::string>(j, "encoder"));
  cfg.dropout = json_field<double>(j, "dropout");
  cfg.train_embeddings = json_field<bool>(j, "train_embeddings");
  cfg.seed = json_field<std::uint64_t>(j, "seed");
  cfg.validate();
  return cfg;
}

CaptionModel::CaptionModel(const CaptionModelConfig& cfg) : cfg_(cfg), store_(cfg.seed) {
  cfg_.validate();
  const std::size_t hidden = cfg_.hidden_dim;
  store_.create("embed.weight", {cfg_.vocab_size, cfg_.embed_dim}, cfg_.embed_dim);
  store_.create("feat_proj.weight", {hidden, cfg_.feature_dim}, cfg_.feature_dim);
  store_.create("feat_proj.bias", {hidden}, cfg_.feature_dim);
  store_.create("init_h.weight", {hidden, cfg_.feature_dim}, cfg_.feature_dim);
  store_.create("init_h.bias", {hidden}, cfg_.feature_dim);
  if (!mode_uses_memory_init(cfg_.retrieval)) {
    store_.create("init_m.weight", {hidden, cfg_.feature_dim}, cfg_.feature_dim);
    store_.create("init_m.bias", {hidden}, cfg_.feature_dim);
  }
  lstm_create(store_, "lstm", {cfg_.embed_dim + hidden, hidden});
  additive_attn_create(store_, "attn", {hidden, hidden, cfg_.attention_dim()});
  if (mode_uses_fusion(cfg_.retrieval)) {
    multi_level_attn_create(store_, "fuse", {hidden, hidden, cfg_.attention_dim()});
  }
  if (mode_uses_retrieval(cfg_.retrieval)) {
    projection_create(store_, "target_proj", {cfg_.target_encode_dim(), hidden, true});
  }
  store_.create("out.weight", {cfg_.vocab_size, hidden}, hidden);
  store_.create("out.bias", {cfg_.vocab_size}, hidden);
}

void CaptionModel::init_embeddings(const EmbeddingTable& table,
                                   const std::vector<std::string>& id_to_token) {
  overwrite_embedding_rows(store_.get("embed.weight"), table, id_to_token);
}

CaptionModel::Graph CaptionModel::start(Tape& tape, const Tensor& features,
                                        const Tensor* encoded_target, bool training,
                                        std::mt19937_64* dropout_rng) const {
  if (features.ndim() != 2 || features.rows() != cfg_.feature_dim) {
    throw DimensionError("image features must have shape (" + std::to_string(cfg_.feature_dim) +
                         ", K), got " + features.shape_str());
  }
  if (features.cols() == 0) throw Error("image features need at least one region");
  const bool needs_target = mode_uses_retrieval(cfg_.retrieval);
  if (needs_target && encoded_target == nullptr) {
    throw ConfigError("retrieval mode " + ralstm::to_string(cfg_.retrieval) +
                      " requires an encoded target");
  }
  if (!needs_target && encoded_target != nullptr) {
    throw ConfigError("retrieval mode off does not accept an encoded target");
  }
  if (training && cfg_.dropout > 0.0 && dropout_rng == nullptr) {
    throw ConfigError("training forward with dropout needs a random generator");
  }

  Graph g;
  g.tape = &tape;
  g.training = training;
  g.rng = dropout_rng;

  if (cfg_.train_embeddings) {
    g.embed = tape.param("embed.weight", store_.get("embed.weight"));
  } else {
    g.embed = tape.leaf(store_.get("embed.weight"));
  }
  g.lstm = lstm_bind(tape, store_, "lstm",
                     {cfg_.embed_dim + cfg_.hidden_dim, cfg_.hidden_dim});
  g.attn = additive_attn_bind(tape, store_, "attn",
                              {cfg_.hidden_dim, cfg_.hidden_dim, cfg_.attention_dim()});
  if (mode_uses_fusion(cfg_.retrieval)) {
    g.fuse = multi_level_attn_bind(tape, store_, "fuse",
                                   {cfg_.hidden_dim, cfg_.hidden_dim, cfg_.attention_dim()});
  }
  g.out_w = tape.param("out.weight", store_.get("out.weight"));
  g.out_b = tape.param("out.bias", store_.get("out.bias"));

  Value feat_w = tape.param("feat_proj.weight", store_.get("feat_proj.weight"));
  Value feat_b = tape.param("feat_proj.bias", store_.get("feat_proj.bias"));
  g.features = add_col_broadcast(matmul(feat_w, tape.leaf(features)), feat_b);

  Value v_bar = tape.leaf(column_mean(features));
  Value h0 = dense(v_bar, tape.param("init_h.weight", store_.get("init_h.weight")),
                   tape.param("init_h.bias", store_.get("init_h.bias")));

  if (needs_target) {
    Projection proj = projection_bind(tape, store_, "target_proj",
                                      {cfg_.target_encode_dim(), cfg_.hidden_dim, true});
    g.r_yn = project(proj, tape.leaf(*encoded_target));
    g.has_target = true;
  }

  Value m0;
  if (mode_uses_memory_init(cfg_.retrieval)) {
    m0 = g.r_yn;
  } else {
    m0 = dense(v_bar, tape.param("init_m.weight", store_.get("init_m.weight")),
               tape.param("init_m.bias", store_.get("init_m.bias")));
  }

  g.state.h = h0;
  g.state.m = m0;
  return g;
}

CaptionModel::StepResult CaptionModel::step(Graph& graph, std::uint32_t token) const {
  if (token >= cfg_.vocab_size) {
    throw Error("token id " + std::to_string(token) + " outside vocabulary of size " +
                std::to_string(cfg_.vocab_size));
  }
  Value x_word = row(graph.embed, token);

  StepResult result;
  AttnResult att = additive_attention(graph.features, graph.state.h, graph.attn);
  result.alpha = att.alpha;
  Value context = att.context;
  if (mode_uses_fusion(cfg_.retrieval)) {
    MultiLevelResult fused =
        multi_level_attention(att.context, graph.r_yn, graph.state.h, graph.fuse);
    context = fused.context;
    result.fusion = fused.weights;
    result.has_fusion = true;
  }

  auto [h, m] = lstm_cell(concat(x_word, context), graph.state.h, graph.state.m, graph.lstm);
  Value dropped = dropout(h, cfg_.dropout, graph.training, graph.rng);
  result.logits = dense(dropped, graph.out_w, graph.out_b);

  graph.state.h = h;
  graph.state.m = m;
  ++graph.state.step;
  return result;
}

Value CaptionModel::loss(Tape& tape, const Tensor& features, const Tensor* encoded_target,
                         const std::vector<std::uint32_t>& caption,
                         std::mt19937_64* dropout_rng) const {
  if (caption.empty()) throw Error("caption must be non-empty");
  Graph graph = start(tape, features, encoded_target, true, dropout_rng);

  Value total;
  const std::size_t steps = caption.size() + 1;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::uint32_t input = t == 0 ? kBosId : caption[t - 1];
    const std::uint32_t target = t < caption.size() ? caption[t] : kEosId;
    StepResult sr = step(graph, input);
    Value ce = cross_entropy(sr.logits, target);
    total = t == 0 ? ce : add(total, ce);
  }
  return scale(total, 1.0 / static_cast<double>(steps));
}

std::vector<std::uint32_t> CaptionModel::greedy_decode(
    const Tensor& features, const Tensor* encoded_target, std::size_t max_len, AttnTrace* trace,
    const std::vector<std::string>* id_to_token) const {
  if (max_len == 0) throw ConfigError("max_len must be at least 1");
  Tape tape;
  Graph graph = start(tape, features, encoded_target, false, nullptr);

  std::vector<std::uint32_t> out;
  std::uint32_t input = kBosId;
  while (true) {
    StepResult sr = step(graph, input);
    Tensor logits = tape.value(sr.logits);
    const std::uint32_t best = argmax_smallest_id(logits);
    if (trace != nullptr) {
      Tensor alpha = tape.value(sr.alpha);
      Tensor fusion;
      const Tensor* fusion_ptr = nullptr;
      if (sr.has_fusion) {
        fusion = tape.value(sr.fusion);
        fusion_ptr = &fusion;
      }
      trace->steps.push_back(make_trace_step(token_name(best, id_to_token), alpha, fusion_ptr));
    }
    if (best == kEosId) break;
    out.push_back(best);
    graph.state.emitted.push_back(best);
    if (out.size() >= max_len) break;
    input = best;
  }
  return out;
}

void CaptionModel::save(const std::string& path) const {
  save_checkpoint(path, cfg_.to_json(), store_);
}

CaptionModel CaptionModel::load(const std::string& path) {
  CheckpointData data = load_checkpoint(path);
  CaptionModel model(CaptionModelConfig::from_json(data.config_json));
  auto& created = model.store_.tensors();
  if (created.size() != data.tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(data.tensors.size()) +
                      " tensors, this configuration expects " + std::to_string(created.size()));
  }
  for (auto& [name, tensor] : data.tensors) {
    auto it = created.find(name);
    if (it == created.end()) {
      throw FormatError("checkpoint tensor '" + name + "' is not part of this model");
    }
    if (!it->second.same_shape(tensor)) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + tensor.shape_str() +
                        ", expected " + it->second.shape_str());
    }
    it->second = std::move(tensor);
  }
  return model;
}

SentimentModel::SentimentModel(const SentimentModelConfig& cfg) : cfg_(cfg), store_(cfg.seed) {
  cfg_.validate();
  const std::size_t hidden = cfg_.hidden_dim;
  store_.create("embed.weight", {cfg_.vocab_size, cfg_.embed_dim}, cfg_.embed_dim);
  lstm_create(store_, "lstm", {cfg_.embed_dim, hidden});
  if (mode_uses_fusion(cfg_.retrieval)) {
    additive_attn_create(store_, "attn", {hidden, hidden, cfg_.attention_dim()});
    multi_level_attn_create(store_, "fuse", {hidden, hidden, cfg_.attention_dim()});
  }
  if (mode_uses_retrieval(cfg_.retrieval)) {
    projection_create(store_, "target_proj", {cfg_.target_encode_dim(), hidden, true});
  }
  store_.create("out.weight", {1, hidden}, hidden);
  store_.create("out.bias", {1}, hidden);
}

void SentimentModel::init_embeddings(const EmbeddingTable& table,
                                     const std::vector<std::string>& id_to_token) {
  overwrite_embedding_rows(store_.get("embed.weight"), table, id_to_token);
}

SentimentModel::ForwardResult SentimentModel::forward(Tape& tape,
                                                      const std::vector<std::uint32_t>& tokens,
                                                      const Tensor* encoded_label, bool training,
                                                      std::mt19937_64* dropout_rng) const {
  if (tokens.empty()) throw Error("token sequence must be non-empty");
  for (std::uint32_t token : tokens) {
    if (token >= cfg_.vocab_size) {
      throw Error("token id " + std::to_string(token) + " outside vocabulary of size " +
                  std::to_string(cfg_.vocab_size));
    }
  }
  const bool needs_target = mode_uses_retrieval(cfg_.retrieval);
  if (needs_target && encoded_label == nullptr) {
    throw ConfigError("retrieval mode " + ralstm::to_string(cfg_.retrieval) +
                      " requires an encoded label vector");
  }
  if (!needs_target && encoded_label != nullptr) {
    throw ConfigError("retrieval mode off does not accept an encoded label vector");
  }
  if (training && cfg_.dropout > 0.0 && dropout_rng == nullptr) {
    throw ConfigError("training forward with dropout needs a random generator");
  }

  Value embed = cfg_.train_embeddings ? tape.param("embed.weight", store_.get("embed.weight"))
                                      : tape.leaf(store_.get("embed.weight"));
  LstmParams lstm = lstm_bind(tape, store_, "lstm", {cfg_.embed_dim, cfg_.hidden_dim});
  Value out_w = tape.param("out.weight", store_.get("out.weight"));
  Value out_b = tape.param("out.bias", store_.get("out.bias"));

  Value r_yn;
  if (needs_target) {
    Projection proj = projection_bind(tape, store_, "target_proj",
                                      {cfg_.target_encode_dim(), cfg_.hidden_dim, true});
    r_yn = project(proj, tape.leaf(*encoded_label));
  }

  // The hidden state always starts at zero; retrieval only ever seeds the
  // memory cell.
  Value h = tape.leaf(Tensor::zeros({cfg_.hidden_dim}));
  Value m = mode_uses_memory_init(cfg_.retrieval)
                ? r_yn
                : tape.leaf(Tensor::zeros({cfg_.hidden_dim}));

  std::vector<Value> hidden_states;
  hidden_states.reserve(tokens.size());
  for (std::uint32_t token : tokens) {
    auto [new_h, new_m] = lstm_cell(row(embed, token), h, m, lstm);
    h = new_h;
    m = new_m;
    hidden_states.push_back(h);
  }

  ForwardResult result;
  Value head_in = h;
  if (mode_uses_fusion(cfg_.retrieval)) {
    AdditiveAttnParams attn =
        additive_attn_bind(tape, store_, "attn",
                           {cfg_.hidden_dim, cfg_.hidden_dim, cfg_.attention_dim()});
    MultiLevelAttnParams fuse =
        multi_level_attn_bind(tape, store_, "fuse",
                              {cfg_.hidden_dim, cfg_.hidden_dim, cfg_.attention_dim()});
    SentimentAttnResult sa =
        sentiment_attention(stack_cols(hidden_states), h, r_yn, attn, fuse);
    head_in = sa.context;
    result.alpha = sa.alpha;
    result.fusion = sa.weights;
    result.has_attention = true;
  }

  Value dropped = dropout(head_in, cfg_.dropout, training, dropout_rng);
  result.prob = sigmoid(dense(dropped, out_w, out_b));
  return result;
}

Value SentimentModel::loss(Tape& tape, const std::vector<std::uint32_t>& tokens,
                           const Tensor* encoded_label, int label,
                           std::mt19937_64* dropout_rng) const {
  ForwardResult fr = forward(tape, tokens, encoded_label, true, dropout_rng);
  return binary_cross_entropy(fr.prob, label);
}

double SentimentModel::predict(const std::vector<std::uint32_t>& tokens,
                               const Tensor* encoded_label, AttnTrace* trace) const {
  Tape tape;
  ForwardResult fr = forward(tape, tokens, encoded_label, false, nullptr);
  const double p = tape.value(fr.prob)[0];
  if (trace != nullptr && fr.has_attention) {
    Tensor alpha = tape.value(fr.alpha);
    Tensor fusion = tape.value(fr.fusion);
    trace->steps.push_back(make_trace_step("<classify>", alpha, &fusion));
  }
  return p;
}

void SentimentModel::save(const std::string& path) const {
  save_checkpoint(path, cfg_.to_json(), store_);
}

SentimentModel SentimentModel::load(const std::string& path) {
  CheckpointData data = load_checkpoint(path);
  SentimentModel model(SentimentModelConfig::from_json(data.config_json));
  auto& created = model.store_.tensors();
  if (created.size() != data.tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(data.tensors.size()) +
                      " tensors, this configuration expects " + std::to_string(created.size()));
  }
  for (auto& [name, tensor] : data.tensors) {
    auto it = created.find(name);
    if (it == created.end()) {
      throw FormatError("checkpoint tensor '" + name + "' is not part of this model");
    }
    if (!it->second.same_shape(tensor)) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + tensor.shape_str() +
                        ", expected " + it->second.shape_str());
    }
    it->second = std::move(tensor);
  }
  return model;
}

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  wire::write_magic(os, kModelMagic);
  wire::write_le<std::uint16_t>(os, kModelVersion);
  wire::write_le<std::uint64_t>(os, config_json.size());
  os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  wire::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.count()));
  for (const auto& [name, tensor] : store.tensors()) {
    wire::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    wire::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(tensor.ndim()));
    for (std::size_t d : tensor.shape()) wire::write_le<std::uint64_t>(os, d);
    for (std::size_t i = 0; i < tensor.size(); ++i) wire::write_f64(os, tensor[i]);
  }
  if (!os) throw Error("failed writing '" + path + "'");
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open checkpoint '" + path + "'");
  wire::expect_magic(is, kModelMagic, path);
  const auto version = wire::read_le<std::uint16_t>(is);
  if (version != kModelVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " in " +
                      path);
  }
  const auto json_len = wire::read_le<std::uint64_t>(is);
  CheckpointData data;
  data.config_json.resize(json_len);
  is.read(data.config_json.data(), static_cast<std::streamsize>(json_len));
  if (!is) throw FormatError("truncated config block in " + path);

  const auto count = wire::read_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = wire::read_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!is) throw FormatError("truncated tensor name in " + path);
    const auto ndim = wire::read_le<std::uint8_t>(is);
    std::vector<std::size_t> shape(ndim);
    std::size_t total = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<std::size_t>(wire::read_le<std::uint64_t>(is));
      total *= shape[d];
    }
    Tensor tensor(shape);
    for (std::size_t j = 0; j < total; ++j) tensor[j] = wire::read_f64(is);
    if (data.tensors.count(name)) {
      throw FormatError("duplicate tensor '" + name + "' in " + path);
    }
    data.tensors.emplace(std::move(name), std::move(tensor));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after checkpoint data in " + path);
  }
  return data;
}

}  // namespace ralstm
