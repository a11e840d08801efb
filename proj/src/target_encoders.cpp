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

#include "ralstm/target_encoders.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "ralstm/errors.hpp"
#include "ralstm/ops.hpp"

namespace ralstm {

namespace {

bool is_integer_field(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

double parse_double(const std::string& field, const std::string& path, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad number '" + field + "' at " + path + ":" + std::to_string(line_no));
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(std::move(field));
  return out;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingTable::put(const std::string& token, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw DimensionError("vector for token '" + token + "' has dimension " +
                         std::to_string(vector.size()) + ", table expects " +
                         std::to_string(dim_));
  }
  vectors_[token] = std::move(vector);
}

const std::vector<double>& EmbeddingTable::at(const std::string& token) const {
  auto it = vectors_.find(token);
  if (it == vectors_.end()) throw NotFoundError("token '" + token + "' not in embedding table");
  return it->second;
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open embedding table '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::vector<std::pair<std::string, std::vector<double>>> rows;

  bool first_content_line = true;
  while (std::getline(is, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (first_content_line) {
      first_content_line = false;
      // Optional "count dim" header, as emitted by common word-vector dumps.
      if (fields.size() == 2 && is_integer_field(fields[0]) && is_integer_field(fields[1])) {
        continue;
      }
    }
    if (fields.size() < 2) {
      throw FormatError("expected 'token v1 .. vD' at " + path + ":" + std::to_string(line_no));
    }
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      vec.push_back(parse_double(fields[i], path, line_no));
    }
    if (dim == 0) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw FormatError("token '" + fields[0] + "' has " + std::to_string(vec.size()) +
                        " values, expected " + std::to_string(dim) + " at " + path + ":" +
                        std::to_string(line_no));
    }
    rows.emplace_back(std::move(fields[0]), std::move(vec));
  }
  if (rows.empty()) throw FormatError("no embeddings found in '" + path + "'");

  EmbeddingTable table(dim);
  for (auto& [token, vec] : rows) {
    if (table.contains(token)) {
      throw FormatError("duplicate token '" + token + "' in '" + path + "'");
    }
    table.put(token, std::move(vec));
  }
  return table;
}

SentenceEmbeddings::SentenceEmbeddings(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("sentence embedding dimension must be positive");
}

void SentenceEmbeddings::put(std::uint64_t id, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw DimensionError("vector for id " + std::to_string(id) + " has dimension " +
                         std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  vectors_[id] = std::move(vector);
}

const std::vector<double>& SentenceEmbeddings::at(std::uint64_t id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) {
    throw NotFoundError("no sentence embedding for id " + std::to_string(id));
  }
  return it->second;
}

SentenceEmbeddings SentenceEmbeddings::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open sentence embedding file '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::vector<std::pair<std::uint64_t, std::vector<double>>> rows;

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!have_header) {
      auto fields = split_fields(line);
      if (fields.size() != 2 || fields[0] != "#dim" || !is_integer_field(fields[1])) {
        throw FormatError("expected '#dim D' header at " + path + ":" + std::to_string(line_no));
      }
      dim = static_cast<std::size_t>(std::stoull(fields[1]));
      if (dim == 0) throw FormatError("zero dimension header in '" + path + "'");
      have_header = true;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("expected 'id<TAB>values' at " + path + ":" + std::to_string(line_no));
    }
    const std::string id_field = line.substr(0, tab);
    if (!is_integer_field(id_field)) {
      throw FormatError("bad id '" + id_field + "' at " + path + ":" + std::to_string(line_no));
    }
    const std::uint64_t id = std::stoull(id_field);
    auto fields = split_fields(line.substr(tab + 1));
    if (fields.size() != dim) {
      throw FormatError("id " + id_field + " has " + std::to_string(fields.size()) +
                        " values, expected " + std::to_string(dim) + " at " + path + ":" +
                        std::to_string(line_no));
    }
    std::vector<double> vec;
    vec.reserve(dim);
    for (const auto& f : fields) vec.push_back(parse_double(f, path, line_no));
    rows.emplace_back(id, std::move(vec));
  }
  if (!have_header) throw FormatError("missing '#dim D' header in '" + path + "'");

  SentenceEmbeddings out(dim);
  for (auto& [id, vec] : rows) {
    if (out.contains(id)) {
      throw FormatError("duplicate id " + std::to_string(id) + " in '" + path + "'");
    }
    out.put(id, std::move(vec));
  }
  return out;
}

Tensor avg_embedding(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  std::vector<double> acc(table.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& token : tokens) {
    if (!table.contains(token)) continue;
    const auto& vec = table.at(token);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += vec[i];
    ++hits;
  }
  if (hits == 0) throw Error("no in-vocabulary tokens to average");
  for (double& x : acc) x /= static_cast<double>(hits);
  return Tensor::vec(std::move(acc));
}

Tensor norm_weighted_avg(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  std::vector<double> acc(table.dim(), 0.0);
  double total = 0.0;
  std::size_t hits = 0;
  for (const auto& token : tokens) {
    if (!table.contains(token)) continue;
    const auto& vec = table.at(token);
    double norm = 0.0;
    for (double x : vec) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += norm * vec[i];
    total += norm;
    ++hits;
  }
  if (hits == 0) throw Error("no in-vocabulary tokens to average");
  if (total == 0.0) throw Error("all token vectors have zero norm; weights undefined");
  for (double& x : acc) x /= total;
  return Tensor::vec(std::move(acc));
}

Tensor contextual_embedding(std::uint64_t example_id, const SentenceEmbeddings& embeddings) {
  return Tensor::vec(embeddings.at(example_id));
}

TargetEncoderMode target_encoder_mode_from_string(const std::string& name) {
  if (name == "avg") return TargetEncoderMode::kAvg;
  if (name == "weighted") return TargetEncoderMode::kWeighted;
  if (name == "contextual") return TargetEncoderMode::kContextual;
  if (name == "plusminus") return TargetEncoderMode::kPlusMinus;
  if (name == "class_avg") return TargetEncoderMode::kClassAvg;
  if (name == "class_weighted") return TargetEncoderMode::kClassWeighted;
  if (name == "class_contextual") return TargetEncoderMode::kClassContextual;
  throw ConfigError("unknown target encoder mode '" + name + "'");
}

std::string to_string(TargetEncoderMode mode) {
  switch (mode) {
    case TargetEncoderMode::kAvg: return "avg";
    case TargetEncoderMode::kWeighted: return "weighted";
    case TargetEncoderMode::kContextual: return "contextual";
    case TargetEncoderMode::kPlusMinus: return "plusminus";
    case TargetEncoderMode::kClassAvg: return "class_avg";
    case TargetEncoderMode::kClassWeighted: return "class_weighted";
    case TargetEncoderMode::kClassContextual: return "class_contextual";
  }
  throw ConfigError("unknown target encoder mode");
}

bool is_caption_encoder_mode(TargetEncoderMode mode) {
  return mode == TargetEncoderMode::kAvg || mode == TargetEncoderMode::kWeighted ||
         mode == TargetEncoderMode::kContextual;
}

bool is_sentiment_encoder_mode(TargetEncoderMode mode) {
  return !is_caption_encoder_mode(mode);
}

Tensor plus_minus_encoding(int label, std::size_t dim) {
  if (label != 0 && label != 1) {
    throw Error("labels must be 0 or 1, got " + std::to_string(label));
  }
  if (dim == 0) throw ConfigError("encoding dimension must be positive");
  return Tensor::full({dim}, label == 1 ? 1.0 : -1.0);
}

namespace {

/// Mean over per-sentence vectors of one class. `encode` returns nullopt for
/// sentences that cannot be encoded (for example, all tokens out of
/// vocabulary); those are skipped. An empty class is an error.
template <typename EncodeFn>
Tensor class_mean(int label, const std::vector<LabeledSentence>& train_split, std::size_t dim,
                  EncodeFn encode) {
  std::vector<double> acc(dim, 0.0);
  std::size_t n = 0;
  for (const auto& sentence : train_split) {
    if (sentence.label != label) continue;
    std::optional<Tensor> vec = encode(sentence);
    if (!vec) continue;
    for (std::size_t i = 0; i < dim; ++i) acc[i] += (*vec)[i];
    ++n;
  }
  if (n == 0) {
    throw Error("no encodable training sentences with label " + std::to_string(label));
  }
  for (double& x : acc) x /= static_cast<double>(n);
  return Tensor::vec(std::move(acc));
}

/// True when at least one token is in vocabulary and, for the norm-weighted
/// mean, the total weight is positive.
bool encodable(const std::vector<std::string>& tokens, const EmbeddingTable& table,
               bool weighted) {
  double total = 0.0;
  bool any = false;
  for (const auto& token : tokens) {
    if (!table.contains(token)) continue;
    any = true;
    if (!weighted) return true;
    for (double x : table.at(token)) total += x * x;
  }
  return weighted ? total > 0.0 : any;
}

}  // namespace

SentimentTargetEncoder::SentimentTargetEncoder(TargetEncoderMode mode, std::size_t dim)
    : mode_(mode) {
  if (mode != TargetEncoderMode::kPlusMinus) {
    throw ConfigError("mode " + to_string(mode) + " needs a training corpus");
  }
  class_vectors_[0] = plus_minus_encoding(0, dim);
  class_vectors_[1] = plus_minus_encoding(1, dim);
}

SentimentTargetEncoder::SentimentTargetEncoder(TargetEncoderMode mode,
                                               const std::vector<LabeledSentence>& train_split,
                                               const EmbeddingTable& table)
    : mode_(mode) {
  if (mode != TargetEncoderMode::kClassAvg && mode != TargetEncoderMode::kClassWeighted) {
    throw ConfigError("mode " + to_string(mode) + " does not pool word vectors");
  }
  const bool weighted = mode == TargetEncoderMode::kClassWeighted;
  auto encode = [&](const LabeledSentence& s) -> std::optional<Tensor> {
    if (!encodable(s.tokens, table, weighted)) return std::nullopt;
    return weighted ? norm_weighted_avg(s.tokens, table) : avg_embedding(s.tokens, table);
  };
  class_vectors_[0] = class_mean(0, train_split, table.dim(), encode);
  class_vectors_[1] = class_mean(1, train_split, table.dim(), encode);
}

SentimentTargetEncoder::SentimentTargetEncoder(TargetEncoderMode mode,
                                               const std::vector<LabeledSentence>& train_split,
                                               const SentenceEmbeddings& embeddings)
    : mode_(mode) {
  if (mode != TargetEncoderMode::kClassContextual) {
    throw ConfigError("mode " + to_string(mode) + " does not use sentence embeddings");
  }
  auto encode = [&](const LabeledSentence& s) -> std::optional<Tensor> {
    if (!embeddings.contains(s.id)) return std::nullopt;
    return contextual_embedding(s.id, embeddings);
  };
  class_vectors_[0] = class_mean(0, train_split, embeddings.dim(), encode);
  class_vectors_[1] = class_mean(1, train_split, embeddings.dim(), encode);
}

const Tensor& SentimentTargetEncoder::encode(int label) const {
  if (label != 0 && label != 1) {
    throw Error("labels must be 0 or 1, got " + std::to_string(label));
  }
  return class_vectors_[label];
}

void projection_create(ParamStore& store, const std::string& prefix, const ProjectionSpec& spec) {
  if (spec.encode_dim == 0 || spec.lstm_dim == 0) {
    throw ConfigError("projection dimensions must be positive");
  }
  store.create(prefix + ".weight", {spec.lstm_dim, spec.encode_dim}, spec.encode_dim);
  if (spec.use_bias) store.create(prefix + ".bias", {spec.lstm_dim}, spec.encode_dim);
}

Projection projection_bind(Tape& tape, const ParamStore& store, const std::string& prefix,
                           const ProjectionSpec& spec) {
  Projection proj;
  proj.use_bias = spec.use_bias;
  proj.weight = tape.param(prefix + ".weight", store.get(prefix + ".weight"));
  if (spec.use_bias) {
    proj.bias = tape.param(prefix + ".bias", store.get(prefix + ".bias"));
  }
  return proj;
}

Value project(const Projection& proj, Value f_yn) {
  return proj.use_bias ? dense(f_yn, proj.weight, proj.bias) : dense(f_yn, proj.weight);
}

}  // namespace ralstm
