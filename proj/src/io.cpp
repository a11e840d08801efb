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

#include "ralstm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ralstm/errors.hpp"
#include "ralstm/models.hpp"
#include "ralstm/wire.hpp"

namespace ralstm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFeatureMagic[5] = "RAFX";

std::string line_prefix(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

/// %.17g round-trips doubles exactly through text.
std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Atomic writes
// ---------------------------------------------------------------------------

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("short write to " + tmp);
  }
  fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Feature files
// ---------------------------------------------------------------------------

void save_features(const std::string& path, const Tensor& features) {
  if (features.ndim() != 2) {
    throw DimensionError("feature block must be 2-d, got " + features.shape_str());
  }
  if (features.rows() == 0 || features.cols() == 0) {
    throw DimensionError("feature block must be non-empty, got " + features.shape_str());
  }
  std::ostringstream os(std::ios::binary);
  wire::write_magic(os, kFeatureMagic);
  wire::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(features.cols()));
  wire::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(features.rows()));
  for (std::size_t k = 0; k < features.cols(); ++k) {
    for (std::size_t d = 0; d < features.rows(); ++d) {
      wire::write_f32(os, static_cast<float>(features.at(d, k)));
    }
  }
  atomic_write_file(path, os.str());
}

Tensor load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("feature file not found: " + path);
  wire::expect_magic(is, kFeatureMagic, path);
  const auto regions = wire::read_le<std::uint32_t>(is);
  const auto dim = wire::read_le<std::uint32_t>(is);
  if (regions == 0 || dim == 0) {
    throw FormatError(path + ": feature file declares an empty block (" +
                      std::to_string(regions) + " regions x " + std::to_string(dim) + " dims)");
  }
  Tensor features({dim, regions});
  for (std::uint32_t k = 0; k < regions; ++k) {
    for (std::uint32_t d = 0; d < dim; ++d) {
      features.at(d, k) = static_cast<double>(wire::read_f32(is));
    }
  }
  if (is.peek() != std::ifstream::traits_type::eof()) {
    throw FormatError(path + ": trailing bytes after feature data");
  }
  return features;
}

// ---------------------------------------------------------------------------
// Tokenization and vocabulary
// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!word.empty()) out.push_back(word);
      word.clear();
    } else {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!word.empty()) out.push_back(word);
  return out;
}

Vocab::Vocab() {
  id_to_token_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (std::uint32_t i = 0; i < id_to_token_.size(); ++i) token_to_id_[id_to_token_[i]] = i;
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& texts, std::size_t min_count) {
  if (min_count == 0) throw ConfigError("vocabulary min_count must be positive");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (const auto& token : text) ++counts[token];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  if (kept.empty()) {
    throw Error("no token occurs at least " + std::to_string(min_count) +
                " times; the vocabulary would be empty");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  for (const auto& [token, count] : kept) {
    vocab.token_to_id_[token] = static_cast<std::uint32_t>(vocab.id_to_token_.size());
    vocab.id_to_token_.push_back(token);
  }
  return vocab;
}

void Vocab::save(const std::string& path) const {
  std::ostringstream os;
  for (const auto& token : id_to_token_) os << token << "\n";
  atomic_write_file(path, os.str());
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("vocabulary manifest not found: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  if (lines.size() < kNumSpecialTokens + 1) {
    throw FormatError(path + ": manifest holds " + std::to_string(lines.size()) +
                      " tokens; expected the " + std::to_string(kNumSpecialTokens) +
                      " reserved tokens plus at least one word");
  }
  Vocab vocab;
  for (std::uint32_t i = 0; i < kNumSpecialTokens; ++i) {
    if (lines[i] != vocab.id_to_token_[i]) {
      throw FormatError(path + ":" + std::to_string(i + 1) + ": expected reserved token " +
                        vocab.id_to_token_[i] + ", got " + lines[i]);
    }
  }
  for (std::size_t i = kNumSpecialTokens; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      throw FormatError(path + ":" + std::to_string(i + 1) + ": empty token line");
    }
    if (vocab.token_to_id_.count(lines[i]) != 0) {
      throw FormatError(path + ":" + std::to_string(i + 1) + ": duplicate token " + lines[i]);
    }
    vocab.token_to_id_[lines[i]] = static_cast<std::uint32_t>(vocab.id_to_token_.size());
    vocab.id_to_token_.push_back(lines[i]);
  }
  return vocab;
}

std::uint32_t Vocab::id_or_unk(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

std::vector<std::uint32_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(id_or_unk(token));
  return ids;
}

const std::string& Vocab::token(std::uint32_t id) const {
  if (id >= id_to_token_.size()) {
    throw Error("token id " + std::to_string(id) + " outside vocabulary of size " +
                std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

// ---------------------------------------------------------------------------
// Dataset records
// ---------------------------------------------------------------------------

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (expected train, val, or test)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  throw Error("unreachable");
}

std::vector<DatasetRecord> read_dataset_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("dataset file not found: " + path);
  std::vector<DatasetRecord> records;
  std::map<std::uint64_t, std::size_t> seen;  // id -> line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(line_prefix(path, line_no) + "invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError(line_prefix(path, line_no) + "record is not an object");

    DatasetRecord rec;
    if (!j.contains("id") || !j["id"].is_number_unsigned()) {
      throw FormatError(line_prefix(path, line_no) + "missing or non-integer 'id'");
    }
    rec.id = j["id"].get<std::uint64_t>();
    if (auto it = seen.find(rec.id); it != seen.end()) {
      throw FormatError(line_prefix(path, line_no) + "duplicate id " + std::to_string(rec.id) +
                        " (first seen on line " + std::to_string(it->second) + ")");
    }
    seen[rec.id] = line_no;
    if (!j.contains("split") || !j["split"].is_string()) {
      throw FormatError(line_prefix(path, line_no) + "missing or non-string 'split'");
    }
    try {
      rec.split = split_from_string(j["split"].get<std::string>());
    } catch (const ConfigError& e) {
      throw FormatError(line_prefix(path, line_no) + e.what());
    }

    const bool caption_kind = j.contains("features") || j.contains("captions");
    const bool sentiment_kind = j.contains("text") || j.contains("label");
    if (caption_kind && sentiment_kind) {
      throw FormatError(line_prefix(path, line_no) + "record mixes caption and sentiment fields");
    }
    if (!caption_kind && !sentiment_kind) {
      throw FormatError(line_prefix(path, line_no) +
                        "record has neither caption fields (features, captions) nor sentiment "
                        "fields (text, label)");
    }
    if (caption_kind) {
      if (!j.contains("features") || !j["features"].is_string() ||
          j["features"].get<std::string>().empty()) {
        throw FormatError(line_prefix(path, line_no) + "missing or empty 'features' path");
      }
      if (!j.contains("captions") || !j["captions"].is_array() || j["captions"].empty()) {
        throw FormatError(line_prefix(path, line_no) +
                          "'captions' must be a non-empty array of strings");
      }
      rec.feature_path = j["features"].get<std::string>();
      for (std::size_t c = 0; c < j["captions"].size(); ++c) {
        const json& cap = j["captions"][c];
        if (!cap.is_string() || tokenize(cap.get<std::string>()).empty()) {
          throw FormatError(line_prefix(path, line_no) + "caption " + std::to_string(c + 1) +
                            " is empty or not a string");
        }
        rec.captions.push_back(cap.get<std::string>());
      }
    } else {
      if (!j.contains("text") || !j["text"].is_string() ||
          tokenize(j["text"].get<std::string>()).empty()) {
        throw FormatError(line_prefix(path, line_no) + "missing or empty 'text'");
      }
      if (!j.contains("label") || !j["label"].is_number_integer()) {
        throw FormatError(line_prefix(path, line_no) + "missing or non-integer 'label'");
      }
      const auto label = j["label"].get<long long>();
      if (label != 0 && label != 1) {
        throw FormatError(line_prefix(path, line_no) + "label must be 0 or 1, got " +
                          std::to_string(label));
      }
      rec.text = j["text"].get<std::string>();
      rec.label = static_cast<int>(label);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw FormatError(path + ": dataset file holds no records");
  return records;
}

// ---------------------------------------------------------------------------
// Dataset loading
// ---------------------------------------------------------------------------

LoadedCaptionData load_caption_dataset(const std::string& path, std::size_t min_count) {
  const std::vector<DatasetRecord> records = read_dataset_records(path);
  const fs::path base = fs::path(path).parent_path();

  LoadedCaptionData out;
  std::vector<std::vector<std::string>> train_texts;
  for (const DatasetRecord& rec : records) {
    if (!rec.is_caption()) {
      throw FormatError(path + ": record " + std::to_string(rec.id) +
                        " is a sentiment record in a caption dataset");
    }
    std::vector<std::vector<std::string>> tokenized;
    for (const std::string& caption : rec.captions) {
      tokenized.push_back(tokenize(caption));
      if (rec.split == Split::kTrain) train_texts.push_back(tokenized.back());
    }
    out.tokens.emplace(rec.id, std::move(tokenized));
  }
  out.vocab = Vocab::build(train_texts, min_count);

  for (const DatasetRecord& rec : records) {
    CaptionExample ex;
    ex.id = rec.id;
    const fs::path feat = fs::path(rec.feature_path).is_absolute()
                              ? fs::path(rec.feature_path)
                              : base / rec.feature_path;
    ex.features = load_features(feat.string());
    for (const auto& tokens : out.tokens.at(rec.id)) {
      ex.captions.push_back(out.vocab.encode(tokens));
    }
    switch (rec.split) {
      case Split::kTrain: out.data.train.push_back(std::move(ex)); break;
      case Split::kVal: out.data.val.push_back(std::move(ex)); break;
      case Split::kTest: out.data.test.push_back(std::move(ex)); break;
    }
  }
  return out;
}

LoadedSentimentData load_sentiment_dataset(const std::string& path, std::size_t min_count) {
  const std::vector<DatasetRecord> records = read_dataset_records(path);

  LoadedSentimentData out;
  std::vector<std::vector<std::string>> train_texts;
  for (const DatasetRecord& rec : records) {
    if (!rec.is_sentiment()) {
      throw FormatError(path + ": record " + std::to_string(rec.id) +
                        " is a caption record in a sentiment dataset");
    }
    std::vector<std::string> tokens = tokenize(rec.text);
    if (rec.split == Split::kTrain) train_texts.push_back(tokens);
    out.tokens.emplace(rec.id, std::move(tokens));
  }
  out.vocab = Vocab::build(train_texts, min_count);

  for (const DatasetRecord& rec : records) {
    SentimentExample ex;
    ex.id = rec.id;
    ex.tokens = out.vocab.encode(out.tokens.at(rec.id));
    ex.label = rec.label;
    switch (rec.split) {
      case Split::kTrain: out.data.train.push_back(std::move(ex)); break;
      case Split::kVal: out.data.val.push_back(std::move(ex)); break;
      case Split::kTest: out.data.test.push_back(std::move(ex)); break;
    }
  }
  return out;
}

void fill_queries_from_sentences(std::vector<SentimentExample>& split,
                                 const SentenceEmbeddings& sentences) {
  for (SentimentExample& ex : split) {
    if (!sentences.contains(ex.id)) {
      throw NotFoundError("no sentence vector for example " + std::to_string(ex.id));
    }
    const std::vector<double>& vec = sentences.at(ex.id);
    ex.query.assign(vec.begin(), vec.end());
  }
}

void fill_queries_from_words(std::vector<SentimentExample>& split,
                             const std::map<std::uint64_t, std::vector<std::string>>& tokens,
                             const EmbeddingTable& words) {
  for (SentimentExample& ex : split) {
    auto it = tokens.find(ex.id);
    if (it == tokens.end()) {
      throw NotFoundError("no token list for example " + std::to_string(ex.id));
    }
    Tensor avg;
    try {
      avg = norm_weighted_avg(it->second, words);
    } catch (const Error& e) {
      throw Error("example " + std::to_string(ex.id) + ": " + e.what());
    }
    ex.query.assign(avg.data(), avg.data() + avg.size());
  }
}

// ---------------------------------------------------------------------------
// Synthetic benchmark
// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
  if (prototypes < 2) {
    throw ConfigError("synth spec needs at least 2 prototypes, got " +
                      std::to_string(prototypes));
  }
  if (dim == 0) throw ConfigError("synth spec dim must be positive");
  if (noise < 0.0 || !std::isfinite(noise)) {
    throw ConfigError("synth spec noise must be a finite non-negative number");
  }
  if (train_count == 0 || val_count == 0 || test_count == 0) {
    throw ConfigError("synth spec needs positive train/val/test counts");
  }
  if (task != "caption" && task != "sentiment") {
    throw ConfigError("synth spec task must be 'caption' or 'sentiment', got '" + task + "'");
  }
  if (held_fraction < 0.0 || held_fraction >= 1.0) {
    throw ConfigError("synth spec held_fraction must lie in [0, 1)");
  }
  if (text_signal < 0.0 || text_signal > 1.0) {
    throw ConfigError("synth spec text_signal must lie in [0, 1]");
  }
  if (held_fraction > 0.0) {
    const auto held = static_cast<std::size_t>(static_cast<double>(prototypes) * held_fraction);
    if (held == 0 || held >= prototypes) {
      throw ConfigError("held_fraction leaves no prototypes for one of the pools");
    }
  }
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid synth spec JSON: ") + e.what());
  }
  SynthSpec spec;
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ConfigError(std::string("synth spec missing field /") + key);
    return j[key];
  };
  auto get_size = [&](const char* key) {
    const json& v = require(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(std::string("synth spec field /") + key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
  };
  auto get_double = [&](const char* key, double fallback, bool required) {
    if (!required && !j.contains(key)) return fallback;
    const json& v = require(key);
    if (!v.is_number()) throw ConfigError(std::string("synth spec field /") + key + " must be a number");
    return v.get<double>();
  };
  spec.prototypes = get_size("prototypes");
  spec.dim = get_size("dim");
  spec.noise = get_double("noise", 0.0, true);
  spec.train_count = get_size("train_count");
  spec.val_count = get_size("val_count");
  spec.test_count = get_size("test_count");
  spec.seed = get_size("seed");
  const json& task = require("task");
  if (!task.is_string()) throw ConfigError("synth spec field /task must be a string");
  spec.task = task.get<std::string>();
  spec.held_fraction = get_double("held_fraction", 0.0, false);
  spec.text_signal = get_double("text_signal", 0.3, false);
  spec.validate();
  return spec;
}

std::string SynthSpec::to_json() const {
  json j;
  j["prototypes"] = prototypes;
  j["dim"] = dim;
  j["noise"] = noise;
  j["train_count"] = train_count;
  j["val_count"] = val_count;
  j["test_count"] = test_count;
  j["seed"] = seed;
  j["task"] = task;
  j["held_fraction"] = held_fraction;
  j["text_signal"] = text_signal;
  return j.dump(2);
}

namespace {

/// Smallest W with W^3 >= P (at least 2): three caption slots with W word
/// choices each give every prototype a distinct token triple.
std::size_t words_per_slot(std::size_t prototypes) {
  std::size_t w = 2;
  while (w * w * w < prototypes) ++w;
  return w;
}

std::string slot_word(std::size_t slot, std::size_t index) {
  return "t" + std::to_string(slot) + "w" + std::to_string(index);
}

}  // namespace

SynthResult synth_generate(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Prototype vectors, scaled so random draws sit well apart.
  std::vector<std::vector<double>> protos(spec.prototypes, std::vector<double>(spec.dim));
  for (auto& proto : protos) {
    for (double& x : proto) x = 3.0 * normal(rng);
  }
  double min_sep2 = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < protos.size(); ++a) {
    for (std::size_t b = a + 1; b < protos.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < spec.dim; ++i) {
        const double diff = protos[a][i] - protos[b][i];
        d2 += diff * diff;
      }
      min_sep2 = std::min(min_sep2, d2);
    }
  }
  const double min_sep = std::sqrt(min_sep2);
  if (spec.noise >= min_sep / 2.0) {
    throw Error("noise " + format_double(spec.noise) +
                " is not below half the minimum prototype separation " + format_double(min_sep) +
                "; clusters would overlap");
  }

  // Prototype targets.
  const std::size_t w = words_per_slot(spec.prototypes);
  std::vector<std::string> proto_caption(spec.prototypes);
  std::vector<int> proto_label(spec.prototypes);
  if (spec.task == "caption") {
    for (std::size_t p = 0; p < spec.prototypes; ++p) {
      proto_caption[p] = slot_word(0, p % w) + " " + slot_word(1, (p / w) % w) + " " +
                         slot_word(2, (p / (w * w)) % w);
    }
  } else {
    std::uniform_int_distribution<int> coin(0, 1);
    bool all_same = true;
    for (std::size_t p = 0; p < spec.prototypes; ++p) {
      proto_label[p] = coin(rng);
      if (p > 0 && proto_label[p] != proto_label[0]) all_same = false;
    }
    if (all_same) proto_label.back() = 1 - proto_label[0];
  }

  // Prototype pools per split: with a held fraction, the leading prototypes
  // serve only val/test and the rest serve only train.
  const auto held = spec.held_fraction > 0.0
                        ? static_cast<std::size_t>(static_cast<double>(spec.prototypes) *
                                                   spec.held_fraction)
                        : 0;
  std::vector<std::size_t> train_pool, eval_pool;
  for (std::size_t p = 0; p < spec.prototypes; ++p) {
    if (p < held) {
      eval_pool.push_back(p);
    } else {
      train_pool.push_back(p);
      if (held == 0) eval_pool.push_back(p);
    }
  }

  SynthResult result;
  result.min_separation = min_sep;
  result.dataset_path = (out / "dataset.jsonl").string();
  if (spec.task == "caption") result.features_dir = (out / "features").string();

  constexpr std::size_t kRegions = 3;
  constexpr std::size_t kFillerWords = 8;
  std::uniform_int_distribution<std::size_t> filler(0, kFillerWords - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::ostringstream dataset;
  std::ostringstream sentences;
  if (spec.task == "sentiment") sentences << "#dim " << spec.dim << "\n";

  std::uint64_t next_id = 0;
  auto emit_split = [&](Split split, std::size_t count, const std::vector<std::size_t>& pool) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t p = pool[i % pool.size()];
      const std::uint64_t id = next_id++;
      json rec;
      rec["id"] = id;
      rec["split"] = to_string(split);
      if (spec.task == "caption") {
        Tensor features({spec.dim, kRegions});
        for (std::size_t k = 0; k < kRegions; ++k) {
          for (std::size_t d = 0; d < spec.dim; ++d) {
            features.at(d, k) = protos[p][d] + spec.noise * normal(rng);
          }
        }
        const std::string rel = "features/" + std::to_string(id) + ".rafx";
        save_features((out / rel).string(), features);
        rec["features"] = rel;
        rec["captions"] = json::array({proto_caption[p]});
      } else {
        std::vector<double> vec(spec.dim);
        for (std::size_t d = 0; d < spec.dim; ++d) {
          vec[d] = protos[p][d] + spec.noise * normal(rng);
        }
        sentences << id << "\t";
        for (std::size_t d = 0; d < spec.dim; ++d) {
          sentences << (d ? " " : "") << format_double(vec[d]);
        }
        sentences << "\n";
        // Text: the first token names the label with probability text_signal,
        // the rest is filler, so the text alone supports only weak accuracy.
        std::string text;
        if (unit(rng) < spec.text_signal) {
          text = proto_label[p] == 1 ? "good" : "bad";
        } else {
          text = "f" + std::to_string(filler(rng));
        }
        for (std::size_t t = 0; t < 3; ++t) text += " f" + std::to_string(filler(rng));
        rec["text"] = text;
        rec["label"] = proto_label[p];
      }
      dataset << rec.dump() << "\n";
    }
  };
  emit_split(Split::kTrain, spec.train_count, train_pool);
  emit_split(Split::kVal, spec.val_count, eval_pool);
  emit_split(Split::kTest, spec.test_count, eval_pool);

  atomic_write_file(result.dataset_path, dataset.str());
  if (spec.task == "sentiment") {
    result.sentence_vectors_path = (out / "sentences.vec").string();
    atomic_write_file(result.sentence_vectors_path, sentences.str());
  }
  if (spec.task == "caption") {
    // One-hot word vectors per slot position: the vector average of a caption
    // cleanly separates the three slots, so a retrieved caption embedding is
    // decodable back into its tokens.
    std::ostringstream words;
    words << 3 * w << " " << 3 * w << "\n";
    for (std::size_t slot = 0; slot < 3; ++slot) {
      for (std::size_t k = 0; k < w; ++k) {
        words << slot_word(slot, k);
        for (std::size_t d = 0; d < 3 * w; ++d) {
          words << " " << (d == slot * w + k ? "1" : "0");
        }
        words << "\n";
      }
    }
    result.word_vectors_path = (out / "words.vec").string();
    atomic_write_file(result.word_vectors_path, words.str());
  }
  return result;
}

}  // namespace ralstm
