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

// End-to-end acceptance checks for the toolkit. Each criterion is a
// self-contained property with an independent oracle; the binary prints one
// PASS/FAIL line per criterion and exits with the number of failures.
//
//   ralstm_acceptance            run every criterion
//   ralstm_acceptance --only N   run criterion N alone (used by ctest)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ralstm/attention.hpp"
#include "ralstm/cli.hpp"
#include "ralstm/io.hpp"
#include "ralstm/knn_store.hpp"
#include "ralstm/lstm.hpp"
#include "ralstm/models.hpp"
#include "ralstm/ops.hpp"
#include "ralstm/params.hpp"
#include "ralstm/tape.hpp"
#include "ralstm/target_encoders.hpp"
#include "ralstm/tensor.hpp"
#include "ralstm/train_eval.hpp"
#include "support/finite_diff.hpp"

using namespace ralstm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Tensor random_tensor(const std::vector<std::size_t>& shape, std::mt19937_64& rng,
                     double scale = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

/// Column mean in the same accumulation order the models use, so hand-built
/// baselines reproduce their initial states bit for bit.
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

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& stem) {
    path = fs::temp_directory_path() / stem;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int cli_or_die(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) {
    std::string cmd;
    for (const std::string& a : args) cmd += a + " ";
    throw Failure{"command '" + cmd + "' failed: " + err.str()};
  }
  return code;
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Failure{"missing output file " + path};
  return json::parse(is);
}

// ---------------------------------------------------------------------------
// 1. Gradients of both full models match central finite differences.
// ---------------------------------------------------------------------------

std::string check_gradients() {
  double worst = 0.0;
  std::string where;

  {
    CaptionModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.embed_dim = 8;
    cfg.hidden_dim = 8;
    cfg.feature_dim = 6;
    cfg.retrieval = RetrievalMode::kCombined;
    cfg.dropout = 0.0;
    cfg.train_embeddings = true;
    cfg.seed = 12;
    CaptionModel model(cfg);
    std::mt19937_64 rng(100);
    Tensor features = random_tensor({6, 4}, rng);
    Tensor encoded = random_tensor({8}, rng);
    std::vector<std::uint32_t> caption = {4, 7, 5, 10, 6};

    auto loss_fn = [&]() {
      Tape tape;
      return tape.value(model.loss(tape, features, &encoded, caption))[0];
    };
    Tape tape;
    GradMap grads = tape.backward(model.loss(tape, features, &encoded, caption));
    auto check = testing::finite_diff_check(model.params(), grads, loss_fn);
    if (check.max_rel_error > worst) {
      worst = check.max_rel_error;
      where = "caption " + check.worst_param;
    }
  }
  {
    SentimentModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.embed_dim = 8;
    cfg.hidden_dim = 8;
    cfg.retrieval = RetrievalMode::kCombined;
    cfg.dropout = 0.0;
    cfg.train_embeddings = true;
    cfg.seed = 13;
    SentimentModel model(cfg);
    std::mt19937_64 rng(101);
    Tensor encoded = random_tensor({8}, rng);
    std::vector<std::uint32_t> tokens = {4, 9, 6, 10, 5};

    auto loss_fn = [&]() {
      Tape tape;
      return tape.value(model.loss(tape, tokens, &encoded, 1))[0];
    };
    Tape tape;
    GradMap grads = tape.backward(model.loss(tape, tokens, &encoded, 1));
    auto check = testing::finite_diff_check(model.params(), grads, loss_fn);
    if (check.max_rel_error > worst) {
      worst = check.max_rel_error;
      where = "sentiment " + check.worst_param;
    }
  }

  require(worst < 1e-4, "max relative gradient error " + num(worst) + " at " + where);
  return "max rel err " + num(worst);
}

// ---------------------------------------------------------------------------
// 2. search(k=5) matches a full-sort brute-force scan, ties included.
// ---------------------------------------------------------------------------

std::string check_knn_exactness() {
  constexpr std::size_t kCount = 1000, kDim = 64, kQueries = 200, kK = 5;
  std::mt19937_64 rng(200);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);

  std::vector<std::vector<float>> vectors(kCount, std::vector<float>(kDim));
  for (auto& v : vectors) {
    for (float& x : v) x = dist(rng);
  }
  // Plant exact duplicates so the tie rule (smaller id first) is exercised.
  for (std::size_t id = 100; id < kCount; id += 100) vectors[id] = vectors[id - 1];

  ExampleStore store(kDim);
  for (std::size_t id = 0; id < kCount; ++id) {
    store.add(id, vectors[id], TargetPayload::make_label(static_cast<int>(id % 2)));
  }
  store.freeze();

  for (std::size_t q = 0; q < kQueries; ++q) {
    std::vector<float> query(kDim);
    if (q % 10 == 9) {
      query = vectors[(q * 37) % kCount];  // stored vector: distance-zero ties
    } else {
      for (float& x : query) x = dist(rng);
    }

    // Oracle: score every row in id order with the same double accumulation,
    // then a full stable sort by (distance, id).
    std::vector<std::pair<double, std::uint64_t>> all(kCount);
    for (std::size_t id = 0; id < kCount; ++id) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < kDim; ++j) {
        const double diff = static_cast<double>(vectors[id][j]) - static_cast<double>(query[j]);
        d2 += diff * diff;
      }
      all[id] = {d2, id};
    }
    std::sort(all.begin(), all.end());

    const std::vector<RetrievalHit> hits = store.search(query, kK);
    require(hits.size() == kK, "query " + std::to_string(q) + ": got " +
                                   std::to_string(hits.size()) + " hits");
    for (std::size_t i = 0; i < kK; ++i) {
      require(hits[i].id == all[i].second,
              "query " + std::to_string(q) + " rank " + std::to_string(i) + ": store id " +
                  std::to_string(hits[i].id) + ", oracle id " + std::to_string(all[i].second));
      require(hits[i].distance == all[i].first,
              "query " + std::to_string(q) + " rank " + std::to_string(i) + ": distance " +
                  num(hits[i].distance) + " vs oracle " + num(all[i].first));
    }
  }
  return std::to_string(kQueries) + " queries over " + std::to_string(kCount) + " vectors exact";
}

// ---------------------------------------------------------------------------
// 3. Attention weights are probability vectors; fusion output stays on the
//    segment between its two inputs.
// ---------------------------------------------------------------------------

std::string check_attention_algebra() {
  constexpr std::size_t kDraws = 10000;
  std::mt19937_64 rng(300);
  double worst_sum = 0.0, worst_pair = 0.0, worst_segment = 0.0;

  for (std::size_t draw = 0; draw < kDraws; ++draw) {
    const std::size_t K = 1 + rng() % 8;
    const std::size_t D = 1 + rng() % 6;
    const std::size_t H = 1 + rng() % 6;
    const std::size_t A = 1 + rng() % 6;

    ParamStore store(draw + 1);
    additive_attn_create(store, "attn", {D, H, A});
    multi_level_attn_create(store, "fuse", {D, H, A});

    Tape tape;
    Tensor features = random_tensor({D, K}, rng, 3.0);
    Tensor h = random_tensor({H}, rng, 3.0);
    Tensor r = random_tensor({D}, rng, 3.0);

    AdditiveAttnParams attn = additive_attn_bind(tape, store, "attn", {D, H, A});
    MultiLevelAttnParams fuse = multi_level_attn_bind(tape, store, "fuse", {D, H, A});
    AttnResult att = additive_attention(tape.leaf(features), tape.leaf(h), attn);
    MultiLevelResult fused =
        multi_level_attention(att.context, tape.leaf(r), tape.leaf(h), fuse);

    Tensor alpha = tape.value(att.alpha);
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      require(alpha[i] >= 0.0, "negative attention weight");
      sum += alpha[i];
    }
    worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));

    Tensor w = tape.value(fused.weights);
    require(w.size() == 2 && w[0] >= 0.0 && w[1] >= 0.0, "fusion weights not a 2-vector");
    worst_pair = std::max(worst_pair, std::fabs(w[0] + w[1] - 1.0));

    Tensor c = tape.value(att.context);
    Tensor chat = tape.value(fused.context);
    for (std::size_t i = 0; i < chat.size(); ++i) {
      worst_segment = std::max(worst_segment, std::fabs(chat[i] - (w[0] * c[i] + w[1] * r[i])));
    }
  }

  require(worst_sum < 1e-6, "attention weights sum off by " + num(worst_sum));
  require(worst_pair < 1e-9, "fusion pair sum off by " + num(worst_pair));
  require(worst_segment < 1e-12, "fused context off the segment by " + num(worst_segment));
  return "sum dev " + num(worst_sum) + ", pair dev " + num(worst_pair) + ", segment dev " +
         num(worst_segment);
}

// ---------------------------------------------------------------------------
// 4. With retrieval off, both models reduce to plain baseline graphsbit for
//    bit.
// ---------------------------------------------------------------------------

std::string check_baseline_reduction() {
  constexpr std::size_t kInputs = 100;

  CaptionModelConfig ccfg;
  ccfg.vocab_size = 11;
  ccfg.embed_dim = 8;
  ccfg.hidden_dim = 8;
  ccfg.feature_dim = 6;
  ccfg.retrieval = RetrievalMode::kOff;
  ccfg.dropout = 0.0;
  ccfg.seed = 21;
  CaptionModel caption(ccfg);
  const ParamStore& cs = caption.params();

  std::mt19937_64 rng(400);
  for (std::size_t i = 0; i < kInputs; ++i) {
    Tensor features = random_tensor({6, 4}, rng);
    std::vector<std::uint32_t> inputs = {kBosId, static_cast<std::uint32_t>(4 + i % 7),
                                         static_cast<std::uint32_t>(4 + (i + 3) % 7)};

    Tape tape;
    CaptionModel::Graph graph = caption.start(tape, features, nullptr);
    std::vector<Tensor> model_logits;
    for (std::uint32_t tok : inputs) {
      model_logits.push_back(tape.value(caption.step(graph, tok).logits));
    }

    // Baseline: the same building blocks wired with no retrieval branches.
    Tape hand;
    Value feats = add_col_broadcast(
        matmul(hand.param("feat_proj.weight", cs.get("feat_proj.weight")), hand.leaf(features)),
        hand.param("feat_proj.bias", cs.get("feat_proj.bias")));
    Value v_bar = hand.leaf(column_mean(features));
    Value h = dense(v_bar, hand.param("init_h.weight", cs.get("init_h.weight")),
                    hand.param("init_h.bias", cs.get("init_h.bias")));
    Value m = dense(v_bar, hand.param("init_m.weight", cs.get("init_m.weight")),
                    hand.param("init_m.bias", cs.get("init_m.bias")));
    LstmParams lstm = lstm_bind(hand, cs, "lstm", {ccfg.embed_dim + ccfg.hidden_dim,
                                                   ccfg.hidden_dim});
    AdditiveAttnParams attn = additive_attn_bind(
        hand, cs, "attn", {ccfg.hidden_dim, ccfg.hidden_dim, ccfg.attention_dim()});
    Value embed = hand.param("embed.weight", cs.get("embed.weight"));
    Value out_w = hand.param("out.weight", cs.get("out.weight"));
    Value out_b = hand.param("out.bias", cs.get("out.bias"));
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      AttnResult att = additive_attention(feats, h, attn);
      auto [h2, m2] = lstm_cell(concat(row(embed, inputs[t]), att.context), h, m, lstm);
      h = h2;
      m = m2;
      Tensor logits = hand.value(dense(h, out_w, out_b));
      require(bitwise_equal(model_logits[t], logits),
              "caption logits differ from the baseline at input " + std::to_string(i) +
                  " step " + std::to_string(t));
    }
  }

  SentimentModelConfig scfg;
  scfg.vocab_size = 11;
  scfg.embed_dim = 8;
  scfg.hidden_dim = 8;
  scfg.retrieval = RetrievalMode::kOff;
  scfg.dropout = 0.0;
  scfg.seed = 22;
  SentimentModel sentiment(scfg);
  const ParamStore& ss = sentiment.params();

  for (std::size_t i = 0; i < kInputs; ++i) {
    std::vector<std::uint32_t> tokens(5);
    for (std::uint32_t& tok : tokens) tok = 4 + rng() % 7;
    const double model_prob = sentiment.predict(tokens, nullptr);

    Tape hand;
    Value embed = hand.param("embed.weight", ss.get("embed.weight"));
    LstmParams lstm = lstm_bind(hand, ss, "lstm", {scfg.embed_dim, scfg.hidden_dim});
    Value h = hand.leaf(Tensor::zeros({scfg.hidden_dim}));
    Value m = hand.leaf(Tensor::zeros({scfg.hidden_dim}));
    for (std::uint32_t tok : tokens) {
      auto [h2, m2] = lstm_cell(row(embed, tok), h, m, lstm);
      h = h2;
      m = m2;
    }
    Value prob = sigmoid(dense(h, hand.param("out.weight", ss.get("out.weight")),
                               hand.param("out.bias", ss.get("out.bias"))));
    const double hand_prob = hand.value(prob)[0];
    require(std::memcmp(&model_prob, &hand_prob, sizeof(double)) == 0,
            "sentiment prob differs from the baseline at input " + std::to_string(i));
  }

  return std::to_string(kInputs) + " caption + " + std::to_string(kInputs) +
         " sentiment inputs bit-identical";
}

// ---------------------------------------------------------------------------
// 5. Synthetic sentiment benchmark: memory-state injection beats the
//    text-only baseline by a clear margin.
// ---------------------------------------------------------------------------

std::string check_synthetic_sentiment() {
  TempDir dir("ralstm_accept_sent");
  json cfg;
  cfg["version"] = 1;
  cfg["task"] = "sentiment";
  cfg["synth"] = {{"prototypes", 256}, {"dim", 16},        {"noise", 0.5},
                  {"train_count", 2000}, {"val_count", 500}, {"test_count", 500},
                  {"seed", 33},          {"task", "sentiment"},
                  {"out_dir", dir.file("bench")}};
  cfg["data"] = {{"dataset", dir.file("bench/dataset.jsonl")},
                 {"min_count", 1},
                 {"sentence_vectors", dir.file("bench/sentences.vec")}};
  cfg["model"] = {{"embed_dim", 8}, {"hidden_dim", 16}, {"mode", "off"},
                  {"dropout", 0.0}, {"seed", 7}};
  cfg["train"] = {{"lr", 0.05}, {"batch_size", 32}, {"max_epochs", 8}, {"seed", 3}};
  cfg["retrieval"] = {{"index", dir.file("bench/index.store")}};
  cfg["paths"] = {{"run_dir", dir.file("run_off")}};
  const std::string path = dir.file("config.json");
  atomic_write_file(path, cfg.dump(2));

  cli_or_die({"synth", "--config", path});
  cli_or_die({"build-index", "--config", path});

  auto run_arm = [&](const std::string& mode) {
    const std::string run = dir.file("run_" + mode);
    cli_or_die({"train", "--config", path, "--set", "/model/mode=" + mode, "--set",
                "/paths/run_dir=" + run});
    const std::string eval = dir.file("eval_" + mode + ".json");
    cli_or_die({"evaluate", "--config", path, "--set", "/model/mode=" + mode, "--set",
                "/paths/run_dir=" + run, "--split", "test", "--out", eval});
    return read_json(eval).at("accuracy").get<double>();
  };

  const double off = run_arm("off");
  const double m0 = run_arm("m0_init");
  require(m0 >= 0.90, "m0_init test accuracy " + num(m0) + " below 0.90");
  require(m0 - off >= 0.05,
          "m0_init " + num(m0) + " does not clear baseline " + num(off) + " by 0.05");
  return "off " + num(off) + ", m0_init " + num(m0);
}

// ---------------------------------------------------------------------------
// 6. Synthetic caption benchmark: memorization on a 50-example split, then
//    generalization to held-out prototypes via retrieval.
// ---------------------------------------------------------------------------

/// Builds a frozen index over the given splits, keyed by the pooled feature
/// mean, with word-average encodings of the first reference as targets.
struct CaptionRetrieval {
  ExampleStore store;
  RetrievalContext ctx;

  CaptionRetrieval(std::vector<const std::vector<CaptionExample>*> splits, const Vocab& vocab,
                   const EmbeddingTable& words, std::size_t dim)
      : store(dim) {
    for (const auto* split : splits) {
      for (const CaptionExample& ex : *split) {
        store.add(ex.id, pooled_query(ex.features), TargetPayload::make_caption(ex.captions[0]));
        std::vector<std::string> tokens;
        for (std::uint32_t id : ex.captions[0]) tokens.push_back(vocab.token(id));
        ctx.encoded.emplace(ex.id, avg_embedding(tokens, words));
      }
    }
    store.freeze();
    ctx.store = &store;
  }
};

std::string check_synthetic_caption() {
  TrainConfig tcfg = TrainConfig::caption_defaults();
  tcfg.lr = 0.02;
  tcfg.batch_size = 5;
  tcfg.seed = 17;
  tcfg.decode_max_len = 5;
  // Scripted always-improving validation: every arm runs all its epochs and
  // keeps the final weights, so the comparison is epoch-for-epoch fair.
  tcfg.validation_override = [](std::size_t epoch) { return static_cast<double>(epoch); };

  // Part one: memorize a 50-example split.
  double overfit_bleu1 = 0.0;
  {
    TempDir dir("ralstm_accept_cap1");
    SynthSpec spec;
    spec.prototypes = 12;
    spec.dim = 8;
    spec.noise = 0.05;
    spec.train_count = 50;
    spec.val_count = 12;
    spec.test_count = 12;
    spec.seed = 41;
    spec.task = "caption";
    const SynthResult synth = synth_generate(spec, dir.file("bench"));

    LoadedCaptionData loaded = load_caption_dataset(synth.dataset_path, 1);
    EmbeddingTable words = EmbeddingTable::load(synth.word_vectors_path);
    CaptionRetrieval retrieval({&loaded.data.train}, loaded.vocab, words, spec.dim);

    CaptionModelConfig mcfg;
    mcfg.vocab_size = loaded.vocab.size();
    mcfg.embed_dim = words.dim();
    mcfg.hidden_dim = 16;
    mcfg.feature_dim = spec.dim;
    mcfg.encode_dim = words.dim();
    mcfg.retrieval = RetrievalMode::kCombined;
    mcfg.dropout = 0.0;
    mcfg.seed = 51;
    CaptionModel model(mcfg);
    model.init_embeddings(words, loaded.vocab.id_to_token());

    tcfg.max_epochs = 200;
    train_caption(model, loaded.data, &retrieval.ctx, tcfg);
    overfit_bleu1 =
        evaluate_caption(model, loaded.data.train, &retrieval.ctx, tcfg.decode_max_len)[0];
    require(overfit_bleu1 >= 0.95,
            "overfit BLEU-1 " + num(overfit_bleu1) + " below 0.95 after 200 epochs");
  }

  // Part two: held-out prototypes. Train and validation examples live in the
  // index; test examples only ever see their prototypes through retrieval.
  // High feature noise keeps the parametric feature path from generalizing,
  // so the margin isolates what retrieval contributes.
  TempDir dir("ralstm_accept_cap2");
  SynthSpec spec;
  spec.prototypes = 100;
  spec.dim = 16;
  spec.noise = 2.0;
  spec.train_count = 225;
  spec.val_count = 50;
  spec.test_count = 50;
  spec.seed = 42;
  spec.task = "caption";
  spec.held_fraction = 0.25;
  const SynthResult synth = synth_generate(spec, dir.file("bench"));

  LoadedCaptionData loaded = load_caption_dataset(synth.dataset_path, 1);
  EmbeddingTable words = EmbeddingTable::load(synth.word_vectors_path);
  // Train and validation examples are retrievable; the test split is not, so
  // test inputs can only reach their prototypes through a neighbor.
  CaptionRetrieval index({&loaded.data.train, &loaded.data.val}, loaded.vocab, words, spec.dim);

  CaptionModelConfig base;
  base.vocab_size = loaded.vocab.size();
  base.embed_dim = words.dim();
  base.hidden_dim = 24;
  base.feature_dim = spec.dim;
  base.encode_dim = words.dim();
  base.dropout = 0.0;
  base.seed = 52;
  tcfg.max_epochs = 120;
  tcfg.decode_max_len = 3;

  base.retrieval = RetrievalMode::kCombined;
  CaptionModel combined(base);
  combined.init_embeddings(words, loaded.vocab.id_to_token());
  train_caption(combined, loaded.data, &index.ctx, tcfg);
  const double combined_bleu1 =
      evaluate_caption(combined, loaded.data.test, &index.ctx, tcfg.decode_max_len)[0];

  base.retrieval = RetrievalMode::kOff;
  base.encode_dim = 0;
  CaptionModel off(base);
  off.init_embeddings(words, loaded.vocab.id_to_token());
  train_caption(off, loaded.data, nullptr, tcfg);
  const double off_bleu1 =
      evaluate_caption(off, loaded.data.test, nullptr, tcfg.decode_max_len)[0];

  require(combined_bleu1 - off_bleu1 >= 0.10,
          "held-prototype BLEU-1: combined " + num(combined_bleu1) + " vs baseline " +
              num(off_bleu1) + ", margin under 10 points");
  return "overfit " + num(overfit_bleu1) + "; held combined " + num(combined_bleu1) +
         " vs off " + num(off_bleu1);
}

// ---------------------------------------------------------------------------
// 7. The decay/stop schedule follows an independently scripted oracle.
// ---------------------------------------------------------------------------

std::string check_schedule() {
  struct Oracle {
    double lr, shrink;
    std::size_t patience_decay, patience_stop;
    double best = -1.0;
    std::size_t since_best = 0;

    struct Step {
      bool improved, decayed, stopped;
      double lr;
    };
    Step observe(double metric) {
      Step s{};
      if (metric > best) {
        best = metric;
        since_best = 0;
        s.improved = true;
      } else {
        ++since_best;
      }
      if (since_best >= patience_stop) {
        s.stopped = true;
      } else if (since_best > 0 && since_best % patience_decay == 0) {
        lr *= shrink;
        s.decayed = true;
      }
      s.lr = lr;
      return s;
    }
  };

  auto run_script = [](const std::vector<double>& script, const std::string& name) {
    TrainSchedule sched(0.1, 0.8, 5, 12);
    Oracle oracle{0.1, 0.8, 5, 12};
    for (std::size_t i = 0; i < script.size(); ++i) {
      TrainSchedule::Outcome got = sched.observe(script[i]);
      Oracle::Step want = oracle.observe(script[i]);
      const std::string at = name + " epoch " + std::to_string(i + 1);
      require(got.improved == want.improved, at + ": improved flag mismatch");
      require(got.decayed == want.decayed, at + ": decay flag mismatch");
      require(got.stopped == want.stopped, at + ": stop flag mismatch");
      require(got.lr == want.lr, at + ": lr " + num(got.lr) + " vs oracle " + num(want.lr));
      if (want.stopped) break;
    }
  };

  std::vector<double> frozen(14, 0.5);
  run_script(frozen, "frozen");

  std::vector<double> improving;
  for (std::size_t i = 0; i < 13; ++i) improving.push_back(0.1 * static_cast<double>(i + 1));
  run_script(improving, "improving");

  std::vector<double> mixed = {0.3, 0.5, 0.7};
  mixed.insert(mixed.end(), 15, 0.7);  // plateau: ties are not improvements
  run_script(mixed, "plateau");

  // The frozen script must decay after epochs 6 and 11 and stop after 12
  // consecutive non-improving epochs, with the exact shrink powers.
  TrainSchedule sched(0.1, 0.8, 5, 12);
  std::vector<std::size_t> decay_epochs;
  std::size_t stop_epoch = 0;
  for (std::size_t epoch = 1; epoch <= frozen.size(); ++epoch) {
    TrainSchedule::Outcome out = sched.observe(0.5);
    if (out.decayed) decay_epochs.push_back(epoch);
    if (out.stopped) {
      stop_epoch = epoch;
      break;
    }
  }
  require(decay_epochs == std::vector<std::size_t>{6, 11},
          "frozen-metric decay epochs off the 6, 11 schedule");
  require(stop_epoch == 13, "frozen-metric stop at epoch " + std::to_string(stop_epoch));
  require(sched.lr() == 0.1 * 0.8 * 0.8, "final lr is not exactly two shrink steps");
  return "frozen decays at 6 and 11, stops at 13, lr exact";
}

// ---------------------------------------------------------------------------
// 8. Metric unit values match hand oracles.
// ---------------------------------------------------------------------------

std::string check_metric_units() {
  using Seq = TokenSeq;
  const Seq five = {"a", "b", "c", "d", "e"};
  std::vector<double> identity = bleu({five}, {{five}});
  for (std::size_t n = 0; n < 4; ++n) {
    require(identity[n] == 1.0, "identity BLEU-" + std::to_string(n + 1) + " is not 1");
  }

  std::vector<double> disjoint = bleu({{"x", "y"}}, {{{"p", "q"}}});
  for (std::size_t n = 0; n < 4; ++n) {
    require(disjoint[n] == 0.0, "disjoint BLEU-" + std::to_string(n + 1) + " is not 0");
  }

  // "the the" against "the cat": one of two unigrams survives clipping.
  const double clipped = bleu({{"the", "the"}}, {{{"the", "cat"}}})[0];
  require(std::fabs(clipped - 0.5) < 1e-12, "clipped-precision BLEU-1 " + num(clipped));

  const std::vector<int> preds = {1, 1, 0, 0}, labels = {1, 0, 1, 0};
  require(accuracy(preds, labels) == 0.5, "accuracy of the half-right case is not 0.5");
  require(std::fabs(f_score(preds, labels) - 0.5) < 1e-12, "macro F of the half-right case");
  // All-positive on a balanced split: F1 for the positive class is 2/3, the
  // negative class contributes 0, macro F = 1/3.
  const double skew = f_score({1, 1}, {1, 0});
  require(std::fabs(skew - 1.0 / 3.0) < 1e-12, "all-positive macro F " + num(skew));
  return "BLEU and classification unit values exact";
}

// ---------------------------------------------------------------------------
// 9. The ablation command emits all four modes and retrieval beats the
//    baseline on the synthetic benchmark.
// ---------------------------------------------------------------------------

std::string check_ablation_table() {
  TempDir dir("ralstm_accept_ablate");
  json cfg;
  cfg["version"] = 1;
  cfg["task"] = "sentiment";
  cfg["synth"] = {{"prototypes", 16}, {"dim", 8},        {"noise", 0.3},
                  {"train_count", 200}, {"val_count", 50}, {"test_count", 50},
                  {"seed", 55},         {"task", "sentiment"},
                  {"out_dir", dir.file("bench")}};
  cfg["data"] = {{"dataset", dir.file("bench/dataset.jsonl")},
                 {"min_count", 1},
                 {"sentence_vectors", dir.file("bench/sentences.vec")}};
  cfg["model"] = {{"embed_dim", 8}, {"hidden_dim", 12}, {"mode", "combined"},
                  {"dropout", 0.0}, {"seed", 9}};
  cfg["train"] = {{"lr", 0.05}, {"batch_size", 16}, {"max_epochs", 6}, {"seed", 3}};
  cfg["retrieval"] = {{"index", dir.file("bench/index.store")}};
  cfg["paths"] = {{"run_dir", dir.file("run")}};
  const std::string path = dir.file("config.json");
  atomic_write_file(path, cfg.dump(2));

  cli_or_die({"synth", "--config", path});
  cli_or_die({"build-index", "--config", path});
  cli_or_die({"ablate", "--config", path, "--out", dir.file("table.json")});

  const json table = read_json(dir.file("table.json"));
  require(table.is_array() && table.size() == 4,
          "expected 4 ablation rows, got " + std::to_string(table.size()));
  const std::vector<std::string> want = {"off", "m0_init", "multi_attn", "combined"};
  for (std::size_t i = 0; i < 4; ++i) {
    require(table[i].at("mode") == want[i], "row " + std::to_string(i) + " mode mismatch");
  }
  const double baseline = table[0].at("accuracy").get<double>();
  std::string summary = "off " + num(baseline);
  for (std::size_t i = 1; i < 4; ++i) {
    const double acc = table[i].at("accuracy").get<double>();
    summary += ", " + want[i] + " " + num(acc);
    require(acc >= baseline,
            want[i] + " accuracy " + num(acc) + " below baseline " + num(baseline));
  }
  return summary;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<std::string()> run;
};

const std::vector<Criterion> kCriteria = {
    {1, "gradient-check", 60.0, check_gradients},
    {2, "knn-exactness", 10.0, check_knn_exactness},
    {3, "attention-algebra", 60.0, check_attention_algebra},
    {4, "baseline-reduction", 60.0, check_baseline_reduction},
    {5, "synthetic-sentiment", 300.0, check_synthetic_sentiment},
    {6, "synthetic-caption", 600.0, check_synthetic_caption},
    {7, "schedule-oracle", 60.0, check_schedule},
    {8, "metric-units", 60.0, check_metric_units},
    {9, "ablation-table", 120.0, check_ablation_table},
};

int run_criterion(const Criterion& c) {
  const auto begin = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    detail = c.run();
    ok = true;
  } catch (const Failure& f) {
    detail = f.detail;
  } catch (const std::exception& e) {
    detail = std::string("unexpected error: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  if (ok && elapsed > c.budget_seconds) {
    ok = false;
    detail = "over time budget of " + num(c.budget_seconds) + "s";
  }
  char line[512];
  std::snprintf(line, sizeof(line), "%s: %d %s (%s; %.1fs)", ok ? "PASS" : "FAIL", c.id,
                c.name.c_str(), detail.c_str(), elapsed);
  std::cout << line << std::endl;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
      ++i;
    } else {
      std::cerr << "usage: " << argv[0] << " [--only N]\n";
      return 2;
    }
  }

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    failures += run_criterion(c);
  }
  return failures;
}
