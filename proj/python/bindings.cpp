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

// Python bindings for the retrieval-augmented LSTM toolkit. Arrays cross the
// boundary as numpy float64; captions as lists of token ids; everything else
// as plain Python types.

#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "ralstm/attention.hpp"
#include "ralstm/cli.hpp"
#include "ralstm/errors.hpp"
#include "ralstm/io.hpp"
#include "ralstm/knn_store.hpp"
#include "ralstm/models.hpp"
#include "ralstm/target_encoders.hpp"
#include "ralstm/tensor.hpp"
#include "ralstm/train_eval.hpp"

namespace py = pybind11;
using namespace ralstm;
using nlohmann::json;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& array) {
  py::buffer_info info = array.request();
  std::vector<std::size_t> shape(info.shape.begin(), info.shape.end());
  Tensor t(shape);
  const double* src = static_cast<const double*>(info.ptr);
  std::copy(src, src + t.size(), t.data());
  return t;
}

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> out(t.shape());
  std::copy(t.data(), t.data() + t.size(), static_cast<double*>(out.request().ptr));
  return out;
}

std::vector<float> to_query(const std::vector<double>& values) {
  std::vector<float> q(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) q[i] = static_cast<float>(values[i]);
  return q;
}

py::object target_to_py(const TargetPayload& target) {
  if (target.kind == TargetPayload::Kind::kCaption) {
    py::list tokens;
    for (std::uint32_t id : target.caption) tokens.append(id);
    return tokens;
  }
  return py::int_(target.label);
}

py::list trace_to_py(const AttnTrace& trace) {
  py::list steps;
  for (const AttnTraceStep& step : trace.steps) {
    py::dict d;
    d["token"] = step.token;
    d["alpha_regions"] = step.alpha_regions;
    d["alpha_image"] = step.alpha_image;
    d["alpha_retrieved"] = step.alpha_retrieved;
    steps.append(d);
  }
  return steps;
}

py::dict json_to_dict(const json& j) {
  py::object loads = py::module_::import("json").attr("loads");
  return loads(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Retrieval-augmented LSTM toolkit: exact kNN retrieval over training "
            "representations feeding caption and sentiment models.";

  py::register_exception<Error>(m, "ToolkitError");

  // ---- command line ----
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "Run a toolkit command in-process; returns (exit_code, stdout, stderr).");

  // ---- retrieval store ----
  py::class_<ExampleStore>(m, "ExampleStore")
      .def(py::init([](std::size_t dim, const std::string& metric) {
             return ExampleStore(dim, metric == "inner_product" ? Metric::kInnerProduct
                                                                : Metric::kL2);
           }),
           py::arg("dim"), py::arg("metric") = "l2")
      .def(
          "add",
          [](ExampleStore& s, std::uint64_t id, const std::vector<double>& vector,
             py::object caption, py::object label) {
            if (!caption.is_none() && !label.is_none()) {
              throw ConfigError("pass either caption or label, not both");
            }
            if (!caption.is_none()) {
              s.add(id, to_query(vector),
                    TargetPayload::make_caption(caption.cast<std::vector<std::uint32_t>>()));
            } else if (!label.is_none()) {
              s.add(id, to_query(vector), TargetPayload::make_label(label.cast<int>()));
            } else {
              s.add(id, to_query(vector));
            }
          },
          py::arg("id"), py::arg("vector"), py::arg("caption") = py::none(),
          py::arg("label") = py::none())
      .def("freeze", &ExampleStore::freeze)
      .def(
          "search",
          [](const ExampleStore& s, const std::vector<double>& query, std::size_t k,
             const std::vector<std::uint64_t>& exclude) {
            IdSet excl(exclude.begin(), exclude.end());
            py::list hits;
            for (const RetrievalHit& hit : s.search(to_query(query), k, excl)) {
              hits.append(py::make_tuple(hit.id, hit.distance));
            }
            return hits;
          },
          py::arg("query"), py::arg("k") = 1,
          py::arg("exclude") = std::vector<std::uint64_t>{},
          "Exact nearest neighbors as (id, squared_distance) pairs, best first.")
      .def(
          "nearest_target",
          [](const ExampleStore& s, const std::vector<double>& query,
             const std::vector<std::uint64_t>& exclude) {
            IdSet excl(exclude.begin(), exclude.end());
            return target_to_py(s.nearest_target(to_query(query), excl));
          },
          py::arg("query"), py::arg("exclude") = std::vector<std::uint64_t>{},
          "Target of the nearest stored example: a token-id list or an int label.")
      .def("target",
           [](const ExampleStore& s, std::uint64_t id) { return target_to_py(s.target(id)); })
      .def("save", &ExampleStore::save)
      .def_static("load", &ExampleStore::load)
      .def_property_readonly("dim", &ExampleStore::dim)
      .def_property_readonly("count", &ExampleStore::count)
      .def_property_readonly("frozen", &ExampleStore::frozen);

  // ---- target encoders ----
  py::class_<EmbeddingTable>(m, "EmbeddingTable")
      .def(py::init<std::size_t>(), py::arg("dim"))
      .def("put", &EmbeddingTable::put, py::arg("token"), py::arg("vector"))
      .def_static("load", &EmbeddingTable::load)
      .def_property_readonly("dim", &EmbeddingTable::dim);

  m.def(
      "avg_embedding",
      [](const std::vector<std::string>& tokens, const EmbeddingTable& table) {
        return to_array(avg_embedding(tokens, table));
      },
      py::arg("tokens"), py::arg("table"),
      "Mean of the known tokens' word vectors.");
  m.def(
      "norm_weighted_avg",
      [](const std::vector<std::string>& tokens, const EmbeddingTable& table) {
        return to_array(norm_weighted_avg(tokens, table));
      },
      py::arg("tokens"), py::arg("table"),
      "Word-vector average weighted by each vector's L2 norm.");
  m.def(
      "plus_minus_encoding",
      [](int label, std::size_t dim) { return to_array(plus_minus_encoding(label, dim)); },
      py::arg("label"), py::arg("dim"),
      "All-ones (label 1) or all-minus-ones (label 0) vector.");

  // ---- metrics ----
  m.def("bleu", &bleu, py::arg("candidates"), py::arg("references"), py::arg("max_n") = 4,
        "Corpus-level cumulative BLEU-1..max_n with brevity penalty.");
  m.def("accuracy", &accuracy, py::arg("predictions"), py::arg("labels"));
  m.def("f_score", &f_score, py::arg("predictions"), py::arg("labels"),
        "Macro F1 over the two classes.");

  // ---- feature files and vocabulary ----
  m.def(
      "save_features",
      [](const std::string& path, const DoubleArray& array) {
        save_features(path, to_tensor(array));
      },
      py::arg("path"), py::arg("features"),
      "Write a (dim x regions) float32 feature file.");
  m.def(
      "load_features",
      [](const std::string& path) { return to_array(load_features(path)); }, py::arg("path"));

  py::class_<Vocab>(m, "Vocab")
      .def_static("load", &Vocab::load)
      .def_static(
          "build",
          [](const std::vector<std::vector<std::string>>& texts, std::size_t min_count) {
            return Vocab::build(texts, min_count);
          },
          py::arg("texts"), py::arg("min_count") = 5)
      .def("save", &Vocab::save)
      .def("encode", &Vocab::encode, py::arg("tokens"))
      .def("token", &Vocab::token, py::arg("id"))
      .def("id_or_unk", &Vocab::id_or_unk, py::arg("token"))
      .def_property_readonly("size", &Vocab::size);

  m.def("tokenize", &tokenize, py::arg("text"),
        "Lowercased whitespace tokenization, the same used to build datasets.");

  // ---- models ----
  py::class_<CaptionModel>(m, "CaptionModel")
      .def_static("load", &CaptionModel::load)
      .def(
          "generate",
          [](const CaptionModel& model, const DoubleArray& features, py::object encoded,
             std::size_t max_len, bool return_trace) -> py::object {
            Tensor feats = to_tensor(features);
            Tensor enc;
            const Tensor* enc_ptr = nullptr;
            if (!encoded.is_none()) {
              enc = to_tensor(encoded.cast<DoubleArray>());
              enc_ptr = &enc;
            }
            AttnTrace trace;
            std::vector<std::uint32_t> ids = model.greedy_decode(
                feats, enc_ptr, max_len, return_trace ? &trace : nullptr);
            py::list out;
            for (std::uint32_t id : ids) out.append(id);
            if (return_trace) return py::make_tuple(out, trace_to_py(trace));
            return out;
          },
          py::arg("features"), py::arg("encoded") = py::none(), py::arg("max_len") = 20,
          py::arg("return_trace") = false,
          "Greedy-decode token ids; with return_trace, also per-step attention.")
      .def("config", [](const CaptionModel& model) {
        return json_to_dict(json::parse(model.config().to_json()));
      });

  py::class_<SentimentModel>(m, "SentimentModel")
      .def_static("load", &SentimentModel::load)
      .def(
          "predict",
          [](const SentimentModel& model, const std::vector<std::uint32_t>& tokens,
             py::object encoded, bool return_trace) -> py::object {
            Tensor enc;
            const Tensor* enc_ptr = nullptr;
            if (!encoded.is_none()) {
              enc = to_tensor(encoded.cast<DoubleArray>());
              enc_ptr = &enc;
            }
            AttnTrace trace;
            const double p = model.predict(tokens, enc_ptr, return_trace ? &trace : nullptr);
            if (return_trace) return py::make_tuple(p, trace_to_py(trace));
            return py::float_(p);
          },
          py::arg("tokens"), py::arg("encoded") = py::none(), py::arg("return_trace") = false,
          "Positive-class probability; with return_trace, also attention weights.")
      .def("config", [](const SentimentModel& model) {
        return json_to_dict(json::parse(model.config().to_json()));
      });

  // ---- synthetic benchmark ----
  m.def(
      "synth_generate",
      [](const py::dict& spec, const std::string& out_dir) {
        py::object dumps = py::module_::import("json").attr("dumps");
        SynthSpec parsed = SynthSpec::from_json(dumps(spec).cast<std::string>());
        const SynthResult result = synth_generate(parsed, out_dir);
        py::dict out;
        out["dataset"] = result.dataset_path;
        out["word_vectors"] = result.word_vectors_path;
        out["sentence_vectors"] = result.sentence_vectors_path;
        out["features_dir"] = result.features_dir;
        out["min_separation"] = result.min_separation;
        return out;
      },
      py::arg("spec"), py::arg("out_dir"),
      "Generate the clustered synthetic benchmark described by the spec dict.");
}
