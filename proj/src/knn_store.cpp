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

#include "ralstm/knn_store.hpp"

#include <algorithm>
#include <fstream>
#include <queue>

#include "ralstm/wire.hpp"

namespace ralstm {

namespace {
constexpr char kMagic[5] = "RKNN";
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kScanChunk = 1024;
}  // namespace

TargetPayload TargetPayload::make_caption(std::vector<std::uint32_t> tokens) {
  if (tokens.empty()) throw Error("caption targets must be non-empty");
  TargetPayload p;
  p.kind = Kind::kCaption;
  p.caption = std::move(tokens);
  return p;
}

TargetPayload TargetPayload::make_label(int label) {
  if (label != 0 && label != 1) {
    throw Error("labels must be 0 or 1, got " + std::to_string(label));
  }
  TargetPayload p;
  p.kind = Kind::kLabel;
  p.label = static_cast<std::uint8_t>(label);
  return p;
}

ExampleStore::ExampleStore(std::size_t dim, Metric metric) : dim_(dim), metric_(metric) {
  if (dim == 0) throw ConfigError("store dimension must be positive");
}

void ExampleStore::add(std::uint64_t id, const std::vector<float>& vector) {
  if (frozen_) throw Error("store is frozen; no further adds");
  if (vector.size() != dim_) {
    throw DimensionError("vector for id " + std::to_string(id) + " has dimension " +
                         std::to_string(vector.size()) + ", store expects " +
                         std::to_string(dim_));
  }
  if (index_of_.count(id)) throw Error("duplicate id " + std::to_string(id));
  index_of_.emplace(id, ids_.size());
  ids_.push_back(id);
  vectors_.insert(vectors_.end(), vector.begin(), vector.end());
}

void ExampleStore::add(std::uint64_t id, const std::vector<float>& vector, TargetPayload target) {
  add(id, vector);
  targets_.emplace(id, std::move(target));
}

void ExampleStore::put_target(std::uint64_t id, TargetPayload target) {
  if (frozen_) throw Error("store is frozen; no further target writes");
  if (!index_of_.count(id)) throw NotFoundError("no vector stored for id " + std::to_string(id));
  targets_.insert_or_assign(id, std::move(target));
}

void ExampleStore::freeze() {
  for (std::uint64_t id : ids_) {
    if (!targets_.count(id)) {
      throw Error("id " + std::to_string(id) + " has no target payload; cannot freeze");
    }
  }
  frozen_ = true;
}

double ExampleStore::score_of(std::size_t row, const std::vector<float>& query) const {
  const float* v = vectors_.data() + row * dim_;
  double acc = 0.0;
  if (metric_ == Metric::kL2) {
    for (std::size_t j = 0; j < dim_; ++j) {
      const double d = static_cast<double>(v[j]) - static_cast<double>(query[j]);
      acc += d * d;
    }
    return acc;
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    acc += static_cast<double>(v[j]) * static_cast<double>(query[j]);
  }
  return -acc;
}

std::vector<RetrievalHit> ExampleStore::search(const std::vector<float>& query, std::size_t k,
                                               const IdSet& exclude) const {
  if (k < 1) throw Error("search requires k >= 1");
  if (query.size() != dim_) {
    throw DimensionError("query has dimension " + std::to_string(query.size()) +
                         ", store expects " + std::to_string(dim_));
  }

  // (score, id) max-heap of the best k so far; lexicographic order gives the
  // smaller-id tie-break for free.
  using Cand = std::pair<double, std::uint64_t>;
  std::priority_queue<Cand> heap;
  for (std::size_t base = 0; base < ids_.size(); base += kScanChunk) {
    const std::size_t end = std::min(base + kScanChunk, ids_.size());
    for (std::size_t row = base; row < end; ++row) {
      const std::uint64_t id = ids_[row];
      if (!exclude.empty() && exclude.count(id)) continue;
      const Cand cand{score_of(row, query), id};
      if (heap.size() < k) {
        heap.push(cand);
      } else if (cand < heap.top()) {
        heap.pop();
        heap.push(cand);
      }
    }
  }

  if (heap.empty()) throw NotFoundError("search found no candidates after exclusion");
  std::vector<RetrievalHit> hits(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    hits[i] = RetrievalHit{heap.top().second, heap.top().first};
    heap.pop();
  }
  return hits;
}

const TargetPayload& ExampleStore::nearest_target(const std::vector<float>& query,
                                                  const IdSet& exclude) const {
  return target(search(query, 1, exclude).front().id);
}

const TargetPayload& ExampleStore::target(std::uint64_t id) const {
  auto it = targets_.find(id);
  if (it == targets_.end()) throw NotFoundError("no target stored for id " + std::to_string(id));
  return it->second;
}

void ExampleStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  wire::write_magic(os, kMagic);
  wire::write_le<std::uint16_t>(os, kVersion);
  wire::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(metric_));
  wire::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dim_));
  wire::write_le<std::uint64_t>(os, ids_.size());
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    wire::write_le<std::uint64_t>(os, ids_[row]);
    for (std::size_t j = 0; j < dim_; ++j) wire::write_f32(os, vectors_[row * dim_ + j]);
  }
  wire::write_le<std::uint64_t>(os, targets_.size());
  // Records in id order keeps the byte stream canonical.
  std::vector<std::uint64_t> target_ids;
  target_ids.reserve(targets_.size());
  for (const auto& [id, payload] : targets_) target_ids.push_back(id);
  std::sort(target_ids.begin(), target_ids.end());
  for (std::uint64_t id : target_ids) {
    const TargetPayload& payload = targets_.at(id);
    wire::write_le<std::uint64_t>(os, id);
    wire::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(payload.kind));
    if (payload.kind == TargetPayload::Kind::kCaption) {
      wire::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(payload.caption.size()));
      for (std::uint32_t token : payload.caption) wire::write_le<std::uint32_t>(os, token);
    } else {
      wire::write_le<std::uint8_t>(os, payload.label);
    }
  }
  if (!os) throw Error("failed writing '" + path + "'");
}

ExampleStore ExampleStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open index file '" + path + "'");
  wire::expect_magic(is, kMagic, path);
  const auto version = wire::read_le<std::uint16_t>(is);
  if (version != kVersion) {
    throw FormatError("unsupported index version " + std::to_string(version) + " in " + path);
  }
  const auto metric_byte = wire::read_le<std::uint8_t>(is);
  if (metric_byte > 1) throw FormatError("unknown metric byte in " + path);
  const auto dim = wire::read_le<std::uint32_t>(is);
  if (dim == 0) throw FormatError("zero dimension in " + path);
  const auto count = wire::read_le<std::uint64_t>(is);

  ExampleStore store(dim, static_cast<Metric>(metric_byte));
  std::vector<float> vec(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id = wire::read_le<std::uint64_t>(is);
    for (std::uint32_t j = 0; j < dim; ++j) vec[j] = wire::read_f32(is);
    store.add(id, vec);
  }
  const auto target_count = wire::read_le<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < target_count; ++i) {
    const auto id = wire::read_le<std::uint64_t>(is);
    const auto kind = wire::read_le<std::uint8_t>(is);
    if (kind == 0) {
      const auto n = wire::read_le<std::uint32_t>(is);
      if (n == 0) throw FormatError("empty caption target for id " + std::to_string(id));
      std::vector<std::uint32_t> tokens(n);
      for (std::uint32_t j = 0; j < n; ++j) tokens[j] = wire::read_le<std::uint32_t>(is);
      store.put_target(id, TargetPayload::make_caption(std::move(tokens)));
    } else if (kind == 1) {
      store.put_target(id, TargetPayload::make_label(wire::read_le<std::uint8_t>(is)));
    } else {
      throw FormatError("unknown target kind " + std::to_string(kind) + " in " + path);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after index data in " + path);
  }
  // A fully-targeted index is a finished artifact; treat it as frozen so it
  // is immediately safe for concurrent search. Partial stores stay mutable.
  store.frozen_ = store.targets_.size() == store.ids_.size();
  return store;
}

}  // namespace ralstm
