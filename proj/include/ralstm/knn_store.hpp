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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ralstm/errors.hpp"

namespace ralstm {

/// Output paired with a stored training input: a caption (token ids of the
/// first reference) or a binary sentiment label.
struct TargetPayload {
  enum class Kind : std::uint8_t { kCaption = 0, kLabel = 1 };

  Kind kind = Kind::kCaption;
  std::vector<std::uint32_t> caption;
  std::uint8_t label = 0;

  static TargetPayload make_caption(std::vector<std::uint32_t> tokens);
  static TargetPayload make_label(int label);

  bool operator==(const TargetPayload&) const = default;
};

struct RetrievalHit {
  std::uint64_t id = 0;
  /// Exact squared Euclidean distance. Under the inner-product metric this is
  /// the negated inner product, so ascending order is best-first for both.
  double distance = 0.0;
};

enum class Metric : std::uint8_t { kL2 = 0, kInnerProduct = 1 };

using IdSet = std::unordered_set<std::uint64_t>;

/// Exact flat index over f32 vectors with an id -> target lookup table.
/// Distances are accumulated in double, in index order, so results are
/// reproducible and match a brute-force scan bit for bit. Ties break toward
/// the smaller id.
class ExampleStore {
 public:
  explicit ExampleStore(std::size_t dim, Metric metric = Metric::kL2);

  void add(std::uint64_t id, const std::vector<float>& vector);
  void add(std::uint64_t id, const std::vector<float>& vector, TargetPayload target);
  void put_target(std::uint64_t id, TargetPayload target);

  /// Marks the store immutable. Requires every id to carry a target.
  /// Concurrent searches are safe afterwards.
  void freeze();
  bool frozen() const { return frozen_; }

  std::vector<RetrievalHit> search(const std::vector<float>& query, std::size_t k,
                                   const IdSet& exclude = {}) const;

  /// search with k = 1 followed by the target lookup.
  const TargetPayload& nearest_target(const std::vector<float>& query,
                                      const IdSet& exclude = {}) const;

  const TargetPayload& target(std::uint64_t id) const;
  bool has(std::uint64_t id) const { return index_of_.count(id) != 0; }

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return ids_.size(); }
  Metric metric() const { return metric_; }
  const std::vector<std::uint64_t>& ids() const { return ids_; }

  void save(const std::string& path) const;
  static ExampleStore load(const std::string& path);

 private:
  double score_of(std::size_t row, const std::vector<float>& query) const;

  std::size_t dim_;
  Metric metric_;
  bool frozen_ = false;
  std::vector<float> vectors_;  // count x dim, row-major
  std::vector<std::uint64_t> ids_;
  std::unordered_map<std::uint64_t, std::size_t> index_of_;
  std::unordered_map<std::uint64_t, TargetPayload> targets_;
};

}  // namespace ralstm
