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

// Independent reference implementations used to freeze expected values.
// Deliberately naive: full scans, stable sorts, plain summation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ralstm::testing {

struct OracleHit {
  std::uint64_t id;
  double distance;
};

/// Full-scan nearest neighbors: score every row, stable-sort by
/// (distance, id), take k.
inline std::vector<OracleHit> brute_force_search(
    const std::vector<std::pair<std::uint64_t, std::vector<float>>>& rows,
    const std::vector<float>& query, std::size_t k, bool inner_product = false,
    const std::unordered_set<std::uint64_t>& exclude = {}) {
  std::vector<OracleHit> all;
  for (const auto& [id, vec] : rows) {
    if (exclude.count(id)) continue;
    double acc = 0.0;
    if (inner_product) {
      for (std::size_t j = 0; j < vec.size(); ++j) {
        acc += static_cast<double>(vec[j]) * static_cast<double>(query[j]);
      }
      acc = -acc;
    } else {
      for (std::size_t j = 0; j < vec.size(); ++j) {
        const double d = static_cast<double>(vec[j]) - static_cast<double>(query[j]);
        acc += d * d;
      }
    }
    all.push_back({id, acc});
  }
  std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Plain left-to-right mean of vectors.
inline std::vector<double> naive_mean(const std::vector<std::vector<double>>& vecs) {
  std::vector<double> out(vecs.front().size(), 0.0);
  for (const auto& v : vecs) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  for (double& x : out) x /= static_cast<double>(vecs.size());
  return out;
}

/// Norm-weighted mean: sum ||v|| v / sum ||v||.
inline std::vector<double> naive_norm_weighted_mean(const std::vector<std::vector<double>>& vecs) {
  std::vector<double> out(vecs.front().size(), 0.0);
  double total = 0.0;
  for (const auto& v : vecs) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    total += norm;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += norm * v[i];
  }
  for (double& x : out) x /= total;
  return out;
}

}  // namespace ralstm::testing
