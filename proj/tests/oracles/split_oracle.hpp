/**
 * Copyright 2026 The maliot Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

// Exhaustive CART reference: every feature, every midpoint between distinct
// sorted values, weighted Gini impurity compared exactly as integer
// fractions. Intended for datasets of at most a few dozen points.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace oracle {

struct Split {
  int feature = -1;
  double threshold = 0;
};

// Gini "purity" of a split, sum over children of (benign^2 + anomaly^2) / n,
// kept as a fraction num / den.
struct Purity {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

inline bool greater(const Purity& a, const Purity& b) { return a.num * b.den > b.num * a.den; }

inline Purity split_purity(std::int64_t lb, std::int64_t la, std::int64_t rb, std::int64_t ra) {
  const std::int64_t nl = lb + la, nr = rb + ra;
  return {(lb * lb + la * la) * nr + (rb * rb + ra * ra) * nl, nl * nr};
}

inline std::optional<Split> best_split(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                       const std::vector<std::size_t>& rows, int min_leaf = 1) {
  std::int64_t nb = 0, na = 0;
  for (auto r : rows) (y[r] ? na : nb) += 1;
  const std::int64_t n = nb + na;
  Purity best{nb * nb + na * na, n};  // the unsplit node
  std::optional<Split> choice;
  const int d = static_cast<int>(x.front().size());
  for (int f = 0; f < d; ++f) {
    std::set<double> values;
    for (auto r : rows) values.insert(x[r][static_cast<std::size_t>(f)]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = v[k] + (v[k + 1] - v[k]) / 2;
      std::int64_t lb = 0, la = 0, rb = 0, ra = 0;
      for (auto r : rows) {
        const bool left = x[r][static_cast<std::size_t>(f)] <= t;
        if (left) {
          (y[r] ? la : lb) += 1;
        } else {
          (y[r] ? ra : rb) += 1;
        }
      }
      if (lb + la < min_leaf || rb + ra < min_leaf) continue;
      const Purity p = split_purity(lb, la, rb, ra);
      if (greater(p, best)) {
        best = p;
        choice = Split{f, t};
      }
    }
  }
  return choice;
}

struct Node {
  std::optional<Split> split;
  double score = 0;
  int left = -1, right = -1;
};

inline int build(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                 const std::vector<std::size_t>& rows, int depth, int max_depth, std::vector<Node>& out) {
  const int id = static_cast<int>(out.size());
  out.emplace_back();
  std::size_t anomalies = 0;
  for (auto r : rows) anomalies += static_cast<std::size_t>(y[r]);
  out[static_cast<std::size_t>(id)].score = static_cast<double>(anomalies) / static_cast<double>(rows.size());
  if (depth >= max_depth || rows.size() < 2 || anomalies == 0 || anomalies == rows.size()) return id;
  const auto s = best_split(x, y, rows);
  if (!s) return id;
  std::vector<std::size_t> l, r;
  for (auto i : rows) (x[i][static_cast<std::size_t>(s->feature)] <= s->threshold ? l : r).push_back(i);
  out[static_cast<std::size_t>(id)].split = s;
  const int li = build(x, y, l, depth + 1, max_depth, out);
  const int ri = build(x, y, r, depth + 1, max_depth, out);
  out[static_cast<std::size_t>(id)].left = li;
  out[static_cast<std::size_t>(id)].right = ri;
  return id;
}

inline std::vector<Node> build_tree(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                    int max_depth = 16) {
  std::vector<std::size_t> rows(x.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<Node> nodes;
  build(x, y, rows, 0, max_depth, nodes);
  return nodes;
}

inline double tree_score(const std::vector<Node>& nodes, const std::vector<double>& x) {
  std::size_t i = 0;
  while (nodes[i].split) {
    const auto& s = *nodes[i].split;
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(s.feature)] <= s.threshold ? nodes[i].left : nodes[i].right);
  }
  return nodes[i].score;
}

}  // namespace oracle
