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


#include <algorithm>
#include <numeric>

#include "maliot/classifiers.hpp"

namespace maliot {
namespace {

// Purity sum (a^2 + b^2) / n as an exact fraction so that equal-quality
// splits compare equal and the tie-break rule is deterministic.
struct Purity {
  unsigned __int128 num = 0;
  unsigned __int128 den = 1;

  static Purity node(std::uint64_t a, std::uint64_t b) {
    return {static_cast<unsigned __int128>(a) * a + static_cast<unsigned __int128>(b) * b, a + b};
  }
  static Purity split(std::uint64_t la, std::uint64_t lb, std::uint64_t ra, std::uint64_t rb) {
    const unsigned __int128 sl = static_cast<unsigned __int128>(la) * la +
                                 static_cast<unsigned __int128>(lb) * lb;
    const unsigned __int128 sr = static_cast<unsigned __int128>(ra) * ra +
                                 static_cast<unsigned __int128>(rb) * rb;
    const std::uint64_t nl = la + lb;
    const std::uint64_t nr = ra + rb;
    return {sl * nr + sr * nl, static_cast<unsigned __int128>(nl) * nr};
  }
  bool operator>(const Purity& o) const { return num * o.den > o.num * den; }
  bool operator==(const Purity& o) const { return num * o.den == o.num * den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  Purity purity;
};

bool better(const Candidate& c, const Candidate& best) {
  if (best.feature < 0) return true;
  if (c.purity > best.purity) return true;
  if (!(c.purity == best.purity)) return false;
  if (c.feature != best.feature) return c.feature < best.feature;
  return c.threshold < best.threshold;
}

struct Scratch {
  std::vector<std::pair<double, int>> column;
};

// Sweeps one feature; returns false when the feature is constant over `rows`.
bool sweep_feature(const RowMatrix& x, std::span<const int> labels, std::span<const Eigen::Index> rows,
                   int feature, int min_leaf, std::uint64_t total_a, Candidate& best,
                   Scratch& scratch) {
  auto& col = scratch.column;
  col.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    col[i] = {x(rows[i], feature), labels[static_cast<std::size_t>(rows[i])]};
  }
  std::sort(col.begin(), col.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  if (col.front().first == col.back().first) return false;

  const std::uint64_t n = rows.size();
  const std::uint64_t total_b = n - total_a;
  std::uint64_t la = 0;
  std::uint64_t lb = 0;
  for (std::size_t i = 0; i + 1 < col.size(); ++i) {
    if (col[i].second == 1) {
      ++la;
    } else {
      ++lb;
    }
    const double lo = col[i].first;
    const double hi = col[i + 1].first;
    if (!(lo < hi)) continue;
    const std::uint64_t nl = i + 1;
    if (nl < static_cast<std::uint64_t>(min_leaf) || n - nl < static_cast<std::uint64_t>(min_leaf)) {
      continue;
    }
    Candidate c;
    c.feature = feature;
    c.threshold = lo + (hi - lo) / 2.0;
    if (!(c.threshold < hi)) c.threshold = lo;
    c.purity = Purity::split(la, lb, total_a - la, total_b - lb);
    if (better(c, best)) best = c;
  }
  return true;
}

std::uint64_t count_anomalies(std::span<const int> labels, std::span<const Eigen::Index> rows) {
  std::uint64_t a = 0;
  for (auto r : rows) a += labels[static_cast<std::size_t>(r)] == 1 ? 1 : 0;
  return a;
}

std::optional<SplitChoice> finish(const Candidate& best, std::uint64_t a, std::uint64_t n) {
  if (best.feature < 0) return std::nullopt;
  // Only splits that strictly reduce impurity are taken.
  if (!(best.purity > Purity::node(a, n - a))) return std::nullopt;
  return SplitChoice{best.feature, best.threshold, best.purity.value()};
}

}  // namespace

std::optional<SplitChoice> best_gini_split(const RowMatrix& x, std::span<const int> labels,
                                           std::span<const Eigen::Index> rows,
                                           std::span<const int> features, int min_samples_leaf) {
  if (rows.size() < 2) return std::nullopt;
  const std::uint64_t a = count_anomalies(labels, rows);
  Candidate best;
  Scratch scratch;
  for (int f : features) sweep_feature(x, labels, rows, f, min_samples_leaf, a, best, scratch);
  return finish(best, a, rows.size());
}

double DecisionTreeParams::score(const double* x) const noexcept {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].score;
}

int DecisionTreeParams::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

DecisionTreeParams fit_tree(const RowMatrix& x, std::span<const int> labels,
                            std::vector<Eigen::Index> rows, const TreeConfig& config,
                            int max_features, Rng* feature_rng) {
  const int width = static_cast<int>(x.cols());
  const bool subsample = feature_rng != nullptr && max_features > 0 && max_features < width;
  std::vector<int> all_features(static_cast<std::size_t>(width));
  std::iota(all_features.begin(), all_features.end(), 0);

  DecisionTreeParams tree;
  tree.fail_closed = config.fail_closed;

  struct Pending {
    std::vector<Eigen::Index> rows;
    int depth;
    int parent;
    bool is_left;
  };
  std::vector<Pending> stack;
  stack.push_back({std::move(rows), 0, -1, false});
  Scratch scratch;
  std::vector<int> order = all_features;

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();

    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (job.parent >= 0) {
      auto& p = tree.nodes[static_cast<std::size_t>(job.parent)];
      (job.is_left ? p.left : p.right) = index;
    }
    const std::uint64_t n = job.rows.size();
    const std::uint64_t a = count_anomalies(labels, job.rows);
    tree.nodes[static_cast<std::size_t>(index)].score =
        n == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(n);

    const bool pure = a == 0 || a == n;
    if (pure || job.depth >= config.max_depth ||
        n < static_cast<std::uint64_t>(std::max(2, config.min_samples_split)) ||
        n < 2 * static_cast<std::uint64_t>(std::max(1, config.min_samples_leaf))) {
      continue;
    }

    Candidate best;
    if (subsample) {
      // Draw features in random order until max_features non-constant ones
      // have been examined.
      shuffle(order.begin(), order.end(), *feature_rng);
      int informative = 0;
      for (int f : order) {
        if (sweep_feature(x, labels, job.rows, f, config.min_samples_leaf, a, best, scratch)) {
          if (++informative >= max_features) break;
        }
      }
    } else {
      for (int f : all_features) {
        sweep_feature(x, labels, job.rows, f, config.min_samples_leaf, a, best, scratch);
      }
    }
    const auto split = finish(best, a, n);
    if (!split) continue;

    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    left.reserve(job.rows.size());
    right.reserve(job.rows.size());
    for (auto r : job.rows) {
      (x(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    job.rows.clear();
    job.rows.shrink_to_fit();
    // Right is pushed first so the left subtree is laid out first.
    stack.push_back({std::move(right), job.depth + 1, index, false});
    stack.push_back({std::move(left), job.depth + 1, index, true});
  }
  return tree;
}

}  // namespace maliot
