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


#include <cmath>
#include <numeric>
#include <thread>

#include "maliot/classifiers.hpp"

namespace maliot {

ForestParams fit_forest(const FeatureMatrix& data, const TreeConfig& tree, const ForestConfig& forest,
                        std::uint64_t seed) {
  if (forest.n_trees < 1) throw ConfigError("random forest needs at least one tree");
  const auto n = static_cast<std::uint64_t>(data.rows());
  const int width = static_cast<int>(data.cols());
  int max_features = forest.max_features;
  if (max_features <= 0) {
    max_features = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(width)))));
  }
  max_features = std::min(max_features, width);

  ForestParams out;
  out.fail_closed = tree.fail_closed;
  out.trees.resize(static_cast<std::size_t>(forest.n_trees));

  const Rng master(seed);
  auto build = [&](int t) {
    // Each tree owns a substream keyed by its index, so the result does not
    // depend on how trees are spread over threads.
    Rng rng = master.split(static_cast<std::uint64_t>(t));
    std::vector<Eigen::Index> rows(n);
    if (forest.bootstrap) {
      for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    out.trees[static_cast<std::size_t>(t)] =
        fit_tree(data.values, data.labels, std::move(rows), tree, max_features, &rng);
  };

  const unsigned threads = std::max(1U, std::min<unsigned>(forest.threads, forest.n_trees));
  if (threads == 1) {
    for (int t = 0; t < forest.n_trees; ++t) build(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (int t = static_cast<int>(w); t < forest.n_trees; t += static_cast<int>(threads)) build(t);
      });
    }
  }
  return out;
}

}  // namespace maliot
