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


#include <numeric>

#include "maliot/classifiers.hpp"
#include "optim.hpp"

namespace maliot {

LinearParams fit_linear(const FeatureMatrix& data, LinearLoss loss, const LinearConfig& config,
                        std::uint64_t seed) {
  if (config.batch_size < 1 || config.epochs < 1 || config.learning_rate <= 0) {
    throw ConfigError("linear model needs positive batch_size, epochs and learning_rate");
  }
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  LinearParams p;
  p.weights = Eigen::VectorXd::Zero(d);
  p.bias = 0.0;

  detail::Adam adam(config.learning_rate, config.decay_rate);
  detail::Adam::Slot w_slot;
  detail::Adam::Slot b_slot;
  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  RowMatrix xb;
  Eigen::VectorXd yb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, n - start);
      xb.resize(b, d);
      yb.resize(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto r = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = data.values.row(r);
        yb[i] = data.labels[static_cast<std::size_t>(r)];
      }
      const Eigen::VectorXd z = (xb * p.weights).array() + p.bias;
      Eigen::VectorXd dz(b);
      if (loss == LinearLoss::logistic) {
        for (Eigen::Index i = 0; i < b; ++i) dz[i] = detail::sigmoid(z[i]) - yb[i];
      } else {
        for (Eigen::Index i = 0; i < b; ++i) {
          const double y = 2.0 * yb[i] - 1.0;
          dz[i] = y * z[i] < 1.0 ? -y : 0.0;
        }
      }
      dz /= static_cast<double>(b);
      const Eigen::VectorXd gw = xb.transpose() * dz + 2.0 * config.l2 * p.weights;
      adam.step();
      adam.apply(p.weights, gw, w_slot);
      adam.apply(p.bias, dz.sum(), b_slot);
    }
  }
  return p;
}

}  // namespace maliot
