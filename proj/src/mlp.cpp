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

#include "maliot/classifiers.hpp"
#include "optim.hpp"

namespace maliot {
namespace {

// Numerically stable log(1 + exp(z)).
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Forward {
  Eigen::MatrixXd z1;  // batch x hidden pre-activations
  Eigen::MatrixXd h;   // after ReLU and dropout
  Eigen::VectorXd z2;
};

Forward forward(const MlpParams& p, const RowMatrix& x, const Eigen::MatrixXd* dropout_mask) {
  Forward f;
  f.z1 = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
  f.h = f.z1.cwiseMax(0.0);
  if (dropout_mask) f.h.array() *= dropout_mask->array();
  f.z2 = (f.h * p.w2).array() + p.b2;
  return f;
}

MlpGradient backward(const MlpParams& p, const RowMatrix& x, const Eigen::VectorXd& y,
                     const Forward& f, const Eigen::MatrixXd* dropout_mask, double clf_reg) {
  const auto b = static_cast<double>(x.rows());
  Eigen::VectorXd dz2(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) dz2[i] = (detail::sigmoid(f.z2[i]) - y[i]) / b;

  MlpGradient g;
  g.w2 = f.h.transpose() * dz2 + 2.0 * clf_reg * p.w2;
  g.b2 = dz2.sum();
  Eigen::MatrixXd dz1 = dz2 * p.w2.transpose();
  if (dropout_mask) dz1.array() *= dropout_mask->array();
  dz1.array() *= (f.z1.array() > 0.0).cast<double>();
  g.w1 = dz1.transpose() * x + 2.0 * clf_reg * p.w1;
  g.b1 = dz1.colwise().sum().transpose();
  return g;
}

}  // namespace

void MlpConfig::validate() const {
  if (!(learning_rate > 0) || !(decay_rate > 0) || dense_units < 1 || n_batch < 1 || n_epoch < 1 ||
      !(clf_reg > 0)) {
    throw ConfigError("ANN hyper-parameters must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("ANN dropout rate must lie in [0, 1)");
  }
}

MlpParams init_mlp(Eigen::Index input_width, const MlpConfig& config, std::uint64_t seed) {
  const Eigen::Index hidden = config.dense_units;
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, input_width);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::VectorXd::Zero(hidden);
  p.b2 = 0.0;
  if (config.zero_init) return p;
  // Glorot-uniform weights, zero biases.
  Rng rng(seed);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(input_width + hidden));
  for (Eigen::Index r = 0; r < hidden; ++r) {
    for (Eigen::Index c = 0; c < input_width; ++c) p.w1(r, c) = rng.uniform(-lim1, lim1);
  }
  const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (Eigen::Index r = 0; r < hidden; ++r) p.w2[r] = rng.uniform(-lim2, lim2);
  return p;
}

double mlp_forward(const MlpParams& p, const double* x, Eigen::Index width) noexcept {
  const auto xv = Eigen::Map<const Eigen::VectorXd>(x, width);
  const Eigen::VectorXd h = (p.w1 * xv + p.b1).cwiseMax(0.0);
  return detail::sigmoid(h.dot(p.w2) + p.b2);
}

double mlp_loss(const MlpParams& p, const RowMatrix& x, const Eigen::VectorXd& y, double clf_reg) {
  const Forward f = forward(p, x, nullptr);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) loss += softplus(f.z2[i]) - y[i] * f.z2[i];
  loss /= static_cast<double>(x.rows());
  return loss + clf_reg * (p.w1.squaredNorm() + p.w2.squaredNorm());
}

MlpGradient mlp_gradient(const MlpParams& p, const RowMatrix& x, const Eigen::VectorXd& y,
                         double clf_reg) {
  return backward(p, x, y, forward(p, x, nullptr), nullptr, clf_reg);
}

MlpParams fit_mlp(const FeatureMatrix& data, const MlpConfig& config, std::uint64_t seed) {
  config.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const Rng master(seed);
  MlpParams p = init_mlp(d, config, seed);

  detail::Adam adam(config.learning_rate, config.decay_rate);
  detail::Adam::Slot s_w1, s_b1, s_w2, s_b2;
  Rng order_rng = master.split(1);
  Rng dropout_rng = master.split(2);
  const double keep = 1.0 - config.dropout_rate;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  RowMatrix xb;
  Eigen::VectorXd yb;
  Eigen::MatrixXd mask;
  for (int epoch = 0; epoch < config.n_epoch; ++epoch) {
    shuffle(order.begin(), order.end(), order_rng);
    for (Eigen::Index start = 0; start < n; start += config.n_batch) {
      const Eigen::Index b = std::min<Eigen::Index>(config.n_batch, n - start);
      xb.resize(b, d);
      yb.resize(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto r = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = data.values.row(r);
        yb[i] = data.labels[static_cast<std::size_t>(r)];
      }
      const Eigen::MatrixXd* mask_ptr = nullptr;
      if (config.dropout_rate > 0.0) {
        // Inverted dropout: survivors are scaled by 1/keep during training so
        // inference needs no rescaling.
        mask.resize(b, config.dense_units);
        for (Eigen::Index i = 0; i < mask.size(); ++i) {
          mask.data()[i] = dropout_rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        mask_ptr = &mask;
      }
      const Forward f = forward(p, xb, mask_ptr);
      const MlpGradient g = backward(p, xb, yb, f, mask_ptr, config.clf_reg);
      adam.step();
      adam.apply(p.w1, g.w1, s_w1);
      adam.apply(p.b1, g.b1, s_b1);
      adam.apply(p.w2, g.w2, s_w2);
      adam.apply(p.b2, g.b2, s_b2);
    }
  }
  return p;
}

}  // namespace maliot
