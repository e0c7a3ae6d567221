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
#include <limits>
#include <numbers>

#include "maliot/classifiers.hpp"
#include "optim.hpp"

namespace maliot {

GaussianNbParams fit_gaussian_nb(const FeatureMatrix& data, const NbConfig& config) {
  const Eigen::Index d = data.cols();
  GaussianNbParams p;
  p.means = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, d);
  p.variances = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, d);
  double count[2] = {0, 0};
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int c = data.labels[static_cast<std::size_t>(i)];
    p.means.row(c) += data.values.row(i);
    count[c] += 1;
  }
  for (int c = 0; c < 2; ++c) {
    if (count[c] > 0) p.means.row(c) /= count[c];
  }
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int c = data.labels[static_cast<std::size_t>(i)];
    p.variances.row(c) += (data.values.row(i) - p.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < 2; ++c) {
    if (count[c] > 0) p.variances.row(c) /= count[c];
    p.variances.row(c) = p.variances.row(c).cwiseMax(config.var_floor);
    p.class_counts[c] = count[c];
  }
  p.refresh_derived();
  return p;
}

void GaussianNbParams::refresh_derived() {
  const double total = class_counts.sum();
  for (int c = 0; c < 2; ++c) {
    log_priors[c] = class_counts[c] > 0 ? std::log(class_counts[c] / total)
                                        : -std::numeric_limits<double>::infinity();
    log_norm[c] = (2.0 * std::numbers::pi * variances.row(c).array()).log().sum();
  }
}

double gaussian_nb_score(const GaussianNbParams& p, const double* x) noexcept {
  const Eigen::Index d = p.means.cols();
  const auto row = Eigen::Map<const Eigen::RowVectorXd>(x, d);
  double ll[2];
  for (int c = 0; c < 2; ++c) {
    if (std::isinf(p.log_priors[c])) {
      ll[c] = p.log_priors[c];
      continue;
    }
    const auto var = p.variances.row(c).array();
    ll[c] = p.log_priors[c] -
            0.5 * (p.log_norm[c] + ((row.array() - p.means.row(c).array()).square() / var).sum());
  }
  if (std::isinf(ll[1]) && ll[1] < 0) return 0.0;
  if (std::isinf(ll[0]) && ll[0] < 0) return 1.0;
  return detail::sigmoid(ll[1] - ll[0]);
}

}  // namespace maliot
