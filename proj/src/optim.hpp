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

#include <Eigen/Dense>
#include <cmath>

namespace maliot::detail {

// Adam with time-based learning-rate decay lr / (1 + decay * t), where t is
// the number of updates already applied.
class Adam {
 public:
  struct Slot {
    Eigen::ArrayXd m;
    Eigen::ArrayXd v;
  };

  Adam(double learning_rate, double decay) : lr_(learning_rate), decay_(decay) {}

  void step() {
    const double lr = lr_ / (1.0 + decay_ * static_cast<double>(t_));
    ++t_;
    scaled_lr_ = lr * std::sqrt(1.0 - std::pow(kBeta2, static_cast<double>(t_))) /
                 (1.0 - std::pow(kBeta1, static_cast<double>(t_)));
  }

  template <class Param, class Grad>
  void apply(Param& param, const Grad& grad, Slot& slot) const {
    auto p = Eigen::Map<Eigen::ArrayXd>(param.data(), param.size());
    auto g = Eigen::Map<const Eigen::ArrayXd>(grad.data(), grad.size());
    if (slot.m.size() != p.size()) {
      slot.m = Eigen::ArrayXd::Zero(p.size());
      slot.v = Eigen::ArrayXd::Zero(p.size());
    }
    slot.m = kBeta1 * slot.m + (1.0 - kBeta1) * g;
    slot.v = kBeta2 * slot.v + (1.0 - kBeta2) * g.square();
    p -= scaled_lr_ * slot.m / (slot.v.sqrt() + kEpsilon);
  }

  void apply(double& param, double grad, Slot& slot) const {
    Eigen::Matrix<double, 1, 1> p(param);
    Eigen::Matrix<double, 1, 1> g(grad);
    apply(p, g, slot);
    param = p(0);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-7;

  double lr_;
  double decay_;
  long t_ = 0;
  double scaled_lr_ = 0.0;
};

inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace maliot::detail
