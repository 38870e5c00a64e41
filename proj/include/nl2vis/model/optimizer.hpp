#pragma once

#include <cmath>
#include <vector>

#include "nl2vis/model/config.hpp"
#include "nl2vis/model/parameters.hpp"

namespace nl2vis::model {

/// Adam with bias correction and optional global-norm clipping.
template <typename S>
class Adam {
 public:
  Adam(double learning_rate, AdamSettings settings) : lr_(learning_rate), s_(settings) {}

  void step(ParameterSet<S>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Mat<S>::Zero(p.value.rows(), p.value.cols()));
        v_.push_back(Mat<S>::Zero(p.value.rows(), p.value.cols()));
      }
    }
    ++t_;
    double clip = 1.0;
    if (s_.clip_norm > 0.0) {
      double sq = 0.0;
      for (const auto& p : params) sq += static_cast<double>(p.grad.squaredNorm());
      const double norm = std::sqrt(sq);
      if (norm > s_.clip_norm) clip = s_.clip_norm / norm;
    }
    const double bc1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
    const S b1 = static_cast<S>(s_.beta1), b2 = static_cast<S>(s_.beta2);
    const S step = static_cast<S>(lr_ / bc1);
    const S inv_bc2 = static_cast<S>(1.0 / bc2);
    const S eps = static_cast<S>(s_.eps);
    std::size_t i = 0;
    for (auto& p : params) {
      auto& m = m_[i];
      auto& v = v_[i];
      const auto g = (p.grad.array() * static_cast<S>(clip)).eval();
      m.array() = b1 * m.array() + (S(1) - b1) * g;
      v.array() = b2 * v.array() + (S(1) - b2) * g.square();
      p.value.array() -= step * m.array() / ((v.array() * inv_bc2).sqrt() + eps);
      ++i;
    }
  }

  long steps() const { return t_; }

 private:
  double lr_;
  AdamSettings s_;
  long t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

}  // namespace nl2vis::model
