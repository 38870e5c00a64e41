#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace nl2vis::model {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic, Eigen::RowMajor>;

/// Allow/forbid mask for attention scores; nonzero = allowed.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937;

// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(Rng& rng) { return (static_cast<double>(rng()) + 0.5) / 4294967296.0; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

template <typename S>
void fill_uniform(Mat<S>& m, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<S>(uniform(rng, -bound, bound));
}

/// Row-wise softmax. Forbidden entries get zero weight; a row with nothing
/// allowed becomes all zeros.
template <typename S>
Mat<S> softmax_rows(const Mat<S>& scores, const Mask* allow = nullptr) {
  Mat<S> p(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    S mx = -std::numeric_limits<S>::infinity();
    for (Eigen::Index c = 0; c < scores.cols(); ++c)
      if (!allow || (*allow)(r, c)) mx = std::max(mx, scores(r, c));
    if (mx == -std::numeric_limits<S>::infinity()) {
      p.row(r).setZero();
      continue;
    }
    S sum = 0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      const S e = (!allow || (*allow)(r, c)) ? std::exp(scores(r, c) - mx) : S(0);
      p(r, c) = e;
      sum += e;
    }
    p.row(r) /= sum;
  }
  return p;
}

template <typename S>
bool all_finite(const Mat<S>& m) {
  return m.allFinite();
}

}  // namespace nl2vis::model
