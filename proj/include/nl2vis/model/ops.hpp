#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "nl2vis/model/autograd.hpp"

namespace nl2vis::model {

using detail::require;

template <typename S>
Var add(Tape<S>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "add: shape mismatch");
  return t.push(A + B, {a, b}, [&t, a, b](Var o) {
    if (t.needs_grad(a)) t.grad(a) += t.grad(o);
    if (t.needs_grad(b)) t.grad(b) += t.grad(o);
  });
}

template <typename S>
Var matmul(Tape<S>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require(A.cols() == B.rows(), "matmul: inner dimension mismatch");
  Mat<S> out = A * B;
  return t.push(std::move(out), {a, b}, [&t, a, b](Var o) {
    const auto& G = t.grad(o);
    if (t.needs_grad(a)) t.grad(a).noalias() += G * t.value(b).transpose();
    if (t.needs_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * G;
  });
}

/// x·W + b with b a 1×out row broadcast over rows.
template <typename S>
Var linear(Tape<S>& t, Var x, Var w, Var b) {
  const auto& X = t.value(x);
  const auto& W = t.value(w);
  const auto& B = t.value(b);
  require(X.cols() == W.rows(), "linear: input width mismatch");
  require(B.rows() == 1 && B.cols() == W.cols(), "linear: bias shape mismatch");
  Mat<S> out = X * W;
  out.rowwise() += B.row(0);
  return t.push(std::move(out), {x, w, b}, [&t, x, w, b](Var o) {
    const auto& G = t.grad(o);
    if (t.needs_grad(x)) t.grad(x).noalias() += G * t.value(w).transpose();
    if (t.needs_grad(w)) t.grad(w).noalias() += t.value(x).transpose() * G;
    if (t.needs_grad(b)) t.grad(b) += G.colwise().sum();
  });
}

template <typename S>
Var scale(Tape<S>& t, Var a, S factor) {
  return t.push(t.value(a) * factor, {a}, [&t, a, factor](Var o) {
    t.grad(a) += t.grad(o) * factor;
  });
}

template <typename S>
Var relu(Tape<S>& t, Var a) {
  Mat<S> out = t.value(a).cwiseMax(S(0));
  return t.push(std::move(out), {a}, [&t, a](Var o) {
    t.grad(a) += (t.value(a).array() > S(0)).select(t.grad(o), S(0)).matrix();
  });
}

/// Inverted dropout. `rng == nullptr` or p == 0 is the identity.
template <typename S>
Var dropout(Tape<S>& t, Var a, double p, Rng* rng) {
  if (!rng || p <= 0.0) return a;
  const auto& A = t.value(a);
  auto keep = std::make_shared<Mat<S>>(A.rows(), A.cols());
  const S s = static_cast<S>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < keep->size(); ++i)
    keep->data()[i] = uniform01(*rng) < p ? S(0) : s;
  Mat<S> out = A.cwiseProduct(*keep);
  return t.push(std::move(out), {a}, [&t, a, keep](Var o) {
    t.grad(a) += t.grad(o).cwiseProduct(*keep);
  });
}

/// Per-row layer normalisation with learned gain and bias (both 1×d).
template <typename S>
Var layer_norm(Tape<S>& t, Var x, Var gain, Var bias, S eps = S(1e-5)) {
  const auto& X = t.value(x);
  const auto& G = t.value(gain);
  const auto& B = t.value(bias);
  require(G.cols() == X.cols() && B.cols() == X.cols(), "layer_norm: width mismatch");
  const Eigen::Index n = X.rows(), d = X.cols();
  auto xhat = std::make_shared<Mat<S>>(n, d);
  auto inv_std = std::make_shared<std::vector<S>>(static_cast<std::size_t>(n));
  Mat<S> out(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const S mean = X.row(r).mean();
    const S var = (X.row(r).array() - mean).square().mean();
    const S is = S(1) / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(r)] = is;
    xhat->row(r) = (X.row(r).array() - mean) * is;
    out.row(r) = xhat->row(r).cwiseProduct(G.row(0)) + B.row(0);
  }
  return t.push(std::move(out), {x, gain, bias}, [&t, x, gain, bias, xhat, inv_std](Var o) {
    const auto& Gout = t.grad(o);
    if (t.needs_grad(gain)) t.grad(gain) += Gout.cwiseProduct(*xhat).colwise().sum();
    if (t.needs_grad(bias)) t.grad(bias) += Gout.colwise().sum();
    if (!t.needs_grad(x)) return;
    const auto& g = t.value(gain);
    auto& gx = t.grad(x);
    const S d = static_cast<S>(xhat->cols());
    for (Eigen::Index r = 0; r < xhat->rows(); ++r) {
      const RowVec<S> dxhat = Gout.row(r).cwiseProduct(g.row(0));
      const S m1 = dxhat.mean();
      const S m2 = dxhat.cwiseProduct(xhat->row(r)).sum() / d;
      gx.row(r) += ((dxhat.array() - m1 - xhat->row(r).array() * m2) *
                    (*inv_std)[static_cast<std::size_t>(r)])
                       .matrix();
    }
  });
}

/// Rows `ids` of `table`; the backward pass scatter-adds.
template <typename S>
Var gather_rows(Tape<S>& t, Var table, std::vector<int> ids) {
  const auto& T = t.value(table);
  Mat<S> out(static_cast<Eigen::Index>(ids.size()), T.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < T.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
  }
  return t.push(std::move(out), {table}, [&t, table, ids = std::move(ids)](Var o) {
    const auto& G = t.grad(o);
    auto& gt = t.grad(table);
    for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += G.row(static_cast<Eigen::Index>(i));
  });
}

template <typename S>
Var concat_cols(Tape<S>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require(A.rows() == B.rows(), "concat_cols: row mismatch");
  Mat<S> out(A.rows(), A.cols() + B.cols());
  out << A, B;
  const Eigen::Index ca = A.cols(), cb = B.cols();
  return t.push(std::move(out), {a, b}, [&t, a, b, ca, cb](Var o) {
    const auto& G = t.grad(o);
    if (t.needs_grad(a)) t.grad(a) += G.leftCols(ca);
    if (t.needs_grad(b)) t.grad(b) += G.rightCols(cb);
  });
}

/// Unfolds a [L×c] sequence into [L × width·c] windows centred on each row,
/// zero-padded so the output keeps L rows. Window slot j of row i reads
/// input row i + j - (width-1)/2.
template <typename S>
Var im2col(Tape<S>& t, Var x, int width) {
  require(width >= 1, "im2col: width must be positive");
  const auto& X = t.value(x);
  const Eigen::Index L = X.rows(), c = X.cols();
  const int left = (width - 1) / 2;
  Mat<S> out = Mat<S>::Zero(L, width * c);
  for (Eigen::Index i = 0; i < L; ++i)
    for (int j = 0; j < width; ++j) {
      const Eigen::Index src = i + j - left;
      if (src >= 0 && src < L) out.block(i, j * c, 1, c) = X.row(src);
    }
  return t.push(std::move(out), {x}, [&t, x, width, left, L, c](Var o) {
    const auto& G = t.grad(o);
    auto& gx = t.grad(x);
    for (Eigen::Index i = 0; i < L; ++i)
      for (int j = 0; j < width; ++j) {
        const Eigen::Index src = i + j - left;
        if (src >= 0 && src < L) gx.row(src) += G.block(i, j * c, 1, c);
      }
  });
}

/// Causal allow-mask: row r may see columns 0..r.
inline Mask causal_mask(Eigen::Index n) {
  Mask m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = c <= r;
  return m;
}

/// Scaled dot-product attention over `heads` equal column slices of q/k/v,
/// heads concatenated back in order. `mask` (Lq×Lk, nonzero = allowed) may
/// be null.
template <typename S>
Var attention(Tape<S>& t, Var q, Var k, Var v, int heads, std::shared_ptr<const Mask> mask) {
  const auto& Q = t.value(q);
  const auto& K = t.value(k);
  const auto& V = t.value(v);
  require(Q.cols() == K.cols() && K.cols() == V.cols(), "attention: width mismatch");
  require(K.rows() == V.rows(), "attention: key/value length mismatch");
  require(heads >= 1 && Q.cols() % heads == 0, "attention: width not divisible by heads");
  if (mask) require(mask->rows() == Q.rows() && mask->cols() == K.rows(), "attention: mask shape");
  const Eigen::Index dh = Q.cols() / heads;
  const S sc = S(1) / std::sqrt(static_cast<S>(dh));

  auto probs = std::make_shared<std::vector<Mat<S>>>();
  probs->reserve(static_cast<std::size_t>(heads));
  Mat<S> out(Q.rows(), Q.cols());
  for (int h = 0; h < heads; ++h) {
    Mat<S> scores = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose();
    scores *= sc;
    probs->push_back(softmax_rows(scores, mask.get()));
    out.middleCols(h * dh, dh).noalias() = probs->back() * V.middleCols(h * dh, dh);
  }
  return t.push(std::move(out), {q, k, v}, [&t, q, k, v, heads, dh, sc, probs](Var o) {
    const auto& G = t.grad(o);
    const auto& Q = t.value(q);
    const auto& K = t.value(k);
    const auto& V = t.value(v);
    for (int h = 0; h < heads; ++h) {
      const Mat<S>& P = (*probs)[static_cast<std::size_t>(h)];
      const auto Gh = G.middleCols(h * dh, dh);
      if (t.needs_grad(v)) t.grad(v).middleCols(h * dh, dh).noalias() += P.transpose() * Gh;
      if (!t.needs_grad(q) && !t.needs_grad(k)) continue;
      Mat<S> dP = Gh * V.middleCols(h * dh, dh).transpose();
      Mat<S> dS = P.cwiseProduct(dP);
      const Eigen::Matrix<S, Eigen::Dynamic, 1> row_dot = dS.rowwise().sum();
      dS -= P.cwiseProduct(row_dot.replicate(1, P.cols()));
      dS *= sc;
      if (t.needs_grad(q)) t.grad(q).middleCols(h * dh, dh).noalias() += dS * K.middleCols(h * dh, dh);
      if (t.needs_grad(k))
        t.grad(k).middleCols(h * dh, dh).noalias() += dS.transpose() * Q.middleCols(h * dh, dh);
    }
  });
}

/// Summed token cross-entropy of logits rows against `targets`, times
/// `factor`. Targets equal to `ignore` contribute nothing. Result is 1×1.
template <typename S>
Var cross_entropy(Tape<S>& t, Var logits, std::vector<int> targets, S factor, int ignore = -1) {
  const auto& Z = t.value(logits);
  require(static_cast<std::size_t>(Z.rows()) == targets.size(), "cross_entropy: length mismatch");
  auto probs = std::make_shared<Mat<S>>(softmax_rows(Z));
  S total = 0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] == ignore) continue;
    require(targets[r] >= 0 && targets[r] < Z.cols(), "cross_entropy: target out of range");
    const Eigen::Index row = static_cast<Eigen::Index>(r);
    const S mx = Z.row(row).maxCoeff();
    const S lse = mx + std::log((Z.row(row).array() - mx).exp().sum());
    total += lse - Z(row, targets[r]);
  }
  Mat<S> out(1, 1);
  out(0, 0) = total * factor;
  return t.push(std::move(out), {logits},
                [&t, logits, targets = std::move(targets), probs, factor, ignore](Var o) {
                  const S g = t.grad(o)(0, 0) * factor;
                  auto& gz = t.grad(logits);
                  for (std::size_t r = 0; r < targets.size(); ++r) {
                    if (targets[r] == ignore) continue;
                    const Eigen::Index row = static_cast<Eigen::Index>(r);
                    gz.row(row) += probs->row(row) * g;
                    gz(row, targets[r]) -= g;
                  }
                });
}

}  // namespace nl2vis::model
