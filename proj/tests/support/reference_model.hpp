#pragma once

// Loop-based re-implementation of the forward pass, used as an oracle for
// the tape-based model. Shares nothing with the model code except the
// parameter tensors it reads by name.

#include <cmath>
#include <string>
#include <vector>

#include "nl2vis/model/seq2seq.hpp"

namespace nl2vis::testing {

using Grid = std::vector<std::vector<double>>;

template <typename S>
Grid to_grid(const model::Mat<S>& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = static_cast<double>(m(r, c));
  return g;
}

inline Grid ref_linear(const Grid& x, const Grid& w, const Grid& b) {
  Grid y(x.size(), std::vector<double>(w[0].size(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < w[0].size(); ++j) {
      double s = b[0][j];
      for (std::size_t k = 0; k < w.size(); ++k) s += x[i][k] * w[k][j];
      y[i][j] = s;
    }
  return y;
}

inline Grid ref_add(Grid a, const Grid& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

inline Grid ref_layer_norm(const Grid& x, const Grid& g, const Grid& b) {
  Grid y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double mean = 0, var = 0;
    for (double v : x[i]) mean += v;
    mean /= static_cast<double>(x[i].size());
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x[i].size());
    for (std::size_t j = 0; j < x[i].size(); ++j)
      y[i][j] = (x[i][j] - mean) / std::sqrt(var + 1e-5) * g[0][j] + b[0][j];
  }
  return y;
}

/// Dense attention over `heads` column slices; allowed(r, c) decides visibility.
template <typename Allowed>
Grid ref_attention(const Grid& q, const Grid& k, const Grid& v, int heads, Allowed allowed) {
  const std::size_t d = q[0].size(), dh = d / static_cast<std::size_t>(heads);
  Grid out(q.size(), std::vector<double>(d, 0.0));
  for (int h = 0; h < heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    for (std::size_t r = 0; r < q.size(); ++r) {
      std::vector<double> w(k.size(), 0.0);
      double mx = -INFINITY;
      bool any = false;
      for (std::size_t c = 0; c < k.size(); ++c) {
        if (!allowed(r, c)) continue;
        double s = 0;
        for (std::size_t e = 0; e < dh; ++e) s += q[r][off + e] * k[c][off + e];
        w[c] = s / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, w[c]);
        any = true;
      }
      if (!any) continue;
      double z = 0;
      for (std::size_t c = 0; c < k.size(); ++c) {
        w[c] = allowed(r, c) ? std::exp(w[c] - mx) : 0.0;
        z += w[c];
      }
      for (std::size_t c = 0; c < k.size(); ++c)
        for (std::size_t e = 0; e < dh; ++e) out[r][off + e] += w[c] / z * v[c][off + e];
    }
  }
  return out;
}

template <typename S>
class ReferenceModel {
 public:
  explicit ReferenceModel(const model::Seq2Seq<S>& m) : m_(m) {}

  Grid p(const std::string& name) const { return to_grid(m_.params().at(name).value); }

  template <typename Allowed>
  Grid mha(const std::string& pre, const Grid& x, const Grid& kv, Allowed allowed) const {
    const Grid q = ref_linear(x, p(pre + ".wq"), p(pre + ".bq"));
    const Grid k = ref_linear(kv, p(pre + ".wk"), p(pre + ".bk"));
    const Grid v = ref_linear(kv, p(pre + ".wv"), p(pre + ".bv"));
    return ref_linear(ref_attention(q, k, v, m_.config().n_heads, allowed), p(pre + ".wo"),
                      p(pre + ".bo"));
  }

  Grid ff(const std::string& pre, const Grid& x) const {
    Grid h = ref_linear(x, p(pre + ".w1"), p(pre + ".b1"));
    for (auto& row : h)
      for (auto& v : row) v = std::max(0.0, v);
    return ref_linear(h, p(pre + ".w2"), p(pre + ".b2"));
  }

  Grid embed(const std::string& side, const std::vector<int>& ids, const std::vector<int>* segs) const {
    const Grid tok = p(side + ".tok"), pos = p(side + ".pos");
    Grid x(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      x[i] = tok[static_cast<std::size_t>(ids[i])];
      for (std::size_t j = 0; j < x[i].size(); ++j) x[i][j] += pos[i][j];
    }
    if (segs) {
      const Grid seg = p(side + ".seg");
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < x[i].size(); ++j) x[i][j] += seg[static_cast<std::size_t>((*segs)[i])][j];
    }
    return x;
  }

  Grid encode_native(const std::vector<int>& ids, const std::vector<int>& segs) const {
    Grid x = embed("enc", ids, &segs);
    for (int l = 0; l < m_.config().n_layers; ++l) {
      const std::string pre = "enc.l" + std::to_string(l);
      x = ref_layer_norm(ref_add(x, mha(pre + ".self", x, x, [](auto, auto) { return true; })),
                         p(pre + ".ln1.g"), p(pre + ".ln1.b"));
      x = ref_layer_norm(ref_add(x, ff(pre + ".ff", x)), p(pre + ".ln2.g"), p(pre + ".ln2.b"));
    }
    return x;
  }

  Grid decode(const Grid& memory, const std::vector<int>& prefix) const {
    Grid y = embed("dec", prefix, nullptr);
    for (int l = 0; l < m_.config().n_layers; ++l) {
      const std::string pre = "dec.l" + std::to_string(l);
      y = ref_layer_norm(
          ref_add(y, mha(pre + ".self", y, y, [](std::size_t r, std::size_t c) { return c <= r; })),
          p(pre + ".ln1.g"), p(pre + ".ln1.b"));
      y = ref_layer_norm(ref_add(y, mha(pre + ".cross", y, memory, [](auto, auto) { return true; })),
                         p(pre + ".ln2.g"), p(pre + ".ln2.b"));
      y = ref_layer_norm(ref_add(y, ff(pre + ".ff", y)), p(pre + ".ln3.g"), p(pre + ".ln3.b"));
    }
    return ref_linear(y, p("out.w"), p("out.b"));
  }

 private:
  const model::Seq2Seq<S>& m_;
};

inline double max_abs_diff(const Grid& a, const Grid& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

}  // namespace nl2vis::testing
