#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nl2vis/error.hpp"
#include "nl2vis/model/tensor.hpp"

namespace nl2vis::model {

template <typename S>
struct Parameter {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
};

struct Var {
  int id = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking
/// them backwards is a valid topological order. Parameter leaves write their
/// gradients straight into Parameter::grad, which lets several examples
/// accumulate into one batch gradient.
template <typename S>
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  Var constant(Mat<S> value) {
    nodes_.push_back(Node{std::move(value)});
    return {static_cast<int>(nodes_.size()) - 1};
  }

  Var param(Parameter<S>& p) {
    Node n;
    n.ref = &p.value;
    if (record_) {
      n.needs_grad = true;
      n.param_grad = &p.grad;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
        p.grad = Mat<S>::Zero(p.value.rows(), p.value.cols());
    }
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
  }

  /// Leaf viewing `m` without copying and without a gradient.
  Var ref(const Mat<S>& m) {
    Node n;
    n.ref = &m;
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
  }

  const Mat<S>& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
  }

  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient accumulator of `v`, zero-initialised on first use.
  Mat<S>& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.param_grad) return *n.param_grad;
    if (n.grad.size() == 0) {
      const auto& val = value(v);
      n.grad = Mat<S>::Zero(val.rows(), val.cols());
    }
    return n.grad;
  }

  /// Appends a computed node. `backward` runs only if some input needs a gradient.
  Var push(Mat<S> value, std::initializer_list<Var> inputs, std::function<void(Var)> backward) {
    Node n{std::move(value)};
    if (record_) {
      for (Var in : inputs) n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
      if (n.needs_grad) n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss) {
    if (!record_) throw Error("backward on a non-recording tape");
    if (value(loss).size() != 1) throw ShapeError("backward needs a scalar loss");
    grad(loss)(0, 0) += S(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward(Var{i});
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat<S> value;
    const Mat<S>* ref = nullptr;
    Mat<S>* param_grad = nullptr;
    Mat<S> grad;
    bool needs_grad = false;
    std::function<void(Var)> backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Ops. Each computes its value eagerly and registers the adjoint update.

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}
}  // namespace detail

}  // namespace nl2vis::model
