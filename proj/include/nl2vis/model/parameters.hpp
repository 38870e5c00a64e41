#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "nl2vis/error.hpp"
#include "nl2vis/model/autograd.hpp"

namespace nl2vis::model {

enum class Init { zeros, ones, embedding, xavier };

/// Named dense tensors in creation order. The order is part of the
/// checkpoint format and of the initialisation stream.
template <typename S>
class ParameterSet {
 public:
  int add(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init) {
    if (index_.contains(name)) throw Error("duplicate parameter '" + name + "'");
    index_.emplace(name, static_cast<int>(params_.size()));
    params_.push_back({name, Mat<S>::Zero(rows, cols), Mat<S>()});
    inits_.push_back(init);
    return static_cast<int>(params_.size()) - 1;
  }

  void initialize(Rng& rng) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& v = params_[i].value;
      switch (inits_[i]) {
        case Init::zeros: v.setZero(); break;
        case Init::ones: v.setOnes(); break;
        case Init::embedding: fill_uniform(v, rng, std::sqrt(3.0 / static_cast<double>(v.cols()))); break;
        case Init::xavier:
          fill_uniform(v, rng, std::sqrt(6.0 / static_cast<double>(v.rows() + v.cols())));
          break;
      }
    }
  }

  Parameter<S>& operator[](int i) { return params_[static_cast<std::size_t>(i)]; }
  const Parameter<S>& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }

  Parameter<S>& at(const std::string& name) { return params_[checked(name)]; }
  const Parameter<S>& at(const std::string& name) const { return params_[checked(name)]; }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) {
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
        p.grad = Mat<S>::Zero(p.value.rows(), p.value.cols());
      else
        p.grad.setZero();
    }
  }

  /// Copies values from another set with identical names and shapes.
  void assign_values(const ParameterSet& other) {
    if (other.size() != size()) throw ShapeError("parameter sets differ in size");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = other.params_[i].value;
  }

 private:
  std::size_t checked(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
    return static_cast<std::size_t>(it->second);
  }

  std::vector<Parameter<S>> params_;
  std::vector<Init> inits_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace nl2vis::model
