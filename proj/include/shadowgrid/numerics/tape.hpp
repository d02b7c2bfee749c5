// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shadowgrid/numerics/tensor.hpp"

namespace shadowgrid::numerics {

/// A named trainable tensor with its gradient buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  /// Set by backward() and zero_grad(); Adam refuses parameters without it.
  bool grad_ready = false;

  void zero_grad() {
    grad = Tensor(value.shape(), 0.0);
    grad_ready = true;
  }
};

/// Ordered, name-addressable parameter collection. References returned by
/// add()/get() stay valid for the lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value);
  /// Glorot-uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
  Parameter& add_glorot(const std::string& name, Shape shape, Index fan_in, Index fan_out, std::mt19937_64& rng);
  Parameter& add_zeros(const std::string& name, Shape shape) { return add(name, Tensor(std::move(shape), 0.0)); }

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Index scalar_count() const;
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();

  /// JSON checkpoint: {"format": "shadowgrid-params", "version": 1,
  /// "parameters": [{"name", "shape", "values"}...]}. Values round-trip exactly.
  std::string to_json() const;
  static ParameterSet from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ParameterSet load(const std::filesystem::path& path);
  /// Copies values from `other`; names and shapes must match exactly.
  void assign_values(const ParameterSet& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, Index id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  Index id() const { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }

 private:
  Tape* tape_ = nullptr;
  Index id_ = -1;
};

/// Append-only record of a forward computation. backward() walks it in
/// reverse, so every node is visited exactly once.
///
/// Gradient mode: node gradients are recomputed from zero on each backward()
/// call; parameter gradients are *accumulated* into Parameter::grad. Calling
/// backward() twice without reset() therefore adds the exact gradient twice.
class Tape {
 public:
  /// Receives the id of the node it belongs to.
  using BackwardRule = std::function<void(Index self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// A leaf whose gradient is tracked but that is not a Parameter.
  Var variable(Tensor value);
  Var parameter(Parameter& p);

  /// `loss` must hold exactly one value (NonScalarLoss otherwise).
  void backward(const Var& loss);
  void reset();
  Index size() const { return static_cast<Index>(nodes_.size()); }

  // --- op-author interface ---
  const Tensor& value(Index id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(Index id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Gradient buffer, allocated on first use.
  Tensor& grad(Index id);
  const Tensor& grad_view(Index id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  /// Records a node; `rule` runs only if any input requires a gradient.
  Var record(Tensor value, std::span<const Var> inputs, BackwardRule rule);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardRule rule) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(rule));
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardRule backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace shadowgrid::numerics
