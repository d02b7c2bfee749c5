// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/numerics/tape.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "shadowgrid/error.hpp"

namespace shadowgrid::numerics {

Parameter& ParameterSet::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw Error(ErrorKind::InvalidInput, fmt::format("duplicate parameter {}", name));
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::add_glorot(const std::string& name, Shape shape, Index fan_in, Index fan_out,
                                    std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return add(name, std::move(t));
}

Parameter& ParameterSet::get(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorKind::InvalidInput, fmt::format("unknown parameter {}", name));
  return *params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

Index ParameterSet::scalar_count() const {
  Index n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::string ParameterSet::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : params_) {
    std::vector<double> values(p->value.data(), p->value.data() + p->value.size());
    list.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"values", values}});
  }
  return nlohmann::json{{"format", "shadowgrid-params"}, {"version", 1}, {"parameters", list}}.dump();
}

ParameterSet ParameterSet::from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "shadowgrid-params" || doc.at("version").get<int>() != 1) {
      throw Error(ErrorKind::ParseError, "unsupported parameter file format/version");
    }
    ParameterSet set;
    for (const auto& p : doc.at("parameters")) {
      const auto shape = p.at("shape").get<Shape>();
      const auto values = p.at("values").get<std::vector<double>>();
      VectorXd data = Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
      set.add(p.at("name").get<std::string>(), Tensor(shape, std::move(data)));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("parameter file: {}", e.what()));
  }
}

void ParameterSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", path.string()));
  out << to_json() << '\n';
}

ParameterSet ParameterSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("checkpoint has {} parameters, model {}", other.size(), size()));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& src = other[i];
    auto& dst = *params_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw Error(ErrorKind::ShapeMismatch, fmt::format("checkpoint parameter {} {} does not match {} {}", src.name,
                                                        shape_string(src.value.shape()), dst.name,
                                                        shape_string(dst.value.shape())));
    }
    dst.value = src.value;
  }
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad_view(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return Var(this, size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, nullptr, {}});
  return Var(this, size() - 1);
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, true, &p, {}});
  return Var(this, size() - 1);
}

Tensor& Tape::grad(Index id) {
  auto& node = nodes_[static_cast<std::size_t>(id)];
  if (node.grad.empty()) node.grad = Tensor(node.value.shape(), 0.0);
  return node.grad;
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardRule rule) {
  bool needs = false;
  for (const auto& v : inputs) {
    if (&v.tape() != this) throw Error(ErrorKind::InvalidInput, "mixing variables from different tapes");
    needs = needs || requires_grad(v.id());
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(rule) : BackwardRule{}});
  return Var(this, size() - 1);
}

void Tape::backward(const Var& loss) {
  if (nodes_.empty()) throw Error(ErrorKind::InvalidInput, "backward on an empty tape");
  if (loss.value().size() != 1) {
    throw Error(ErrorKind::NonScalarLoss, fmt::format("loss has shape {}", shape_string(loss.shape())));
  }
  for (auto& n : nodes_) {
    if (!n.grad.empty()) n.grad.set_zero();
  }
  grad(loss.id())[0] = 1.0;
  for (Index id = loss.id(); id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(id);
    if (node.param) {
      auto& p = *node.param;
      if (p.grad.empty() || !p.grad_ready) p.grad = Tensor(p.value.shape(), 0.0);
      p.grad.flat() += node.grad.flat();
      p.grad_ready = true;
    }
  }
}

void Tape::reset() { nodes_.clear(); }

}  // namespace shadowgrid::numerics
