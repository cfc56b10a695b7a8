// Copyright 2026 The dvlcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dvlcal/nn/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "dvlcal/errors.hpp"

namespace dvlcal::nn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) out += (i ? ", " : "") + std::to_string(shape[i]);
  return out + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  if (shape_numel(shape) != values.size()) {
    throw DomainError("tensor shape " + shape_string(shape) + " does not match " + std::to_string(values.size()) +
                      " values");
  }
  node_->shape = std::move(shape);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw DomainError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape()));
  return node_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw DomainError("item() needs a single-element tensor, got " + shape_string(shape()));
  return node_->values[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->values, false); }

Tensor Tensor::from_op(Shape shape, std::vector<double> values, const std::vector<Tensor>& parents,
                       std::function<void(const detail::Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(values), false);
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Tensor& p) { return p.defined() && p.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    for (const auto& p : parents) {
      if (p.defined() && p.requires_grad()) out.node_->parents.push_back(p.node_);
    }
    out.node_->backward_fn = std::move(backward_fn);
  }
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward on an undefined tensor");
  if (loss.numel() != 1) throw ContractError("backward needs a scalar loss, got " + shape_string(loss.shape()));
  auto root = loss.node();
  if (root->backward_done) throw ContractError("backward already ran on this graph; rebuild it first");
  if (!root->requires_grad) throw ContractError("loss does not depend on any tensor that requires grad");

  // Post-order DFS gives a topological order with parents before children.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  for (detail::Node* node : order) {
    if (node->backward_fn) {
      node->backward_fn = nullptr;
      node->parents.clear();
    }
  }
  root->backward_done = true;
}

}  // namespace dvlcal::nn
