// Copyright 2026 The residiff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "residiff/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

#include "residiff/errors.hpp"

namespace residiff::ad {
namespace {

std::atomic<std::uint64_t> next_tape_id{1};
thread_local bool tls_grad_enabled = true;

std::shared_ptr<Node> new_node(Shape shape, std::vector<double> values, bool requires_grad) {
  if (element_count(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_string(shape) + " cannot hold " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  node->tape_id = next_tape_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::span<double> Node::ensure_grad() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return Tensor(new_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

std::size_t Tensor::dim(int axis) const {
  const int r = static_cast<int>(rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw RangeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->values[0];
}

void Tensor::zero_grad() {
  node_->grad.clear();
  node_->grad.shrink_to_fit();
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  const std::shared_ptr<Node>& root = loss.node();
  if (!root->requires_grad) return;

  // Collect everything reachable through recorded parents. Owning
  // pointers keep interior nodes alive while the record is cleared.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> seen;
  std::vector<std::shared_ptr<Node>> stack{root};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto n = std::move(stack.back());
    stack.pop_back();
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p);
    }
    order.push_back(std::move(n));
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->tape_id > b->tape_id; });

  root->ensure_grad()[0] += 1.0;
  for (const auto& n : order) {
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Free the record. Interior gradients are not kept.
  for (const auto& n : order) {
    if (n->backward_fn) {
      n->backward_fn = nullptr;
      n->parents.clear();
      n->grad.clear();
      n->grad.shrink_to_fit();
      n->requires_grad = false;
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(tls_grad_enabled) { tls_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { tls_grad_enabled = previous_; }

bool grad_enabled() { return tls_grad_enabled; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward_fn) {
  bool needs = false;
  if (tls_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  auto node = new_node(std::move(shape), std::move(values), needs);
  if (needs) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace residiff::ad
