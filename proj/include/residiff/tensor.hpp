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

#pragma once

// Dense fp64 tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Operations on tensors that
// require gradients record a closure on the result node; backward() walks
// those closures in reverse creation order. Creation order is a valid
// topological order because a node is always created after its inputs.
//
// The record is per forward pass: backward() severs it afterwards, so every
// training step builds a fresh graph. Leaves (parameters and inputs created
// by the factories below) keep their gradients across passes until zeroed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace residiff::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::uint64_t tape_id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Adds d(loss)/d(parent) into each parent's grad, given this node's grad.
  std::function<void(Node&)> backward_fn;

  std::span<double> ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  // Negative axes count from the end.
  std::size_t dim(int axis) const;
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->values.size(); }

  std::span<const double> values() const { return node_->values; }
  // Writable view for leaves (optimizer updates, test perturbations).
  std::span<double> mutable_values() { return node_->values; }
  double item() const;

  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  // Drops the gradient buffer; grad() is empty until something flows in.
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward_fn; }
  std::uint64_t tape_id() const { return node_->tape_id; }

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

// Reverse sweep from a scalar loss. Accumulates into leaf gradients and
// releases the recorded graph. Throws ContractError for non-scalar losses.
void backward(const Tensor& loss);

// Scoped switch that stops operations from recording closures on this
// thread. Used for inference, where nothing is differentiated.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {
// Builds an op result. Records `backward_fn` only when gradients are enabled
// and some parent requires them.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward_fn);
}  // namespace detail

}  // namespace residiff::ad
