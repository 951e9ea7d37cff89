// Copyright 2026 The mnerv contributors. All Rights Reserved.
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

#include "mnerv/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "mnerv/error.h"

namespace mnerv::inline MNERV_PRECISION_NS {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<Real> data, bool requires_grad) {
  for (int d : shape) {
    if (d <= 0) throw ConfigError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ConfigError("tensor data length " + std::to_string(data.size()) +
                      " does not match shape " + shape_str(shape));
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, Real(0), requires_grad);
}

Tensor Tensor::full(const Shape& shape, Real value, bool requires_grad) {
  return Tensor(shape, std::vector<Real>(shape_numel(shape), value), requires_grad);
}

Tensor Tensor::scalar(Real value) { return Tensor({1}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }

int Tensor::dim(std::size_t axis) const { return node_->shape.at(axis); }

std::size_t Tensor::numel() const { return node_->data.size(); }

std::span<const Real> Tensor::data() const { return node_->data; }

std::span<Real> Tensor::mutable_data() { return node_->data; }

Real Tensor::item() const {
  if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) { node_->requires_grad = value; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const Real> Tensor::grad() const { return node_->grad; }

std::span<Real> Tensor::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), Real(0));
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->data, false); }

const char* Tensor::op_name() const { return node_->op; }

Tensor make_result(const char* op, Shape shape, std::vector<Real> data,
                   std::vector<Tensor> inputs, detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const Tensor& in : inputs) needs_grad = needs_grad || in.requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const Tensor& in : inputs) {
      if (in.requires_grad()) node->inputs.push_back(in.node_ptr());
    }
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Real* grad_target(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  auto* node = t.node();
  if (node->grad.empty()) node->grad.assign(node->data.size(), Real(0));
  return node->grad.data();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Graph::Graph(const Tensor& root) : root_(root) {
  if (!root.requires_grad()) return;
  // Iterative post-order DFS so deep decoders cannot overflow the stack.
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void Graph::backward() {
  if (order_.empty()) return;
  for (detail::Node* node : order_) {
    if (node->backward) node->grad.assign(node->data.size(), Real(0));
  }
  detail::Node* root = order_.back();
  if (root->grad.empty()) root->grad.assign(root->data.size(), Real(0));
  root->grad[0] += Real(1);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward) node->backward(node->grad);
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() requires a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  Graph(loss).backward();
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
