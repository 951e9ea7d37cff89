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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mnerv/precision.h"

namespace mnerv::inline MNERV_PRECISION_NS {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

using BackwardFn = std::function<void(std::span<const Real> grad_out)>;

struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;  // null for leaves and for constants
};

}  // namespace detail

/// Dense row-major array that participates in a reverse-mode autodiff graph.
///
/// Tensor is a cheap handle: copies share the same storage and graph node.
/// Operations that produce new values live in ops.h; results record how to
/// push gradients back to their inputs whenever any input requires grad and
/// gradient recording is enabled (see NoGradGuard).
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> data, bool requires_grad = false);

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, Real value, bool requires_grad = false);
  static Tensor scalar(Real value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const Real> data() const;
  // In-place mutation is reserved for optimizers and initializers; it does
  // not invalidate gradients already recorded against the old values.
  std::span<Real> mutable_data();
  Real item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const Real> grad() const;
  // Allocates a zero gradient on first use.
  std::span<Real> mutable_grad();
  void zero_grad();

  // Fresh leaf holding a copy of the values, outside any graph.
  Tensor detach() const;
  const char* op_name() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(const char*, Shape, std::vector<Real>,
                            std::vector<Tensor>, detail::BackwardFn);

  std::shared_ptr<detail::Node> node_;
};

/// Builds the output of a differentiable operation. `backward` receives the
/// gradient w.r.t. the output and must accumulate into the inputs that
/// require grad. It is dropped when no input requires grad or recording is
/// off.
Tensor make_result(const char* op, Shape shape, std::vector<Real> data,
                   std::vector<Tensor> inputs, detail::BackwardFn backward);

// Gradient buffer of `t` if it takes part in differentiation, else null.
Real* grad_target(const Tensor& t);

bool grad_enabled();

// Disables graph recording for its lifetime (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// The recorded graph reachable from a root, in topological order (every
/// node's inputs precede it).
class Graph {
 public:
  explicit Graph(const Tensor& root);

  const std::vector<detail::Node*>& nodes() const { return order_; }

  // Seeds d(root)/d(root) = 1 and visits each node once in reverse order.
  // Interior gradients are reset first; leaf gradients accumulate.
  void backward();

 private:
  Tensor root_;
  std::vector<detail::Node*> order_;
};

// Throws UsageError unless `loss` is a scalar.
void backward(const Tensor& loss);

}  // namespace mnerv::inline MNERV_PRECISION_NS
