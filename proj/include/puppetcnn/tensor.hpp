// Copyright 2026 The puppetcnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
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
#include <unordered_map>
#include <vector>

namespace pcnn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct Node;
}

/// Receives the output gradient and writes into one buffer per input.
/// `grad_in[i]` is null when input i does not need a gradient. Buffers must be
/// accumulated into (+=), never overwritten.
using BackwardFn = std::function<void(std::span<const double> out_value,
                                      std::span<const double> grad_out,
                                      std::span<std::vector<double>* const> grad_in)>;

/// Handle to an immutable, row-major float64 array that may sit in a
/// reverse-mode differentiation graph. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> data);
  /// Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<double> data);
  static Tensor full(Shape shape, double value);
  static Tensor zeros(Shape shape) { return full(std::move(shape), 0.0); }

  /// Builds a graph node. `backward` is dropped when no input requires grad.
  static Tensor from_op(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                        BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::span<const double> data() const;
  double operator[](std::size_t i) const { return data()[i]; }
  /// Value of a one-element tensor.
  double item() const;
  bool requires_grad() const;
  bool is_leaf() const;

  /// Same values, cut from the graph.
  Tensor detach() const;

  const detail::Node* id() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Result of one backward pass: gradients of the scalar loss w.r.t. every
/// trainable leaf reachable from it.
class Gradients {
 public:
  /// Gradient for `t`; all zeros when `t` was not reached.
  std::vector<double> of(const Tensor& t) const;
  bool contains(const Tensor& t) const { return grads_.count(t.id()) != 0; }

 private:
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const detail::Node*, std::vector<double>> grads_;
};

/// Reverse-mode sweep from a scalar loss. Visits each graph node once in
/// reverse topological order; the tape itself is left untouched, so calling
/// it twice yields identical results.
Gradients backward(const Tensor& loss);

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};
}  // namespace detail

}  // namespace pcnn
