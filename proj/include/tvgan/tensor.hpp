// Copyright (c) 2026, The tvgan Authors. All rights reserved.
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
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tvgan/errors.hpp"

namespace tvgan {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

/// Dense row-major array of values. Plain value type; no gradient tracking.
template <typename T>
class Array {
 public:
  using value_type = T;

  Array() = default;

  explicit Array(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(numel(shape_), fill) {
    check_positive();
  }

  Array(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_positive();
    if (numel(shape_) != data_.size()) {
      throw DimensionError("array of shape " + to_string(shape_) + " needs " +
                           std::to_string(numel(shape_)) + " values, got " +
                           std::to_string(data_.size()));
    }
  }

  static Array scalar(T value) { return Array(Shape{1}, std::vector<T>{value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // 4-D accessor for (batch, channel, row, col) layouts.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Array reshaped(Shape shape) const {
    if (numel(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + to_string(shape_) + " to " +
                           to_string(shape));
    }
    return Array(std::move(shape), data_);
  }

  template <typename U>
  Array<U> cast() const {
    return Array<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const Array& other) const = default;

 private:
  void check_positive() const {
    for (auto d : shape_) {
      if (d == 0) throw DimensionError("zero-sized dimension in " + to_string(shape_));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
struct TensorNode {
  Array<T> value;
  Array<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
};

template <typename T>
class Tape;

/// Shared handle to a value that may participate in reverse-mode
/// differentiation. Copies alias the same node.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Array<T> value, bool requires_grad = false)
      : node_(std::make_shared<TensorNode<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::size_t size() const { return node_->value.size(); }

  const Array<T>& value() const { return node_->value; }
  Array<T>& mutable_value() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Array<T>& grad() const { return node_->grad; }

  // Allocates a zero gradient on first use.
  Array<T>& grad_buffer() {
    if (node_->grad.empty()) node_->grad = Array<T>(node_->value.shape());
    return node_->grad;
  }

  void clear_grad() { node_->grad = Array<T>(); }

  T item() const {
    if (node_->value.size() != 1) {
      throw DimensionError("item() on tensor of shape " + to_string(shape()));
    }
    return node_->value[0];
  }

  Tensor detach() const { return Tensor(node_->value, false); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  friend class Tape<T>;
  std::shared_ptr<TensorNode<T>> node_;
};

/// Gradient sinks handed to a backward rule: one entry per recorded input,
/// null where that input does not require a gradient.
template <typename T>
using GradSinks = std::span<Array<T>* const>;

template <typename T>
using BackwardRule = std::function<void(const Array<T>& grad_output, GradSinks<T> grad_inputs)>;

/// Ordered record of differentiable operations. backward() replays the
/// recorded rules in reverse order. Confined to a single thread.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Wraps `output` in a tensor and records `rule` when any input requires
  /// a gradient and the tape is recording.
  Tensor<T> record(Array<T> output, std::vector<Tensor<T>> inputs, BackwardRule<T> rule) {
    bool needs_grad = false;
    for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
    needs_grad = needs_grad && recording_;
    Tensor<T> out(std::move(output), needs_grad);
    if (needs_grad) entries_.push_back(Entry{std::move(inputs), out, std::move(rule)});
    return out;
  }

  /// Populates gradients of every tensor reachable from `loss`. Leaf
  /// gradients accumulate across calls; intermediate gradients are reset.
  void backward(const Tensor<T>& loss) {
    if (loss.size() != 1) {
      throw DimensionError("backward() needs a scalar loss, got shape " +
                           to_string(loss.shape()));
    }
    for (auto& e : entries_) e.output.clear_grad();
    Tensor<T> root = loss;
    root.grad_buffer()[0] += T{1};

    std::vector<Array<T>*> sinks;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (!it->output.has_grad()) continue;
      sinks.clear();
      for (auto& in : it->inputs) {
        sinks.push_back(in.requires_grad() ? &in.grad_buffer() : nullptr);
      }
      it->rule(it->output.grad(), GradSinks<T>(sinks.data(), sinks.size()));
    }
  }

 private:
  struct Entry {
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardRule<T> rule;
  };

  bool recording_;
  std::vector<Entry> entries_;
};

}  // namespace tvgan
