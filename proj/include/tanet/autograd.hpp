// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tanet/tensor.hpp"

namespace tanet {

namespace detail {

template <std::floating_point T>
struct VarState {
  Tensor<T> value;
  std::optional<Tensor<T>> grad;
  bool requires_grad = false;

  Tensor<T>& grad_buffer() {
    if (!grad) grad.emplace(value.shape(), T(0));
    return *grad;
  }
};

}  // namespace detail

/// A tensor participating in reverse-mode differentiation. Handles share
/// state; copying a Var aliases the same value and gradient.
template <std::floating_point T>
class Var {
 public:
  Var() : state_(std::make_shared<detail::VarState<T>>()) {}

  /// Trainable leaf whose gradient is accumulated by Tape::backward.
  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }
  static Var constant(Tensor<T> value) { return Var(std::move(value), false); }

  const Tensor<T>& value() const { return state_->value; }
  Tensor<T>& mutable_value() { return state_->value; }
  const Shape& shape() const { return state_->value.shape(); }
  bool requires_grad() const { return state_->requires_grad; }

  bool has_grad() const { return state_->grad.has_value(); }
  /// Gradient buffer; zeros when no gradient has reached this variable.
  const Tensor<T>& grad() const { return state_->grad_buffer(); }
  void zero_grad() { state_->grad.reset(); }

  bool same_node(const Var& other) const { return state_ == other.state_; }

  std::shared_ptr<detail::VarState<T>> state() const { return state_; }

 private:
  Var(Tensor<T> value, bool requires_grad)
      : state_(std::make_shared<detail::VarState<T>>()) {
    state_->value = std::move(value);
    state_->requires_grad = requires_grad;
  }

  std::shared_ptr<detail::VarState<T>> state_;
};

/// Gradient of one op: receives dL/d(output) and one slot per input, null
/// for inputs that do not require a gradient. Slots accumulate (+=).
template <std::floating_point T>
using BackwardFn =
    std::function<void(const Tensor<T>& grad_out, std::span<Tensor<T>*> grads)>;

/// Ordered record of differentiable op applications on the current thread.
/// Constructing a Tape makes it the active recorder for scalar type T until
/// it is destroyed; ops executed with no active tape only compute values.
template <std::floating_point T>
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  /// Wraps `value` as the output of `op`. Records a node only when a tape
  /// is active and at least one input requires a gradient.
  static Var<T> emit(const char* op, Tensor<T> value,
                     std::initializer_list<Var<T>> inputs, BackwardFn<T> fn);
  static Var<T> emit(const char* op, Tensor<T> value,
                     const std::vector<Var<T>>& inputs, BackwardFn<T> fn);

  /// Reverse sweep from a scalar loss. Each recorded node is visited once,
  /// newest first; gradients accumulate into every leaf that requires one.
  void backward(const Var<T>& loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Op names in recording order, for diagnostics and tests.
  std::vector<std::string> op_names() const;

 private:
  struct Node {
    const char* op;
    std::vector<std::shared_ptr<detail::VarState<T>>> inputs;
    std::shared_ptr<detail::VarState<T>> output;
    BackwardFn<T> fn;
  };

  Tape* previous_ = nullptr;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Folds branch decisions of non-smooth ops (ReLU sign, max-pool argmax,
/// |x| sign) into a running hash while alive. Finite-difference harnesses use
/// it to detect probes that straddle a kink.
class KinkProbe {
 public:
  KinkProbe();
  ~KinkProbe();
  KinkProbe(const KinkProbe&) = delete;
  KinkProbe& operator=(const KinkProbe&) = delete;

  std::uint64_t signature() const { return hash_; }

  static void record(std::uint64_t decision);
  static bool enabled();

 private:
  KinkProbe* previous_ = nullptr;
  std::uint64_t hash_ = 1469598103934665603ull;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace tanet
