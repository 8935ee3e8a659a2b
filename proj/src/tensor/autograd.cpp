// SPDX-License-Identifier: Apache-2.0
#include "tanet/autograd.hpp"

#include <algorithm>

namespace tanet {

namespace {

template <std::floating_point T>
Tape<T>*& active_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}

KinkProbe*& active_probe() {
  thread_local KinkProbe* probe = nullptr;
  return probe;
}

}  // namespace

template <std::floating_point T>
Tape<T>::Tape() : previous_(active_tape<T>()) {
  active_tape<T>() = this;
}

template <std::floating_point T>
Tape<T>::~Tape() {
  active_tape<T>() = previous_;
}

template <std::floating_point T>
Tape<T>* Tape<T>::active() {
  return active_tape<T>();
}

template <std::floating_point T>
Var<T> Tape<T>::emit(const char* op, Tensor<T> value,
                     std::initializer_list<Var<T>> inputs, BackwardFn<T> fn) {
  return emit(op, std::move(value), std::vector<Var<T>>(inputs), std::move(fn));
}

template <std::floating_point T>
Var<T> Tape<T>::emit(const char* op, Tensor<T> value,
                     const std::vector<Var<T>>& inputs, BackwardFn<T> fn) {
  Var<T> out = Var<T>::constant(std::move(value));
  Tape* tape = active();
  if (tape == nullptr) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Var<T>& v) { return v.requires_grad(); });
  if (!any) return out;

  auto state = out.state();
  state->requires_grad = true;
  Node node{op, {}, state, std::move(fn)};
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) node.inputs.push_back(in.state());
  tape->nodes_.push_back(std::move(node));
  return out;
}

template <std::floating_point T>
void Tape<T>::backward(const Var<T>& loss) {
  if (loss.value().size() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " +
                     loss.shape().str());
  }
  if (consumed_) throw UsageError("tape already consumed by a backward pass");
  consumed_ = true;
  if (!loss.requires_grad()) return;

  auto root = loss.state();
  root->grad_buffer().fill(T(1));

  std::vector<Tensor<T>*> slots;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& node = *it;
    if (!node.output->grad) continue;
    slots.assign(node.inputs.size(), nullptr);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      if (node.inputs[i]->requires_grad) {
        slots[i] = &node.inputs[i]->grad_buffer();
      }
    }
    node.fn(*node.output->grad, slots);
    // Intermediate gradients are no longer needed once propagated.
    if (node.output != root) node.output->grad.reset();
  }
}

template <std::floating_point T>
std::vector<std::string> Tape<T>::op_names() const {
  std::vector<std::string> names;
  names.reserve(nodes_.size());
  for (const auto& n : nodes_) names.emplace_back(n.op);
  return names;
}

KinkProbe::KinkProbe() : previous_(active_probe()) { active_probe() = this; }

KinkProbe::~KinkProbe() { active_probe() = previous_; }

bool KinkProbe::enabled() { return active_probe() != nullptr; }

void KinkProbe::record(std::uint64_t decision) {
  KinkProbe* p = active_probe();
  if (p == nullptr) return;
  // FNV-1a over the 8 bytes of the decision word.
  for (int i = 0; i < 8; ++i) {
    p->hash_ ^= (decision >> (8 * i)) & 0xffu;
    p->hash_ *= 1099511628211ull;
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace tanet
