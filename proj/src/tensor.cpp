#include "attnseg/tensor.h"

#include <algorithm>
#include <sstream>

#include "attnseg/error.h"

namespace attnseg {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw InputError("non-positive dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : node_(std::make_shared<Node>()) {
  const auto n = shape_numel(shape);
  node_->shape = std::move(shape);
  node_->value.assign(static_cast<std::size_t>(n), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<Node>()) {
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
    throw InputError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape_to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->shape;
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  const auto& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw InputError("axis out of range for shape " + shape_to_string(s));
  }
  return s[static_cast<std::size_t>(axis)];
}

template <typename T>
std::int64_t Tensor<T>::numel() const {
  return node_ ? static_cast<std::int64_t>(node_->value.size()) : 0;
}

template <typename T>
std::span<T> Tensor<T>::data() {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->value;
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw InputError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool value) {
  if (!node_) throw InputError("use of undefined tensor");
  node_->requires_grad = value;
  return *this;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  if (!node_) throw InputError("use of undefined tensor");
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), T{0});
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T{0});
}

template <typename T>
void Tensor<T>::clear_grad() {
  if (node_) {
    node_->grad.clear();
    node_->grad.shrink_to_fit();
  }
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  if (!node_) return {};
  return Tensor(node_->shape, node_->value);
}

namespace {

template <typename T>
Tape<T>*& tape_slot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}

}  // namespace

template <typename T>
Tape<T>* active_tape() {
  return tape_slot<T>();
}

template <typename T>
void Tape<T>::record(std::string_view op, std::function<void()> backward) {
  entries_.push_back({std::string(op), std::move(backward)});
}

template <typename T>
void Tape<T>::backward(Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw InputError("backward() needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  auto g = loss.mutable_grad();
  g[0] += T{1};
  replayed_ = 0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->backward();
    ++replayed_;
  }
}

template <typename T>
std::vector<std::string> Tape<T>::op_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& e : entries_) names.push_back(e.op);
  return names;
}

template <typename T>
void Tape<T>::clear() {
  entries_.clear();
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(tape_slot<T>()) {
  tape_slot<T>() = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  tape_slot<T>() = previous_;
}

template <typename T>
NoGradScope<T>::NoGradScope() : previous_(tape_slot<T>()) {
  tape_slot<T>() = nullptr;
}

template <typename T>
NoGradScope<T>::~NoGradScope() {
  tape_slot<T>() = previous_;
}

template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (tape_slot<T>() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<T>* t) { return t && t->defined() && t->requires_grad(); });
}

#define ATTNSEG_INSTANTIATE(T)                                                   \
  template class Tensor<T>;                                                      \
  template class Tape<T>;                                                        \
  template class TapeScope<T>;                                                   \
  template class NoGradScope<T>;                                                 \
  template Tape<T>* active_tape<T>();                                            \
  template bool should_record<T>(std::initializer_list<const Tensor<T>*> inputs);

ATTNSEG_INSTANTIATE(float)
ATTNSEG_INSTANTIATE(double)
#undef ATTNSEG_INSTANTIATE

}  // namespace attnseg
