#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace attnseg {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor handle. Copies share storage (and gradient), so a
// tensor captured by a recorded operation sees later gradient accumulation.
// Use clone() for an independent copy.
//
// 5-D activations use the layout [batch, channel, depth, height, width].
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }
  static Tensor scalar(T value) { return Tensor(Shape{1}, value); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t dim(int axis) const;
  int ndim() const { return static_cast<int>(shape().size()); }
  std::int64_t numel() const;

  std::span<T> data();
  std::span<const T> data() const;
  T* raw() { return data().data(); }
  const T* raw() const { return data().data(); }
  T& operator[](std::int64_t i) { return node_->value[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return node_->value[static_cast<std::size_t>(i)]; }
  T item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const T> grad() const;
  // Allocates a zero gradient buffer on first use.
  std::span<T> mutable_grad();
  void zero_grad();
  void clear_grad();

  // Independent copy of the values; no gradient, requires_grad off.
  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Node> node_;
};

// Ordered record of executed differentiable operations. backward() replays
// the recorded closures in reverse execution order exactly once each.
template <typename T>
class Tape {
 public:
  void record(std::string_view op, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and replays the record. loss must be a
  // single-element tensor produced while this tape was active.
  void backward(Tensor<T>& loss);

  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> op_names() const;
  // Number of closures executed by the most recent backward().
  std::size_t replayed() const { return replayed_; }
  void clear();

 private:
  struct Entry {
    std::string op;
    std::function<void()> backward;
  };
  std::vector<Entry> entries_;
  std::size_t replayed_ = 0;
};

template <typename T>
Tape<T>* active_tape();

// Installs a tape as the recording target of the current thread for the
// lifetime of the scope. Scopes nest; the previous tape is restored.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// Suspends recording (inference, metric computation).
template <typename T>
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

// True when an operation on these inputs has to be recorded.
template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs);

}  // namespace attnseg
