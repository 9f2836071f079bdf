#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attnseg/blocks.h"

namespace attnseg {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> m, v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update of w in place. State buffers are sized on
// first use.
template <typename T>
void adam_step(std::span<T> w, std::span<const T> grad, AdamState<T>& state, const AdamOptions& opt);

// Adam over every parameter of a store. A parameter without a gradient
// buffer is treated as having a zero gradient.
template <typename T>
class Adam {
 public:
  Adam(ParameterStore<T>& store, AdamOptions options);

  // Applies grad * grad_scale (e.g. 1/n after n accumulated passes).
  void step(T grad_scale = T{1});
  std::int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  ParameterStore<T>& store_;
  AdamOptions options_;
  std::vector<AdamState<T>> states_;
  std::int64_t steps_ = 0;
};

}  // namespace attnseg
