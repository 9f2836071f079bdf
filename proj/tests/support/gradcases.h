#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gradcheck.h"

namespace attnseg::testing {

struct GradInstance {
  ScalarFn fn;
  std::vector<Tensor<double>> inputs;
};

// A differentiable operation, block, loss or model variant. make(i) draws
// the i-th random instance deterministically.
struct GradCase {
  std::string name;
  std::function<GradInstance(int)> make;
};

// Every differentiable operation and composite block of the library.
const std::vector<GradCase>& gradient_cases();

}  // namespace attnseg::testing
