#include "attnseg/optim.h"

#include <cmath>

#include "attnseg/error.h"

namespace attnseg {

template <typename T>
void adam_step(std::span<T> w, std::span<const T> grad, AdamState<T>& s, const AdamOptions& opt) {
  if (w.size() != grad.size()) throw InputError("adam_step: weight/gradient size mismatch");
  if (s.m.empty()) {
    s.m.assign(w.size(), T{0});
    s.v.assign(w.size(), T{0});
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(s.t));
  const T b1 = static_cast<T>(opt.beta1), b2 = static_cast<T>(opt.beta2);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const T g = grad[i];
    s.m[i] = b1 * s.m[i] + (T{1} - b1) * g;
    s.v[i] = b2 * s.v[i] + (T{1} - b2) * g * g;
    const double mh = s.m[i] / c1, vh = s.v[i] / c2;
    w[i] -= static_cast<T>(opt.lr * mh / (std::sqrt(vh) + opt.eps));
  }
}

template <typename T>
Adam<T>::Adam(ParameterStore<T>& store, AdamOptions options)
    : store_(store), options_(options), states_(store.entries().size()) {}

template <typename T>
void Adam<T>::step(T grad_scale) {
  const auto& entries = store_.entries();
  if (entries.size() != states_.size()) throw ConfigError("Adam: parameter set changed after construction");
  std::vector<T> scaled;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor<T> p = entries[k].value;
    scaled.assign(static_cast<std::size_t>(p.numel()), T{0});
    if (p.has_grad()) {
      const auto g = p.grad();
      for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = g[i] * grad_scale;
    }
    adam_step<T>(p.data(), scaled, states_[k], options_);
  }
  ++steps_;
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, const AdamOptions&);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&, const AdamOptions&);
template class Adam<float>;
template class Adam<double>;

}  // namespace attnseg
