#pragma once

#include <cmath>
#include <vector>

#include "vocgan/params.hpp"

namespace vocgan {

// Adam with bias correction. Defaults follow the training setup this model
// family uses: lr 1e-4, beta1 0.5, beta2 0.9.
template <typename T>
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;  // first moments, parallel to the trainable list
  std::vector<std::vector<T>> v;  // second moments
};

template <typename T>
void adam_step(const std::vector<NamedTensor<T>>& trainables, AdamState<T>& state) {
  if (state.m.empty()) {
    state.m.resize(trainables.size());
    state.v.resize(trainables.size());
    for (size_t i = 0; i < trainables.size(); ++i) {
      const size_t n = static_cast<size_t>(trainables[i].tensor->numel());
      state.m[i].assign(n, T(0));
      state.v[i].assign(n, T(0));
    }
  }
  if (state.m.size() != trainables.size())
    throw ContractError(strcat_("adam_step: state tracks ", state.m.size(),
                                " tensors, got ", trainables.size()));

  state.step += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T bc1 = T(1) - static_cast<T>(std::pow(state.beta1, static_cast<double>(state.step)));
  const T bc2 = T(1) - static_cast<T>(std::pow(state.beta2, static_cast<double>(state.step)));
  const T lr = static_cast<T>(state.lr);
  const T eps = static_cast<T>(state.epsilon);

  for (size_t i = 0; i < trainables.size(); ++i) {
    Tensor<T>& t = *trainables[i].tensor;
    if (!t.has_grad())
      throw ContractError(strcat_("adam_step: missing grad for parameter ", trainables[i].name));
    if (state.m[i].size() != t.vec().size())
      throw ContractError(strcat_("adam_step: state size mismatch for ", trainables[i].name));
    const std::vector<T>& g = t.grad();
    T* p = t.data();
    T* mi = state.m[i].data();
    T* vi = state.v[i].data();
    const size_t n = g.size();
    for (size_t j = 0; j < n; ++j) {
      mi[j] = b1 * mi[j] + (T(1) - b1) * g[j];
      vi[j] = b2 * vi[j] + (T(1) - b2) * g[j] * g[j];
      const T mhat = mi[j] / bc1;
      const T vhat = vi[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace vocgan
