#pragma once

#include <string>
#include <vector>

#include "vocgan/ops.hpp"
#include "vocgan/tensor.hpp"

namespace vocgan {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

// A trainable model parameter addressed by a dotted path. Convolution weights
// are stored in weight-normalized form (direction v plus per-output-channel
// magnitude g); the effective weight g*v/||v|| is rebuilt on the tape each
// forward so gradients reach both factors.
template <typename T>
struct Parameter {
  std::string name;
  bool weight_normed = false;
  std::int64_t norm_axis = 0;
  Tensor<T> value;      // plain storage when !weight_normed
  Tensor<T> direction;  // v
  Tensor<T> magnitude;  // g

  static Parameter plain(std::string name, Tensor<T> t) {
    Parameter p;
    p.name = std::move(name);
    p.value = std::move(t);
    p.value.set_requires_grad(true);
    return p;
  }

  Tensor<T> effective() const {
    if (!weight_normed) return value;
    return weight_norm_apply(direction, magnitude, norm_axis);
  }

  const Shape& shape() const { return weight_normed ? direction.shape() : value.shape(); }

  // Current effective weight values without touching the tape.
  std::vector<T> effective_values() const {
    NoGradGuard ng;
    return effective().vec();
  }

  void collect(std::vector<NamedTensor<T>>& out) {
    if (weight_normed) {
      out.push_back({name + ".v", &direction});
      out.push_back({name + ".g", &magnitude});
    } else {
      out.push_back({name, &value});
    }
  }
};

// Splits a plain weight into (v, g) with g initialized to the per-slice norm,
// so the effective weight is unchanged at the moment of reparameterization.
template <typename T>
void weight_norm_reparam(Parameter<T>& p, std::int64_t axis) {
  if (p.weight_normed) throw ContractError(strcat_("weight_norm_reparam: ", p.name, " already reparameterized"));
  const Tensor<T>& w = p.value;
  const std::int64_t n = w.dim(static_cast<size_t>(axis));
  std::int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < static_cast<size_t>(axis); ++i) outer *= w.dim(i);
  for (size_t i = static_cast<size_t>(axis) + 1; i < w.rank(); ++i) inner *= w.dim(i);

  auto g = Tensor<T>::zeros({n});
  for (std::int64_t o = 0; o < n; ++o) {
    T acc = 0;
    for (std::int64_t a = 0; a < outer; ++a) {
      const T* s = w.data() + (a * n + o) * inner;
      for (std::int64_t b = 0; b < inner; ++b) acc += s[b] * s[b];
    }
    g.data()[o] = std::sqrt(acc);
  }

  p.weight_normed = true;
  p.norm_axis = axis;
  p.direction = w.detach();
  p.direction.set_requires_grad(true);
  p.magnitude = std::move(g);
  p.magnitude.set_requires_grad(true);
  p.value = Tensor<T>();
}

template <typename T>
std::vector<NamedTensor<T>> collect_trainables(const std::vector<Parameter<T>*>& params) {
  std::vector<NamedTensor<T>> out;
  for (auto* p : params) p->collect(out);
  return out;
}

template <typename T>
void zero_grads(const std::vector<NamedTensor<T>>& trainables) {
  for (const auto& nt : trainables) nt.tensor->zero_grad();
}

template <typename T>
std::int64_t count_values(const std::vector<NamedTensor<T>>& trainables) {
  std::int64_t n = 0;
  for (const auto& nt : trainables) n += nt.tensor->numel();
  return n;
}

}  // namespace vocgan
