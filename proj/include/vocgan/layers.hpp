#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vocgan/params.hpp"
#include "vocgan/rng.hpp"

namespace vocgan {

// Weight init used across both networks: Normal(0, 0.02) weights, zero
// biases, then weight normalization.
inline constexpr double kInitStdev = 0.02;

template <typename T>
struct Conv1dLayer {
  Parameter<T> weight;  // [Cout, Cin/groups, K], weight-normed on axis 0
  Parameter<T> bias;
  std::int64_t stride = 1, pad = 0, dil = 1, groups = 1;
  bool reflect = false;  // reflect-pad the input instead of zero padding

  static Conv1dLayer make(const std::string& name, std::int64_t cin, std::int64_t cout,
                          std::int64_t k, Rng& rng, std::int64_t stride = 1, std::int64_t pad = 0,
                          std::int64_t dil = 1, std::int64_t groups = 1, bool reflect = false) {
    Conv1dLayer layer;
    layer.stride = stride;
    layer.pad = pad;
    layer.dil = dil;
    layer.groups = groups;
    layer.reflect = reflect;
    layer.weight = Parameter<T>::plain(
        name + ".weight", Tensor<T>::randn({cout, cin / groups, k}, rng, static_cast<T>(kInitStdev)));
    weight_norm_reparam(layer.weight, 0);
    layer.bias = Parameter<T>::plain(name + ".bias", Tensor<T>::zeros({cout}));
    return layer;
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> h = x;
    std::int64_t zero_pad = pad;
    if (reflect && pad > 0) {
      h = pad_reflect(h, pad);
      zero_pad = 0;
    }
    return conv1d(h, weight.effective(), bias.value, stride, zero_pad, dil, groups);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

template <typename T>
struct ConvT1dLayer {
  Parameter<T> weight;  // [Cin, Cout, K], weight-normed on axis 1
  Parameter<T> bias;
  std::int64_t stride = 1, pad = 0;

  static ConvT1dLayer make(const std::string& name, std::int64_t cin, std::int64_t cout,
                           std::int64_t k, std::int64_t stride, std::int64_t pad, Rng& rng) {
    ConvT1dLayer layer;
    layer.stride = stride;
    layer.pad = pad;
    layer.weight = Parameter<T>::plain(
        name + ".weight", Tensor<T>::randn({cin, cout, k}, rng, static_cast<T>(kInitStdev)));
    weight_norm_reparam(layer.weight, 1);
    layer.bias = Parameter<T>::plain(name + ".bias", Tensor<T>::zeros({cout}));
    return layer;
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    return conv_transpose1d(x, weight.effective(), bias.value, stride, pad);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

}  // namespace vocgan
