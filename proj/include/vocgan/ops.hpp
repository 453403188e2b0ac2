#pragma once

#include <cmath>
#include <cstdint>

#include "vocgan/kernels.hpp"
#include "vocgan/tensor.hpp"

namespace vocgan {

namespace detail {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return;
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  size_t axis = 0;
  while (axis < sa.size() && axis < sb.size() && sa[axis] == sb[axis]) ++axis;
  throw ShapeError(strcat_(op, ": shape mismatch at axis ", axis, ": ", shape_str(sa), " vs ",
                           shape_str(sb)));
}

template <typename T>
void check_rank(const Tensor<T>& t, size_t rank, const char* op, const char* name) {
  if (t.rank() != rank)
    throw ShapeError(strcat_(op, ": ", name, " must have rank ", rank, ", got shape ",
                             shape_str(t.shape())));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  const T* y = b.data();
  T* o = out.data();
  parallel_ranges(out.numel(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) o[i] = x[i] + y[i];
  });
  autodiff::wire(out, {a, b}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    auto* pb = b.raw();
    return [self, pa, pb] {
      if (pa->wants_grad()) {
        pa->ensure_grad();
        kernels::axpy(pa->grad.data(), self->grad.data(), T(1), self->numel());
      }
      if (pb->wants_grad()) {
        pb->ensure_grad();
        kernels::axpy(pb->grad.data(), self->grad.data(), T(1), self->numel());
      }
    };
  });
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  const T* y = b.data();
  T* o = out.data();
  parallel_ranges(out.numel(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) o[i] = x[i] - y[i];
  });
  autodiff::wire(out, {a, b}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    auto* pb = b.raw();
    return [self, pa, pb] {
      if (pa->wants_grad()) {
        pa->ensure_grad();
        kernels::axpy(pa->grad.data(), self->grad.data(), T(1), self->numel());
      }
      if (pb->wants_grad()) {
        pb->ensure_grad();
        kernels::axpy(pb->grad.data(), self->grad.data(), T(-1), self->numel());
      }
    };
  });
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  const T* y = b.data();
  T* o = out.data();
  parallel_ranges(out.numel(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) o[i] = x[i] * y[i];
  });
  autodiff::wire(out, {a, b}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    auto* pb = b.raw();
    return [self, pa, pb] {
      const std::int64_t n = self->numel();
      if (pa->wants_grad()) {
        pa->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i] * pb->data[i];
      }
      if (pb->wants_grad()) {
        pb->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) pb->grad[i] += self->grad[i] * pa->data[i];
      }
    };
  });
  return out;
}

// ---------------------------------------------------------------------------
// elementwise unary
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) o[i] = x[i] + c;
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      pa->ensure_grad();
      kernels::axpy(pa->grad.data(), self->grad.data(), T(1), self->numel());
    };
  });
  return out;
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) o[i] = x[i] * c;
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, c] {
      pa->ensure_grad();
      kernels::axpy(pa->grad.data(), self->grad.data(), c, self->numel());
    };
  });
  return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope = T(0.2)) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  parallel_ranges(out.numel(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) o[i] = x[i] > T(0) ? x[i] : slope * x[i];
  });
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, slope] {
      pa->ensure_grad();
      const std::int64_t n = self->numel();
      parallel_ranges(n, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i)
          pa->grad[i] += self->grad[i] * (pa->data[i] > T(0) ? T(1) : slope);
      });
    };
  });
  return out;
}

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& a) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  parallel_ranges(out.numel(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) o[i] = std::tanh(x[i]);
  });
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      pa->ensure_grad();
      const std::int64_t n = self->numel();
      for (std::int64_t i = 0; i < n; ++i)
        pa->grad[i] += self->grad[i] * (T(1) - self->data[i] * self->data[i]);
    };
  });
  return out;
}

template <typename T>
Tensor<T> abs_val(const Tensor<T>& a) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) o[i] = std::abs(x[i]);
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      pa->ensure_grad();
      const std::int64_t n = self->numel();
      for (std::int64_t i = 0; i < n; ++i) {
        const T x = pa->data[i];
        const T s = x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0));
        pa->grad[i] += self->grad[i] * s;
      }
    };
  });
  return out;
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) o[i] = x[i] * x[i];
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      pa->ensure_grad();
      const std::int64_t n = self->numel();
      for (std::int64_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i] * T(2) * pa->data[i];
    };
  });
  return out;
}

template <typename T>
Tensor<T> log_val(const Tensor<T>& a) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    if (!(x[i] > T(0)))
      throw DomainError(strcat_("log: non-positive value ", x[i], " at flat index ", i));
    o[i] = std::log(x[i]);
  }
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      const std::int64_t n = self->numel();
      pa->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i] / pa->data[i];
    };
  });
  return out;
}

template <typename T>
Tensor<T> sqrt_val(const Tensor<T>& a) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    if (x[i] < T(0))
      throw DomainError(strcat_("sqrt: negative value ", x[i], " at flat index ", i));
    o[i] = std::sqrt(x[i]);
  }
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      const std::int64_t n = self->numel();
      pa->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i)
        pa->grad[i] += self->grad[i] * T(0.5) / self->data[i];
    };
  });
  return out;
}

// max(x, floor); gradient passes where x >= floor
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T floor) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* x = a.data();
  T* o = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) o[i] = x[i] < floor ? floor : x[i];
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, floor] {
      pa->ensure_grad();
      const std::int64_t n = self->numel();
      for (std::int64_t i = 0; i < n; ++i)
        if (pa->data[i] >= floor) pa->grad[i] += self->grad[i];
    };
  });
  return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  auto out = Tensor<T>::zeros({1});
  const T* x = a.data();
  T acc = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += x[i];
  out.data()[0] = acc;
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa] {
      pa->ensure_grad();
      const T g = self->grad[0];
      for (auto& v : pa->grad) v += g;
    };
  });
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) throw ContractError("mean: empty tensor");
  auto out = Tensor<T>::zeros({1});
  const T* x = a.data();
  T acc = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += x[i];
  const T inv = T(1) / static_cast<T>(a.numel());
  out.data()[0] = acc * inv;
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, inv] {
      pa->ensure_grad();
      const T g = self->grad[0] * inv;
      for (auto& v : pa->grad) v += g;
    };
  });
  return out;
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

// Reflection padding on the time axis, edge not repeated. Pads larger than
// the input keep bouncing between the ends (single-sample rows pad with that
// sample), so one-frame inputs still flow through the reflect-padded convs.
template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& a, std::int64_t amount) {
  detail::check_rank(a, 3, "pad_reflect", "input");
  const std::int64_t B = a.dim(0), C = a.dim(1), L = a.dim(2);
  if (amount < 0) throw ContractError("pad_reflect: negative amount");
  const std::int64_t Lo = L + 2 * amount;
  auto out = Tensor<T>::zeros({B, C, Lo});
  auto reflect = [L](std::int64_t j) {
    if (L == 1) return std::int64_t{0};
    while (j < 0 || j >= L) {
      if (j < 0) j = -j;
      if (j >= L) j = 2 * L - 2 - j;
    }
    return j;
  };
  for (std::int64_t r = 0; r < B * C; ++r) {
    const T* irow = a.data() + r * L;
    T* orow = out.data() + r * Lo;
    for (std::int64_t i = 0; i < Lo; ++i) orow[i] = irow[reflect(i - amount)];
  }
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, B, C, L, Lo, amount, reflect] {
      pa->ensure_grad();
      for (std::int64_t r = 0; r < B * C; ++r) {
        T* grow = pa->grad.data() + r * L;
        const T* gorow = self->grad.data() + r * Lo;
        for (std::int64_t i = 0; i < Lo; ++i) grow[reflect(i - amount)] += gorow[i];
      }
    };
  });
  return out;
}

// Slice [start, start+len) along the time axis.
template <typename T>
Tensor<T> narrow_time(const Tensor<T>& a, std::int64_t start, std::int64_t len) {
  detail::check_rank(a, 3, "narrow_time", "input");
  const std::int64_t B = a.dim(0), C = a.dim(1), L = a.dim(2);
  if (start < 0 || len < 0 || start + len > L)
    throw ShapeError(strcat_("narrow_time: [", start, ",", start + len, ") out of length ", L));
  auto out = Tensor<T>::zeros({B, C, len});
  for (std::int64_t r = 0; r < B * C; ++r) {
    const T* irow = a.data() + r * L + start;
    T* orow = out.data() + r * len;
    for (std::int64_t i = 0; i < len; ++i) orow[i] = irow[i];
  }
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, B, C, L, len, start] {
      pa->ensure_grad();
      for (std::int64_t r = 0; r < B * C; ++r) {
        T* grow = pa->grad.data() + r * L + start;
        const T* gorow = self->grad.data() + r * len;
        for (std::int64_t i = 0; i < len; ++i) grow[i] += gorow[i];
      }
    };
  });
  return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_rank(a, 3, "concat_channels", "lhs");
  detail::check_rank(b, 3, "concat_channels", "rhs");
  if (a.dim(0) != b.dim(0))
    throw ShapeError(strcat_("concat_channels: batch mismatch at axis 0: ", a.dim(0), " vs ",
                             b.dim(0)));
  if (a.dim(2) != b.dim(2))
    throw ShapeError(strcat_("concat_channels: length mismatch at axis 2: ", a.dim(2), " vs ",
                             b.dim(2)));
  const std::int64_t B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), L = a.dim(2);
  auto out = Tensor<T>::zeros({B, Ca + Cb, L});
  for (std::int64_t bi = 0; bi < B; ++bi) {
    std::copy_n(a.data() + bi * Ca * L, Ca * L, out.data() + bi * (Ca + Cb) * L);
    std::copy_n(b.data() + bi * Cb * L, Cb * L, out.data() + (bi * (Ca + Cb) + Ca) * L);
  }
  autodiff::wire(out, {a, b}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    auto* pb = b.raw();
    return [self, pa, pb, B, Ca, Cb, L] {
      for (std::int64_t bi = 0; bi < B; ++bi) {
        const T* g = self->grad.data() + bi * (Ca + Cb) * L;
        if (pa->wants_grad()) {
          pa->ensure_grad();
          kernels::axpy(pa->grad.data() + bi * Ca * L, g, T(1), Ca * L);
        }
        if (pb->wants_grad()) {
          pb->ensure_grad();
          kernels::axpy(pb->grad.data() + bi * Cb * L, g + Ca * L, T(1), Cb * L);
        }
      }
    };
  });
  return out;
}

// Nearest-neighbor resize along the time axis; source index floor(j*Lin/Lout).
template <typename T>
Tensor<T> nearest_resize(const Tensor<T>& a, std::int64_t out_len) {
  detail::check_rank(a, 3, "nearest_resize", "input");
  if (out_len <= 0) throw ContractError("nearest_resize: out_len must be positive");
  const std::int64_t B = a.dim(0), C = a.dim(1), L = a.dim(2);
  auto out = Tensor<T>::zeros({B, C, out_len});
  for (std::int64_t r = 0; r < B * C; ++r) {
    const T* irow = a.data() + r * L;
    T* orow = out.data() + r * out_len;
    for (std::int64_t j = 0; j < out_len; ++j) orow[j] = irow[j * L / out_len];
  }
  autodiff::wire(out, {a}, [&](TensorNode<T>* self) {
    auto* pa = a.raw();
    return [self, pa, B, C, L, out_len] {
      pa->ensure_grad();
      for (std::int64_t r = 0; r < B * C; ++r) {
        T* grow = pa->grad.data() + r * L;
        const T* gorow = self->grad.data() + r * out_len;
        for (std::int64_t j = 0; j < out_len; ++j) grow[j * L / out_len] += gorow[j];
      }
    };
  });
  return out;
}

// ---------------------------------------------------------------------------
// convolutions / pooling
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::int64_t stride = 1, std::int64_t padding = 0, std::int64_t dilation = 1,
                 std::int64_t groups = 1) {
  detail::check_rank(input, 3, "conv1d", "input");
  detail::check_rank(weight, 3, "conv1d", "weight");
  const std::int64_t B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
  const std::int64_t Cout = weight.dim(0), K = weight.dim(2);
  if (stride < 1 || dilation < 1 || groups < 1 || padding < 0)
    throw ContractError("conv1d: stride/dilation/groups must be >= 1, padding >= 0");
  if (Cin % groups != 0)
    throw ShapeError(strcat_("conv1d: input axis 1 (", Cin, ") not divisible by groups ", groups));
  if (Cout % groups != 0)
    throw ShapeError(strcat_("conv1d: weight axis 0 (", Cout, ") not divisible by groups ",
                             groups));
  if (weight.dim(1) != Cin / groups)
    throw ShapeError(strcat_("conv1d: weight axis 1 is ", weight.dim(1), ", expected Cin/groups = ",
                             Cin / groups));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != Cout))
    throw ShapeError(strcat_("conv1d: bias axis 0 is ",
                             bias.defined() ? bias.dim(0) : 0, ", expected ", Cout));
  if (L + 2 * padding < dilation * (K - 1) + 1)
    throw ShapeError(strcat_("conv1d: input axis 2 too short: L=", L, " pad=", padding,
                             " dil=", dilation, " K=", K));
  const std::int64_t Lout = kernels::conv_out_len(L, K, stride, padding, dilation);

  auto out = Tensor<T>::zeros({B, Cout, Lout});
  kernels::conv1d_forward(input.data(), weight.data(), bias.defined() ? bias.data() : nullptr,
                          out.data(), B, Cin, L, Cout, K, stride, padding, dilation, groups, Lout);

  auto wire_body = [&](TensorNode<T>* self) {
    auto* pin = input.raw();
    auto* pw = weight.raw();
    TensorNode<T>* pb = bias.defined() ? bias.raw() : nullptr;
    return [self, pin, pw, pb, B, Cin, L, Cout, K, stride, padding, dilation, groups, Lout] {
      const T* g = self->grad.data();
      if (pin->wants_grad()) {
        pin->ensure_grad();
        kernels::conv1d_backward_input(pin->grad.data(), g, pw->data.data(), B, Cin, L, Cout, K,
                                       stride, padding, dilation, groups, Lout);
      }
      const bool wg = pw->wants_grad();
      const bool bg = pb && pb->wants_grad();
      if (wg || bg) {
        if (wg) pw->ensure_grad();
        if (bg) pb->ensure_grad();
        // weight grad kernel also folds the bias reduction
        std::vector<T> dummy;
        if (!wg) dummy.assign(pw->data.size(), T(0));
        kernels::conv1d_backward_weight(wg ? pw->grad.data() : dummy.data(),
                                        bg ? pb->grad.data() : nullptr, pin->data.data(), g, B,
                                        Cin, L, Cout, K, stride, padding, dilation, groups, Lout);
      }
    };
  };
  if (bias.defined())
    autodiff::wire(out, {input, weight, bias}, wire_body);
  else
    autodiff::wire(out, {input, weight}, wire_body);
  return out;
}

template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::int64_t stride, std::int64_t padding) {
  detail::check_rank(input, 3, "conv_transpose1d", "input");
  detail::check_rank(weight, 3, "conv_transpose1d", "weight");
  const std::int64_t B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
  const std::int64_t Cout = weight.dim(1), K = weight.dim(2);
  if (stride < 1 || padding < 0)
    throw ContractError("conv_transpose1d: stride must be >= 1, padding >= 0");
  if (weight.dim(0) != Cin)
    throw ShapeError(strcat_("conv_transpose1d: weight axis 0 is ", weight.dim(0),
                             ", expected input channels ", Cin));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != Cout))
    throw ShapeError(strcat_("conv_transpose1d: bias axis 0 mismatch, expected ", Cout));
  if (K < stride)
    throw ConfigError(strcat_("conv_transpose1d: kernel ", K, " < stride ", stride,
                              " risks checkerboard artifacts"));
  const std::int64_t Lout = kernels::convt_out_len(L, K, stride, padding);
  if (Lout <= 0) throw ShapeError(strcat_("conv_transpose1d: non-positive output length ", Lout));

  auto out = Tensor<T>::zeros({B, Cout, Lout});
  kernels::convt1d_forward(input.data(), weight.data(), bias.defined() ? bias.data() : nullptr,
                           out.data(), B, Cin, L, Cout, K, stride, padding, Lout);

  auto wire_body = [&](TensorNode<T>* self) {
    auto* pin = input.raw();
    auto* pw = weight.raw();
    TensorNode<T>* pb = bias.defined() ? bias.raw() : nullptr;
    return [self, pin, pw, pb, B, Cin, L, Cout, K, stride, padding, Lout] {
      const T* g = self->grad.data();
      if (pin->wants_grad()) {
        pin->ensure_grad();
        kernels::convt1d_backward_input(pin->grad.data(), g, pw->data.data(), B, Cin, L, Cout, K,
                                        stride, padding, Lout);
      }
      const bool wg = pw->wants_grad();
      const bool bg = pb && pb->wants_grad();
      if (wg || bg) {
        if (wg) pw->ensure_grad();
        if (bg) pb->ensure_grad();
        std::vector<T> dummy;
        if (!wg) dummy.assign(pw->data.size(), T(0));
        kernels::convt1d_backward_weight(wg ? pw->grad.data() : dummy.data(),
                                         bg ? pb->grad.data() : nullptr, pin->data.data(), g, B,
                                         Cin, L, Cout, K, stride, padding, Lout);
      }
    };
  };
  if (bias.defined())
    autodiff::wire(out, {input, weight, bias}, wire_body);
  else
    autodiff::wire(out, {input, weight}, wire_body);
  return out;
}

template <typename T>
Tensor<T> avg_pool1d(const Tensor<T>& input, std::int64_t kernel, std::int64_t stride,
                     std::int64_t padding) {
  detail::check_rank(input, 3, "avg_pool1d", "input");
  const std::int64_t B = input.dim(0), C = input.dim(1), L = input.dim(2);
  if (kernel < 1 || stride < 1 || padding < 0 || padding > kernel / 2)
    throw ContractError("avg_pool1d: invalid kernel/stride/padding");
  if (L + 2 * padding < kernel)
    throw ShapeError(strcat_("avg_pool1d: input axis 2 too short: L=", L, " kernel=", kernel));
  const std::int64_t Lout = kernels::conv_out_len(L, kernel, stride, padding, 1);
  auto out = Tensor<T>::zeros({B, C, Lout});
  kernels::avgpool1d_forward(input.data(), out.data(), B * C, L, kernel, stride, padding, Lout);
  autodiff::wire(out, {input}, [&](TensorNode<T>* self) {
    auto* pin = input.raw();
    return [self, pin, B, C, L, kernel, stride, padding, Lout] {
      pin->ensure_grad();
      kernels::avgpool1d_backward(pin->grad.data(), self->grad.data(), B * C, L, kernel, stride,
                                  padding, Lout);
    };
  });
  return out;
}

// ---------------------------------------------------------------------------
// weight normalization
// ---------------------------------------------------------------------------

// w = g * v / ||v|| with the norm taken per slice along `axis` (the output
// channel dimension: 0 for conv weights, 1 for transposed-conv weights).
template <typename T>
Tensor<T> weight_norm_apply(const Tensor<T>& v, const Tensor<T>& g, std::int64_t axis) {
  if (axis < 0 || static_cast<size_t>(axis) >= v.rank())
    throw ContractError(strcat_("weight_norm_apply: axis ", axis, " out of rank ", v.rank()));
  const std::int64_t n = v.dim(static_cast<size_t>(axis));
  if (g.rank() != 1 || g.dim(0) != n)
    throw ShapeError(strcat_("weight_norm_apply: magnitude axis 0 is ",
                             g.rank() == 1 ? g.dim(0) : -1, ", expected ", n));
  std::int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < static_cast<size_t>(axis); ++i) outer *= v.dim(i);
  for (size_t i = static_cast<size_t>(axis) + 1; i < v.rank(); ++i) inner *= v.dim(i);

  // slice o = { v[a, o, b] : a < outer, b < inner }
  auto slice_reduce = [outer, inner, n](const T* x, const T* y, std::int64_t o) {
    T acc = 0;
    for (std::int64_t a = 0; a < outer; ++a) {
      const T* xs = x + (a * n + o) * inner;
      const T* ys = y + (a * n + o) * inner;
      acc += kernels::dot4(xs, ys, inner);
    }
    return acc;
  };

  std::vector<T> norms(static_cast<size_t>(n));
  for (std::int64_t o = 0; o < n; ++o) {
    norms[static_cast<size_t>(o)] = std::sqrt(slice_reduce(v.data(), v.data(), o));
    if (!(norms[static_cast<size_t>(o)] > T(0)))
      throw DomainError(strcat_("weight_norm_apply: zero direction norm in slice ", o));
  }

  auto out = Tensor<T>::zeros(v.shape());
  for (std::int64_t a = 0; a < outer; ++a) {
    for (std::int64_t o = 0; o < n; ++o) {
      const T scale = g.data()[o] / norms[static_cast<size_t>(o)];
      const T* vs = v.data() + (a * n + o) * inner;
      T* os = out.data() + (a * n + o) * inner;
      for (std::int64_t b = 0; b < inner; ++b) os[b] = scale * vs[b];
    }
  }

  autodiff::wire(out, {v, g}, [&](TensorNode<T>* self) {
    auto* pv = v.raw();
    auto* pg = g.raw();
    return [self, pv, pg, outer, inner, n, norms, slice_reduce] {
      for (std::int64_t o = 0; o < n; ++o) {
        const T norm = norms[static_cast<size_t>(o)];
        const T gv = pg->data[static_cast<size_t>(o)];
        // dot of upstream grad with the direction, per slice
        const T gdotv = slice_reduce(self->grad.data(), pv->data.data(), o);
        if (pg->wants_grad()) {
          pg->ensure_grad();
          pg->grad[static_cast<size_t>(o)] += gdotv / norm;
        }
        if (pv->wants_grad()) {
          pv->ensure_grad();
          const T s1 = gv / norm;
          const T s2 = gv * gdotv / (norm * norm * norm);
          for (std::int64_t a = 0; a < outer; ++a) {
            const std::int64_t base = (a * n + o) * inner;
            for (std::int64_t b = 0; b < inner; ++b)
              pv->grad[base + b] += s1 * self->grad[base + b] - s2 * pv->data[base + b];
          }
        }
      }
    };
  });
  return out;
}

}  // namespace vocgan
