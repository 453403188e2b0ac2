#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "vocgan/common.hpp"

namespace vocgan {

// Iterative radix-2 FFT with precomputed twiddles and bit-reversal table.
// All sizes this project needs (512/1024/2048 analysis frames) are powers of
// two, so no mixed-radix machinery.
template <typename T>
class Fft {
 public:
  explicit Fft(std::int64_t n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw ContractError(strcat_("Fft: size must be a power of two >= 2, got ", n));
    bitrev_.resize(static_cast<size_t>(n));
    int log2n = 0;
    while ((std::int64_t(1) << log2n) < n) ++log2n;
    for (std::int64_t i = 0; i < n; ++i) {
      std::int64_t r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (std::int64_t(1) << b)) r |= std::int64_t(1) << (log2n - 1 - b);
      bitrev_[static_cast<size_t>(i)] = r;
    }
    twiddles_.resize(static_cast<size_t>(n / 2));
    const double step = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
    for (std::int64_t k = 0; k < n / 2; ++k) {
      const double a = step * static_cast<double>(k);
      twiddles_[static_cast<size_t>(k)] = {static_cast<T>(std::cos(a)),
                                           static_cast<T>(std::sin(a))};
    }
  }

  std::int64_t size() const { return n_; }

  // In-place forward transform.
  void forward(std::complex<T>* a) const {
    permute(a);
    butterflies(a, false);
  }

  // In-place inverse transform including the 1/n scale.
  void inverse(std::complex<T>* a) const {
    permute(a);
    butterflies(a, true);
    const T inv = T(1) / static_cast<T>(n_);
    for (std::int64_t i = 0; i < n_; ++i) a[i] *= inv;
  }

 private:
  void permute(std::complex<T>* a) const {
    for (std::int64_t i = 0; i < n_; ++i) {
      const std::int64_t j = bitrev_[static_cast<size_t>(i)];
      if (i < j) std::swap(a[i], a[j]);
    }
  }

  void butterflies(std::complex<T>* a, bool inverse) const {
    for (std::int64_t len = 2; len <= n_; len <<= 1) {
      const std::int64_t half = len / 2;
      const std::int64_t step = n_ / len;
      for (std::int64_t base = 0; base < n_; base += len) {
        for (std::int64_t j = 0; j < half; ++j) {
          std::complex<T> w = twiddles_[static_cast<size_t>(j * step)];
          if (inverse) w = std::conj(w);
          const std::complex<T> u = a[base + j];
          const std::complex<T> t = w * a[base + j + half];
          a[base + j] = u + t;
          a[base + j + half] = u - t;
        }
      }
    }
  }

  std::int64_t n_;
  std::vector<std::int64_t> bitrev_;
  std::vector<std::complex<T>> twiddles_;
};

}  // namespace vocgan
