#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vocgan/parallel.hpp"

// Raw strided-array kernels behind the autodiff ops. Convolutions with
// stride > 1 are evaluated in polyphase form: the strided operand is split
// into `stride` contiguous sub-rows so every inner loop is a unit-stride
// axpy/dot that the compiler can vectorize without reassociating sums.
// Each output element is accumulated by one thread in one fixed order, so
// results do not depend on the thread count.

namespace vocgan::kernels {

using std::int64_t;

template <typename T>
inline void axpy(T* __restrict dst, const T* __restrict src, T a, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

// Up to four kernel taps fused into one pass over the row: for l in [lo, hi)
// dst[l] += sum_k w[k] * src[l + off[k]]. Caller guarantees all taps are in
// range on [lo, hi).
template <typename T, int TAPS>
inline void axpy_taps(T* __restrict dst, const T* src, const int64_t* off, const T* w, int64_t lo,
                      int64_t hi) {
  static_assert(TAPS >= 1 && TAPS <= 4);
  const T* __restrict s0 = src + off[0];
  const T* __restrict s1 = src + off[TAPS > 1 ? 1 : 0];
  const T* __restrict s2 = src + off[TAPS > 2 ? 2 : 0];
  const T* __restrict s3 = src + off[TAPS > 3 ? 3 : 0];
  const T w0 = w[0], w1 = TAPS > 1 ? w[1] : T(0), w2 = TAPS > 2 ? w[2] : T(0),
          w3 = TAPS > 3 ? w[3] : T(0);
  for (int64_t i = lo; i < hi; ++i) {
    T acc = w0 * s0[i];
    if constexpr (TAPS > 1) acc += w1 * s1[i];
    if constexpr (TAPS > 2) acc += w2 * s2[i];
    if constexpr (TAPS > 3) acc += w3 * s3[i];
    dst[i] += acc;
  }
}

// Tap-fused correlation: acc[k] += sum_l a[l] * b[l + off[k]] on [lo, hi).
template <typename T, int TAPS>
inline void dot_taps(const T* __restrict a, const T* b, const int64_t* off, T* acc, int64_t lo,
                     int64_t hi) {
  static_assert(TAPS >= 1 && TAPS <= 4);
  const T* __restrict b0 = b + off[0];
  const T* __restrict b1 = b + off[TAPS > 1 ? 1 : 0];
  const T* __restrict b2 = b + off[TAPS > 2 ? 2 : 0];
  const T* __restrict b3 = b + off[TAPS > 3 ? 3 : 0];
  T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  for (int64_t i = lo; i < hi; ++i) {
    const T v = a[i];
    a0 += v * b0[i];
    if constexpr (TAPS > 1) a1 += v * b1[i];
    if constexpr (TAPS > 2) a2 += v * b2[i];
    if constexpr (TAPS > 3) a3 += v * b3[i];
  }
  acc[0] += a0;
  if constexpr (TAPS > 1) acc[1] += a1;
  if constexpr (TAPS > 2) acc[2] += a2;
  if constexpr (TAPS > 3) acc[3] += a3;
}

// Row update dst[l] += sum_k w[k]*src[l+off[k]], fused in blocks of four
// taps over the valid interior, per-tap guarded on the edges.
template <typename T>
inline void conv_row_update(T* dst, const T* src, const std::vector<int64_t>& off,
                            const T* w, int64_t K, int64_t t0, int64_t t1, int64_t src_len) {
  // interior of the tile where every tap stays in bounds
  int64_t lo = t0, hi = t1;
  for (int64_t k = 0; k < K; ++k) {
    lo = std::max(lo, -off[static_cast<size_t>(k)]);
    hi = std::min(hi, src_len - off[static_cast<size_t>(k)]);
  }
  if (hi < lo) hi = lo;
  for (int64_t k = 0; k < K; k += 4) {
    const int taps = static_cast<int>(std::min<int64_t>(4, K - k));
    const int64_t* o = off.data() + k;
    const T* wk = w + k;
    switch (taps) {
      case 4: axpy_taps<T, 4>(dst, src, o, wk, lo, hi); break;
      case 3: axpy_taps<T, 3>(dst, src, o, wk, lo, hi); break;
      case 2: axpy_taps<T, 2>(dst, src, o, wk, lo, hi); break;
      default: axpy_taps<T, 1>(dst, src, o, wk, lo, hi); break;
    }
  }
  // edges, one tap at a time
  for (int64_t k = 0; k < K; ++k) {
    const int64_t o = off[static_cast<size_t>(k)];
    const int64_t elo = std::max(t0, -o), ehi = std::min(t1, src_len - o);
    for (int64_t i = elo; i < std::min(lo, ehi); ++i) dst[i] += w[k] * src[i + o];
    for (int64_t i = std::max(hi, elo); i < ehi; ++i) dst[i] += w[k] * src[i + o];
  }
}

// Correlation acc[k] += sum_l a[l]*b[l+off[k]] with the same blocking.
template <typename T>
inline void corr_row_update(const T* a, const T* b, const std::vector<int64_t>& off, T* acc,
                            int64_t K, int64_t t0, int64_t t1, int64_t b_len) {
  int64_t lo = t0, hi = t1;
  for (int64_t k = 0; k < K; ++k) {
    lo = std::max(lo, -off[static_cast<size_t>(k)]);
    hi = std::min(hi, b_len - off[static_cast<size_t>(k)]);
  }
  if (hi < lo) hi = lo;
  for (int64_t k = 0; k < K; k += 4) {
    const int taps = static_cast<int>(std::min<int64_t>(4, K - k));
    const int64_t* o = off.data() + k;
    switch (taps) {
      case 4: dot_taps<T, 4>(a, b, o, acc + k, lo, hi); break;
      case 3: dot_taps<T, 3>(a, b, o, acc + k, lo, hi); break;
      case 2: dot_taps<T, 2>(a, b, o, acc + k, lo, hi); break;
      default: dot_taps<T, 1>(a, b, o, acc + k, lo, hi); break;
    }
  }
  for (int64_t k = 0; k < K; ++k) {
    const int64_t o = off[static_cast<size_t>(k)];
    const int64_t elo = std::max(t0, -o), ehi = std::min(t1, b_len - o);
    T tail = 0;
    for (int64_t i = elo; i < std::min(lo, ehi); ++i) tail += a[i] * b[i + o];
    for (int64_t i = std::max(hi, elo); i < ehi; ++i) tail += a[i] * b[i + o];
    acc[k] += tail;
  }
}

// Fixed-order dot product with four independent accumulators.
template <typename T>
inline T dot4(const T* __restrict a, const T* __restrict b, int64_t n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

inline int64_t conv_out_len(int64_t L, int64_t K, int64_t stride, int64_t pad, int64_t dil) {
  return (L + 2 * pad - dil * (K - 1) - 1) / stride + 1;
}

inline int64_t convt_out_len(int64_t L, int64_t K, int64_t stride, int64_t pad) {
  return (L - 1) * stride - 2 * pad + K;
}

// Number of indices i in [0, L) with i % stride == phase.
inline int64_t phase_len(int64_t L, int64_t stride, int64_t phase) {
  int64_t n = L - phase;
  return n <= 0 ? 0 : (n + stride - 1) / stride;
}

// Splits row[i] into ph[e][m] = row[m*stride + e], each phase padded to lp_max.
template <typename T>
inline void split_phases(const T* row, T* ph, int64_t L, int64_t stride, int64_t lp_max) {
  for (int64_t e = 0; e < stride; ++e) {
    T* dst = ph + e * lp_max;
    int64_t lp = phase_len(L, stride, e);
    for (int64_t m = 0; m < lp; ++m) dst[m] = row[m * stride + e];
    for (int64_t m = lp; m < lp_max; ++m) dst[m] = T(0);
  }
}

template <typename T>
inline std::vector<T>& tls_scratch(int slot) {
  thread_local std::vector<T> bufs[4];
  return bufs[slot];
}

// in [B,Cin,L], w [Cout,Cin/groups,K], bias [Cout] or null, out [B,Cout,Lout]
template <typename T>
void conv1d_forward(const T* in, const T* w, const T* bias, T* out, int64_t B, int64_t Cin,
                    int64_t L, int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                    int64_t groups, int64_t Lout) {
  const int64_t cpg_in = Cin / groups;
  const int64_t cpg_out = Cout / groups;

  if (stride == 1) {
    // Tile the time axis and keep the channel loop inside the tile so one
    // cached input tile serves every output channel of the chunk. Chunking
    // never changes per-element accumulation order (tile, ci, k ascending).
    const int64_t tile = std::max<int64_t>(2048, (int64_t(1) << 16) / std::max<int64_t>(1, cpg_in));
    const int64_t co_chunk = 8;
    const int64_t chunks_per_batch = (Cout + co_chunk - 1) / co_chunk;
    std::vector<int64_t> offsets(static_cast<size_t>(K));
    for (int64_t k = 0; k < K; ++k) offsets[static_cast<size_t>(k)] = k * dil - pad;
    parallel_for(B * chunks_per_batch, [&](int64_t job) {
      const int64_t b = job / chunks_per_batch;
      const int64_t co0 = (job % chunks_per_batch) * co_chunk;
      const int64_t co1 = std::min(Cout, co0 + co_chunk);
      for (int64_t co = co0; co < co1; ++co) {
        T* orow = out + (b * Cout + co) * Lout;
        const T bval = bias ? bias[co] : T(0);
        for (int64_t l = 0; l < Lout; ++l) orow[l] = bval;
      }
      for (int64_t t0 = 0; t0 < Lout; t0 += tile) {
        const int64_t t1 = std::min(Lout, t0 + tile);
        for (int64_t co = co0; co < co1; ++co) {
          const int64_t g = co / cpg_out;
          T* orow = out + (b * Cout + co) * Lout;
          for (int64_t ci = 0; ci < cpg_in; ++ci) {
            const T* irow = in + (b * Cin + g * cpg_in + ci) * L;
            conv_row_update(orow, irow, offsets, w + (co * cpg_in + ci) * K, K, t0, t1, L);
          }
        }
      }
    });
    return;
  }

  if (dil == 1) {
    // Phase-split the input once, then every tap is a unit-stride axpy.
    const int64_t lp_max = (L + stride - 1) / stride;
    std::vector<T> phases(static_cast<size_t>(B * Cin * stride * lp_max));
    parallel_for(B * Cin, [&](int64_t bc) {
      split_phases(in + bc * L, phases.data() + bc * stride * lp_max, L, stride, lp_max);
    });
    parallel_for(B * Cout, [&](int64_t bc) {
      const int64_t b = bc / Cout, co = bc % Cout;
      const int64_t g = co / cpg_out;
      T* orow = out + (b * Cout + co) * Lout;
      const T bval = bias ? bias[co] : T(0);
      for (int64_t l = 0; l < Lout; ++l) orow[l] = bval;
      for (int64_t ci = 0; ci < cpg_in; ++ci) {
        const T* ph = phases.data() + (b * Cin + g * cpg_in + ci) * stride * lp_max;
        const T* wrow = w + (co * cpg_in + ci) * K;
        for (int64_t k = 0; k < K; ++k) {
          int64_t d = k - pad;
          int64_t e = d % stride;
          if (e < 0) e += stride;
          const int64_t q = (d - e) / stride;
          const int64_t lp = phase_len(L, stride, e);
          const int64_t lo = std::max<int64_t>(0, -q);
          const int64_t hi = std::min(Lout, lp - q);
          if (hi > lo) axpy(orow + lo, ph + e * lp_max + lo + q, wrow[k], hi - lo);
        }
      }
    });
    return;
  }

  // stride > 1 with dilation: plain gather (not used by the built-in models).
  parallel_for(B * Cout, [&](int64_t bc) {
    const int64_t b = bc / Cout, co = bc % Cout;
    const int64_t g = co / cpg_out;
    T* orow = out + (b * Cout + co) * Lout;
    for (int64_t l = 0; l < Lout; ++l) {
      T acc = bias ? bias[co] : T(0);
      for (int64_t ci = 0; ci < cpg_in; ++ci) {
        const T* irow = in + (b * Cin + g * cpg_in + ci) * L;
        const T* wrow = w + (co * cpg_in + ci) * K;
        for (int64_t k = 0; k < K; ++k) {
          const int64_t i = l * stride + k * dil - pad;
          if (i >= 0 && i < L) acc += wrow[k] * irow[i];
        }
      }
      orow[l] = acc;
    }
  });
}

template <typename T>
void conv1d_backward_input(T* gin, const T* gout, const T* w, int64_t B, int64_t Cin, int64_t L,
                           int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                           int64_t groups, int64_t Lout) {
  const int64_t cpg_in = Cin / groups;
  const int64_t cpg_out = Cout / groups;

  if (stride == 1) {
    const int64_t tile = std::max<int64_t>(2048, (int64_t(1) << 16) / std::max<int64_t>(1, cpg_out));
    const int64_t ci_chunk = 8;
    const int64_t chunks_per_batch = (Cin + ci_chunk - 1) / ci_chunk;
    std::vector<int64_t> offsets(static_cast<size_t>(K));
    for (int64_t k = 0; k < K; ++k) offsets[static_cast<size_t>(k)] = -(k * dil - pad);
    parallel_for(B * chunks_per_batch, [&](int64_t job) {
      const int64_t b = job / chunks_per_batch;
      const int64_t ci0 = (job % chunks_per_batch) * ci_chunk;
      const int64_t ci1 = std::min(Cin, ci0 + ci_chunk);
      for (int64_t t0 = 0; t0 < L; t0 += tile) {
        const int64_t t1 = std::min(L, t0 + tile);
        for (int64_t ci = ci0; ci < ci1; ++ci) {
          const int64_t g = ci / cpg_in;
          T* grow = gin + (b * Cin + ci) * L;
          for (int64_t co = g * cpg_out; co < (g + 1) * cpg_out; ++co) {
            const T* gorow = gout + (b * Cout + co) * Lout;
            conv_row_update(grow, gorow, offsets, w + (co * cpg_in + (ci - g * cpg_in)) * K, K,
                            t0, t1, Lout);
          }
        }
      }
    });
    return;
  }

  if (dil == 1) {
    const int64_t lp_max = (L + stride - 1) / stride;
    parallel_for(B * Cin, [&](int64_t bc) {
      const int64_t b = bc / Cin, ci = bc % Cin;
      const int64_t g = ci / cpg_in;
      auto& scratch = tls_scratch<T>(0);
      scratch.assign(static_cast<size_t>(stride * lp_max), T(0));
      for (int64_t co = g * cpg_out; co < (g + 1) * cpg_out; ++co) {
        const T* gorow = gout + (b * Cout + co) * Lout;
        const T* wrow = w + (co * cpg_in + (ci - g * cpg_in)) * K;
        for (int64_t k = 0; k < K; ++k) {
          int64_t d = k - pad;
          int64_t e = d % stride;
          if (e < 0) e += stride;
          const int64_t q = (d - e) / stride;
          const int64_t lp = phase_len(L, stride, e);
          const int64_t lo = std::max<int64_t>(0, -q);
          const int64_t hi = std::min(Lout, lp - q);
          if (hi > lo) axpy(scratch.data() + e * lp_max + lo + q, gorow + lo, wrow[k], hi - lo);
        }
      }
      T* grow = gin + (b * Cin + ci) * L;
      for (int64_t e = 0; e < stride; ++e) {
        const int64_t lp = phase_len(L, stride, e);
        const T* ph = scratch.data() + e * lp_max;
        for (int64_t m = 0; m < lp; ++m) grow[m * stride + e] += ph[m];
      }
    });
    return;
  }

  parallel_for(B * Cin, [&](int64_t bc) {
    const int64_t b = bc / Cin, ci = bc % Cin;
    const int64_t g = ci / cpg_in;
    T* grow = gin + (b * Cin + ci) * L;
    for (int64_t co = g * cpg_out; co < (g + 1) * cpg_out; ++co) {
      const T* gorow = gout + (b * Cout + co) * Lout;
      const T* wrow = w + (co * cpg_in + (ci - g * cpg_in)) * K;
      for (int64_t l = 0; l < Lout; ++l) {
        for (int64_t k = 0; k < K; ++k) {
          const int64_t i = l * stride + k * dil - pad;
          if (i >= 0 && i < L) grow[i] += wrow[k] * gorow[l];
        }
      }
    }
  });
}

template <typename T>
void conv1d_backward_weight(T* gw, T* gb, const T* in, const T* gout, int64_t B, int64_t Cin,
                            int64_t L, int64_t Cout, int64_t K, int64_t stride, int64_t pad,
                            int64_t dil, int64_t groups, int64_t Lout) {
  const int64_t cpg_in = Cin / groups;
  const int64_t cpg_out = Cout / groups;

  std::vector<T> phases;
  int64_t lp_max = 0;
  const bool use_phases = stride > 1 && dil == 1;
  if (use_phases) {
    lp_max = (L + stride - 1) / stride;
    phases.resize(static_cast<size_t>(B * Cin * stride * lp_max));
    parallel_for(B * Cin, [&](int64_t bc) {
      split_phases(in + bc * L, phases.data() + bc * stride * lp_max, L, stride, lp_max);
    });
  }

  if (stride == 1) {
    // tiled: a cached slice of g_out serves every (ci, k) accumulator
    const int64_t tile = std::max<int64_t>(2048, (int64_t(1) << 16) / std::max<int64_t>(1, cpg_in));
    std::vector<int64_t> offsets(static_cast<size_t>(K));
    for (int64_t k = 0; k < K; ++k) offsets[static_cast<size_t>(k)] = k * dil - pad;
    parallel_for(Cout, [&](int64_t co) {
      const int64_t g = co / cpg_out;
      std::vector<T> acc(static_cast<size_t>(cpg_in * K), T(0));
      for (int64_t b = 0; b < B; ++b) {
        const T* gorow = gout + (b * Cout + co) * Lout;
        for (int64_t t0 = 0; t0 < Lout; t0 += tile) {
          const int64_t t1 = std::min(Lout, t0 + tile);
          for (int64_t ci = 0; ci < cpg_in; ++ci) {
            const T* irow = in + (b * Cin + g * cpg_in + ci) * L;
            corr_row_update(gorow, irow, offsets, acc.data() + ci * K, K, t0, t1, L);
          }
        }
      }
      T* gwrow = gw + co * cpg_in * K;
      for (int64_t i = 0; i < cpg_in * K; ++i) gwrow[i] += acc[static_cast<size_t>(i)];
    });
  } else {
  parallel_for(Cout, [&](int64_t co) {
    const int64_t g = co / cpg_out;
    for (int64_t ci = 0; ci < cpg_in; ++ci) {
      T* gwrow = gw + (co * cpg_in + ci) * K;
      for (int64_t k = 0; k < K; ++k) {
        T acc = 0;
        for (int64_t b = 0; b < B; ++b) {
          const T* gorow = gout + (b * Cout + co) * Lout;
          if (use_phases) {
            int64_t d = k - pad;
            int64_t e = d % stride;
            if (e < 0) e += stride;
            const int64_t q = (d - e) / stride;
            const int64_t lp = phase_len(L, stride, e);
            const int64_t lo = std::max<int64_t>(0, -q);
            const int64_t hi = std::min(Lout, lp - q);
            const T* ph = phases.data() + (b * Cin + g * cpg_in + ci) * stride * lp_max;
            if (hi > lo) acc += dot4(gorow + lo, ph + e * lp_max + lo + q, hi - lo);
          } else {
            const T* irow = in + (b * Cin + g * cpg_in + ci) * L;
            for (int64_t l = 0; l < Lout; ++l) {
              const int64_t i = l * stride + k * dil - pad;
              if (i >= 0 && i < L) acc += gorow[l] * irow[i];
            }
          }
        }
        gwrow[k] += acc;
      }
    }
  });
  }

  if (gb) {
    for (int64_t co = 0; co < Cout; ++co) {
      T acc = 0;
      for (int64_t b = 0; b < B; ++b) {
        const T* gorow = gout + (b * Cout + co) * Lout;
        for (int64_t l = 0; l < Lout; ++l) acc += gorow[l];
      }
      gb[co] += acc;
    }
  }
}

// in [B,Cin,L], w [Cin,Cout,K], out [B,Cout,Lout]
template <typename T>
void convt1d_forward(const T* in, const T* w, const T* bias, T* out, int64_t B, int64_t Cin,
                     int64_t L, int64_t Cout, int64_t K, int64_t stride, int64_t pad,
                     int64_t Lout) {
  const int64_t lp_max = (Lout + stride - 1) / stride;
  parallel_for(B * Cout, [&](int64_t bc) {
    const int64_t b = bc / Cout, co = bc % Cout;
    auto& scratch = tls_scratch<T>(1);
    scratch.assign(static_cast<size_t>(stride * lp_max), T(0));
    for (int64_t ci = 0; ci < Cin; ++ci) {
      const T* irow = in + (b * Cin + ci) * L;
      const T* wrow = w + (ci * Cout + co) * K;
      for (int64_t k = 0; k < K; ++k) {
        // out[i*stride + k - pad] += w*in[i] -> phase e, position i + q
        int64_t d = k - pad;
        int64_t e = d % stride;
        if (e < 0) e += stride;
        const int64_t q = (d - e) / stride;
        const int64_t lp = phase_len(Lout, stride, e);
        const int64_t lo = std::max<int64_t>(0, -q);
        const int64_t hi = std::min(L, lp - q);
        if (hi > lo) axpy(scratch.data() + e * lp_max + lo + q, irow + lo, wrow[k], hi - lo);
      }
    }
    T* orow = out + (b * Cout + co) * Lout;
    const T bval = bias ? bias[co] : T(0);
    for (int64_t e = 0; e < stride; ++e) {
      const int64_t lp = phase_len(Lout, stride, e);
      const T* ph = scratch.data() + e * lp_max;
      for (int64_t m = 0; m < lp; ++m) orow[m * stride + e] = bval + ph[m];
    }
  });
}

template <typename T>
void convt1d_backward_input(T* gin, const T* gout, const T* w, int64_t B, int64_t Cin, int64_t L,
                            int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t Lout) {
  const int64_t lp_max = (Lout + stride - 1) / stride;
  std::vector<T> phases(static_cast<size_t>(B * Cout * stride * lp_max));
  parallel_for(B * Cout, [&](int64_t bc) {
    split_phases(gout + bc * Lout, phases.data() + bc * stride * lp_max, Lout, stride, lp_max);
  });
  parallel_for(B * Cin, [&](int64_t bc) {
    const int64_t b = bc / Cin, ci = bc % Cin;
    T* grow = gin + (b * Cin + ci) * L;
    for (int64_t co = 0; co < Cout; ++co) {
      const T* ph_base = phases.data() + (b * Cout + co) * stride * lp_max;
      const T* wrow = w + (ci * Cout + co) * K;
      for (int64_t k = 0; k < K; ++k) {
        int64_t d = k - pad;
        int64_t e = d % stride;
        if (e < 0) e += stride;
        const int64_t q = (d - e) / stride;
        const int64_t lp = phase_len(Lout, stride, e);
        const int64_t lo = std::max<int64_t>(0, -q);
        const int64_t hi = std::min(L, lp - q);
        if (hi > lo) axpy(grow + lo, ph_base + e * lp_max + lo + q, wrow[k], hi - lo);
      }
    }
  });
}

template <typename T>
void convt1d_backward_weight(T* gw, T* gb, const T* in, const T* gout, int64_t B, int64_t Cin,
                             int64_t L, int64_t Cout, int64_t K, int64_t stride, int64_t pad,
                             int64_t Lout) {
  const int64_t lp_max = (Lout + stride - 1) / stride;
  std::vector<T> phases(static_cast<size_t>(B * Cout * stride * lp_max));
  parallel_for(B * Cout, [&](int64_t bc) {
    split_phases(gout + bc * Lout, phases.data() + bc * stride * lp_max, Lout, stride, lp_max);
  });
  parallel_for(Cin * Cout, [&](int64_t cc) {
    const int64_t ci = cc / Cout, co = cc % Cout;
    T* gwrow = gw + (ci * Cout + co) * K;
    for (int64_t k = 0; k < K; ++k) {
      int64_t d = k - pad;
      int64_t e = d % stride;
      if (e < 0) e += stride;
      const int64_t q = (d - e) / stride;
      const int64_t lp = phase_len(Lout, stride, e);
      const int64_t lo = std::max<int64_t>(0, -q);
      T acc = 0;
      for (int64_t b = 0; b < B; ++b) {
        const int64_t hi = std::min(L, lp - q);
        const T* irow = in + (b * Cin + ci) * L;
        const T* ph = phases.data() + (b * Cout + co) * stride * lp_max + e * lp_max;
        if (hi > lo) acc += dot4(irow + lo, ph + lo + q, hi - lo);
      }
      gwrow[k] += acc;
    }
  });
  if (gb) {
    for (int64_t co = 0; co < Cout; ++co) {
      T acc = 0;
      for (int64_t b = 0; b < B; ++b) {
        const T* gorow = gout + (b * Cout + co) * Lout;
        for (int64_t l = 0; l < Lout; ++l) acc += gorow[l];
      }
      gb[co] += acc;
    }
  }
}

// Average pooling, zero-padded, pad samples included in the divisor.
template <typename T>
void avgpool1d_forward(const T* in, T* out, int64_t rows, int64_t L, int64_t K, int64_t stride,
                       int64_t pad, int64_t Lout) {
  const T inv = T(1) / static_cast<T>(K);
  parallel_for(rows, [&](int64_t r) {
    const T* irow = in + r * L;
    T* orow = out + r * Lout;
    for (int64_t l = 0; l < Lout; ++l) {
      T acc = 0;
      const int64_t base = l * stride - pad;
      const int64_t jlo = std::max<int64_t>(0, -base);
      const int64_t jhi = std::min(K, L - base);
      for (int64_t j = jlo; j < jhi; ++j) acc += irow[base + j];
      orow[l] = acc * inv;
    }
  });
}

template <typename T>
void avgpool1d_backward(T* gin, const T* gout, int64_t rows, int64_t L, int64_t K, int64_t stride,
                        int64_t pad, int64_t Lout) {
  const T inv = T(1) / static_cast<T>(K);
  parallel_for(rows, [&](int64_t r) {
    T* grow = gin + r * L;
    const T* gorow = gout + r * Lout;
    for (int64_t l = 0; l < Lout; ++l) {
      const T g = gorow[l] * inv;
      const int64_t base = l * stride - pad;
      const int64_t jlo = std::max<int64_t>(0, -base);
      const int64_t jhi = std::min(K, L - base);
      for (int64_t j = jlo; j < jhi; ++j) grow[base + j] += g;
    }
  });
}

}  // namespace vocgan::kernels
