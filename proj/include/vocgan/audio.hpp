#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vocgan/kernels.hpp"
#include "vocgan/wav.hpp"

namespace vocgan {

// One 2x halving pass: average pooling kernel 4, stride 2, padding 1 — the
// same operator the multi-scale discriminator path uses, so ground-truth and
// generated waveforms stay resolution-aligned.
inline std::vector<float> halve_waveform(const std::vector<float>& x) {
  const std::int64_t L = static_cast<std::int64_t>(x.size());
  const std::int64_t Lout = kernels::conv_out_len(L, 4, 2, 1, 1);
  std::vector<float> out(static_cast<size_t>(Lout));
  kernels::avgpool1d_forward(x.data(), out.data(), 1, L, 4, 2, 1, Lout);
  return out;
}

inline Waveform downsample_waveform(const Waveform& w, int k) {
  if (k < 0) throw ContractError(strcat_("downsample_waveform: negative scale ", k));
  Waveform out = w;
  for (int i = 0; i < k; ++i) {
    out.samples = halve_waveform(out.samples);
    out.sample_rate /= 2;
  }
  return out;
}

// Scales so that max |sample| == target. Silence is left untouched.
inline Waveform peak_normalize(const Waveform& w, float target = 0.95f) {
  float peak = 0.0f;
  for (float s : w.samples) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0f) return w;
  Waveform out = w;
  const float scale = target / peak;
  for (float& s : out.samples) s *= scale;
  return out;
}

// Linear-interpolation resampler.
inline Waveform resample_linear(const Waveform& w, int new_rate) {
  if (new_rate <= 0) throw ContractError("resample_linear: rate must be positive");
  if (w.sample_rate == new_rate || w.samples.empty()) {
    Waveform out = w;
    out.sample_rate = new_rate;
    return out;
  }
  const double ratio = static_cast<double>(new_rate) / w.sample_rate;
  const std::int64_t n_out =
      static_cast<std::int64_t>(std::llround(static_cast<double>(w.samples.size()) * ratio));
  Waveform out;
  out.sample_rate = new_rate;
  out.samples.resize(static_cast<size_t>(n_out));
  const std::int64_t n_in = static_cast<std::int64_t>(w.samples.size());
  for (std::int64_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) / ratio;
    const std::int64_t i0 = std::min<std::int64_t>(static_cast<std::int64_t>(pos), n_in - 1);
    const std::int64_t i1 = std::min<std::int64_t>(i0 + 1, n_in - 1);
    const double frac = pos - static_cast<double>(i0);
    out.samples[static_cast<size_t>(i)] = static_cast<float>(
        (1.0 - frac) * w.samples[static_cast<size_t>(i0)] +
        frac * w.samples[static_cast<size_t>(i1)]);
  }
  return out;
}

}  // namespace vocgan
