#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "vocgan/fft.hpp"
#include "vocgan/wav.hpp"

namespace vocgan {

struct StftConfig {
  std::int64_t fft_size = 1024;
  std::int64_t win_size = 1024;
  std::int64_t hop = 256;

  void validate() const {
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
      throw ConfigError(strcat_("StftConfig: fft_size must be a power of two, got ", fft_size));
    if (win_size > fft_size)
      throw ConfigError(strcat_("StftConfig: win_size ", win_size, " > fft_size ", fft_size));
    if (hop > win_size) throw ConfigError(strcat_("StftConfig: hop ", hop, " > win_size ", win_size));
    if (hop < 1) throw ConfigError("StftConfig: hop must be >= 1");
  }

  std::int64_t bins() const { return fft_size / 2 + 1; }
  std::int64_t frames_for(std::int64_t samples) const { return 1 + samples / hop; }
};

// Periodic Hann window of length n.
template <typename T = float>
std::vector<T> hann_window(std::int64_t n) {
  std::vector<T> w(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = static_cast<T>(
        0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                             static_cast<double>(n)));
  return w;
}

// Complex spectrogram, logically [bins, frames]; storage is frame-major.
template <typename T>
struct Spectrogram {
  std::int64_t bins = 0;
  std::int64_t frames = 0;
  std::vector<std::complex<T>> values;  // values[frame*bins + bin]

  std::complex<T> at(std::int64_t bin, std::int64_t frame) const {
    return values[static_cast<size_t>(frame * bins + bin)];
  }
  T magnitude(std::int64_t bin, std::int64_t frame) const { return std::abs(at(bin, frame)); }
};

namespace stft_detail {

// Source index for centered framing with reflect padding (no edge repeat).
inline std::int64_t reflect_index(std::int64_t j, std::int64_t len) {
  while (j < 0 || j >= len) {
    if (j < 0) j = -j;
    if (j >= len) j = 2 * len - 2 - j;
  }
  return j;
}

// Window of win_size samples padded to fft_size, centered.
template <typename T>
std::vector<T> padded_window(const StftConfig& cfg) {
  auto win = hann_window<T>(cfg.win_size);
  std::vector<T> padded(static_cast<size_t>(cfg.fft_size), T(0));
  const std::int64_t off = (cfg.fft_size - cfg.win_size) / 2;
  for (std::int64_t i = 0; i < cfg.win_size; ++i)
    padded[static_cast<size_t>(off + i)] = win[static_cast<size_t>(i)];
  return padded;
}

}  // namespace stft_detail

// Centered short-time Fourier transform over a raw sample buffer: frame t
// covers padded samples [t*hop, t*hop + fft_size) where the signal is
// reflect-padded by fft_size/2 on both sides. n_frames = 1 + len/hop.
template <typename T>
Spectrogram<T> stft_samples(const T* samples, std::int64_t len, const StftConfig& cfg) {
  cfg.validate();
  if (len < cfg.win_size)
    throw ContractError(strcat_("stft: clip of ", len, " samples shorter than window ",
                                cfg.win_size));
  if (len <= cfg.fft_size / 2)
    throw ContractError(strcat_("stft: clip of ", len,
                                " samples too short for centered framing with fft_size ",
                                cfg.fft_size));
  const std::int64_t n_frames = cfg.frames_for(len);
  const std::int64_t bins = cfg.bins();
  const std::int64_t n = cfg.fft_size;
  const std::int64_t half = n / 2;

  Spectrogram<T> spec;
  spec.bins = bins;
  spec.frames = n_frames;
  spec.values.resize(static_cast<size_t>(bins * n_frames));

  const auto window = stft_detail::padded_window<T>(cfg);
  Fft<T> fft(n);
  std::vector<std::complex<T>> buf(static_cast<size_t>(n));

  for (std::int64_t t = 0; t < n_frames; ++t) {
    const std::int64_t start = t * cfg.hop - half;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t src = stft_detail::reflect_index(start + i, len);
      buf[static_cast<size_t>(i)] = {samples[src] * window[static_cast<size_t>(i)], T(0)};
    }
    fft.forward(buf.data());
    for (std::int64_t b = 0; b < bins; ++b)
      spec.values[static_cast<size_t>(t * bins + b)] = buf[static_cast<size_t>(b)];
  }
  return spec;
}

inline Spectrogram<float> stft(const Waveform& w, const StftConfig& cfg) {
  return stft_samples(w.samples.data(), static_cast<std::int64_t>(w.samples.size()), cfg);
}

}  // namespace vocgan
