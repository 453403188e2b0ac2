#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vocgan/stft.hpp"

namespace vocgan {

// Mel analysis parameters. hop must equal the generator's total upsampling
// factor so mel frames and output samples stay aligned.
inline constexpr std::int64_t kNumMels = 80;
inline constexpr std::int64_t kMelFftSize = 1024;
inline constexpr std::int64_t kMelWinSize = 1024;
inline constexpr std::int64_t kMelHop = 256;
inline constexpr double kMelFmin = 0.0;
inline constexpr double kMelFmax = 8000.0;
inline constexpr double kMelFloor = 1e-5;

inline StftConfig mel_stft_config() { return {kMelFftSize, kMelWinSize, kMelHop}; }

// Network-input scaling of log-mel values: (mel + 5) / 5 maps the log floor
// (-11.5) to -1.3 and typical speech energies into [-1, 2], keeping the
// conditioning in the same range as the unit-scale activations.
inline constexpr double kMelNormShift = 5.0;
inline constexpr double kMelNormScale = 0.2;

struct MelSpectrogram {
  std::int64_t n_mels = kNumMels;
  std::int64_t n_frames = 0;
  std::int64_t hop = kMelHop;
  std::int64_t fft_size = kMelFftSize;
  std::int64_t win_size = kMelWinSize;
  double fmin = kMelFmin;
  double fmax = kMelFmax;
  std::vector<float> values;  // [n_mels][n_frames] row-major, natural-log magnitudes

  float& at(std::int64_t mel, std::int64_t frame) {
    return values[static_cast<size_t>(mel * n_frames + frame)];
  }
  float at(std::int64_t mel, std::int64_t frame) const {
    return values[static_cast<size_t>(mel * n_frames + frame)];
  }

  // Frames [0, n) of this mel; the trainer crops to the clip's exact length.
  MelSpectrogram first_frames(std::int64_t n) const {
    if (n > n_frames) throw ContractError(strcat_("first_frames: ", n, " > ", n_frames));
    MelSpectrogram out = *this;
    out.n_frames = n;
    out.values.resize(static_cast<size_t>(n_mels * n));
    for (std::int64_t m = 0; m < n_mels; ++m)
      for (std::int64_t t = 0; t < n; ++t) out.at(m, t) = at(m, t);
    return out;
  }
};

// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
  if (hz < 1000.0) return hz * 3.0 / 200.0;
  return 15.0 + std::log(hz / 1000.0) * 27.0 / std::log(6.4);
}

inline double mel_to_hz(double mel) {
  if (mel < 15.0) return mel * 200.0 / 3.0;
  return 1000.0 * std::exp((mel - 15.0) * std::log(6.4) / 27.0);
}

// Triangular filterbank, [n_mels][n_bins] row-major, unit peak triangles.
inline std::vector<float> mel_filterbank(std::int64_t n_mels, std::int64_t fft_size,
                                         int sample_rate, double fmin, double fmax) {
  const std::int64_t n_bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers(static_cast<size_t>(n_mels + 2));
  for (std::int64_t i = 0; i < n_mels + 2; ++i)
    centers[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                               static_cast<double>(n_mels + 1));

  std::vector<float> fb(static_cast<size_t>(n_mels * n_bins), 0.0f);
  for (std::int64_t m = 0; m < n_mels; ++m) {
    const double left = centers[static_cast<size_t>(m)];
    const double center = centers[static_cast<size_t>(m + 1)];
    const double right = centers[static_cast<size_t>(m + 2)];
    for (std::int64_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / static_cast<double>(fft_size);
      double w = 0.0;
      if (f > left && f < right)
        w = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      fb[static_cast<size_t>(m * n_bins + b)] = static_cast<float>(w);
    }
  }
  return fb;
}

inline MelSpectrogram mel_spectrogram(const Waveform& w) {
  if (w.sample_rate != kSampleRate)
    throw DataError(strcat_("mel_spectrogram: sample rate ", w.sample_rate, ", expected ",
                            kSampleRate));
  const auto cfg = mel_stft_config();
  const auto spec = stft(w, cfg);
  static const std::vector<float> fb =
      mel_filterbank(kNumMels, kMelFftSize, kSampleRate, kMelFmin, kMelFmax);
  const std::int64_t n_bins = cfg.bins();

  MelSpectrogram mel;
  mel.n_frames = spec.frames;
  mel.values.resize(static_cast<size_t>(kNumMels * spec.frames));
  std::vector<float> mags(static_cast<size_t>(n_bins));
  for (std::int64_t t = 0; t < spec.frames; ++t) {
    for (std::int64_t b = 0; b < n_bins; ++b) mags[static_cast<size_t>(b)] = spec.magnitude(b, t);
    for (std::int64_t m = 0; m < kNumMels; ++m) {
      const float* row = fb.data() + m * n_bins;
      double acc = 0.0;
      for (std::int64_t b = 0; b < n_bins; ++b) acc += row[b] * mags[static_cast<size_t>(b)];
      if (acc < kMelFloor) acc = kMelFloor;
      mel.at(m, t) = static_cast<float>(std::log(acc));
    }
  }
  return mel;
}

// Mel cache file: magic "VOCM" | u32 n_mels | u32 n_frames | f32 row-major
// little-endian values.
inline void save_mel(const std::string& path, const MelSpectrogram& mel) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(strcat_("cannot open mel cache for writing: ", path));
  os.write("VOCM", 4);
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(static_cast<std::uint32_t>(mel.n_mels));
  put_u32(static_cast<std::uint32_t>(mel.n_frames));
  std::vector<unsigned char> buf(mel.values.size() * 4);
  for (size_t i = 0; i < mel.values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &mel.values[i], 4);
    for (int j = 0; j < 4; ++j)
      buf[i * 4 + j] = static_cast<unsigned char>((bits >> (8 * j)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw DataError(strcat_("mel cache write failed: ", path));
}

inline MelSpectrogram load_mel(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(strcat_("cannot open mel cache: ", path));
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VOCM", 4) != 0)
    throw DataError(strcat_("not a VOCM mel cache: ", path));
  auto get_u32 = [&] {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  };
  MelSpectrogram mel;
  mel.n_mels = get_u32();
  mel.n_frames = get_u32();
  if (!is || mel.n_mels <= 0 || mel.n_frames < 0)
    throw DataError(strcat_("malformed mel cache header: ", path));
  const size_t n = static_cast<size_t>(mel.n_mels * mel.n_frames);
  std::vector<unsigned char> buf(n * 4);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!is) throw DataError(strcat_("truncated mel cache: ", path));
  mel.values.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int j = 0; j < 4; ++j) bits |= static_cast<std::uint32_t>(buf[i * 4 + j]) << (8 * j);
    std::memcpy(&mel.values[i], &bits, 4);
  }
  return mel;
}

}  // namespace vocgan
