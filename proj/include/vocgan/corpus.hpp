#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vocgan/audio.hpp"
#include "vocgan/rng.hpp"
#include "vocgan/wav.hpp"

namespace vocgan {

// Tiny self-contained corpus so every pipeline runs with no downloads:
// harmonic tones with vibrato and amplitude envelopes, plus shaped noise
// bursts. Real datasets are drop-in replacements (directories of 22050 Hz
// mono PCM16 WAVs).

inline Waveform synth_tone_clip(Rng& rng, double seconds) {
  const auto n = static_cast<std::int64_t>(seconds * kSampleRate);
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  const double f0 = rng.uniform(90.0, 320.0);
  const int harmonics = 3 + static_cast<int>(rng.uniform_int(6));
  const double vibrato_depth = rng.uniform(0.0, 0.03);
  const double vibrato_rate = rng.uniform(4.0, 6.5);
  const double attack = rng.uniform(0.02, 0.08) * seconds;
  const double decay = rng.uniform(0.05, 0.25) * seconds;
  std::vector<double> phases(static_cast<size_t>(harmonics));
  for (auto& p : phases) p = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

  double phase = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double inst_f0 =
        f0 * (1.0 + vibrato_depth * std::sin(2.0 * 3.14159265358979323846 * vibrato_rate * t));
    phase += 2.0 * 3.14159265358979323846 * inst_f0 / kSampleRate;
    double s = 0.0;
    for (int h = 0; h < harmonics; ++h)
      s += std::sin(phase * (h + 1) + phases[static_cast<size_t>(h)]) / (h + 1);
    double env = 1.0;
    if (t < attack) env = t / attack;
    const double remain = seconds - t;
    if (remain < decay) env = std::min(env, remain / decay);
    w.samples[static_cast<size_t>(i)] = static_cast<float>(s * env);
  }
  return peak_normalize(w, 0.8f);
}

inline Waveform synth_noise_clip(Rng& rng, double seconds) {
  const auto n = static_cast<std::int64_t>(seconds * kSampleRate);
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  const double cutoff = rng.uniform(0.05, 0.6);  // one-pole lowpass coefficient
  const double burst_rate = rng.uniform(2.0, 8.0);
  const double burst_floor = rng.uniform(0.05, 0.3);
  double state = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double white = rng.uniform(-1.0, 1.0);
    state += cutoff * (white - state);
    const double am =
        burst_floor +
        (1.0 - burst_floor) *
            0.5 * (1.0 + std::sin(2.0 * 3.14159265358979323846 * burst_rate * t));
    w.samples[static_cast<size_t>(i)] = static_cast<float>(state * am);
  }
  return peak_normalize(w, 0.8f);
}

// Writes `count` WAVs (alternating tones and noise bursts) into dir and
// returns their paths.
inline std::vector<std::string> make_synthetic_corpus(const std::string& dir, int count,
                                                      std::uint64_t seed,
                                                      double min_seconds = 1.2,
                                                      double max_seconds = 2.5) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Rng rng = Rng(seed).fork(0x636f7270);
  std::vector<std::string> paths;
  for (int i = 0; i < count; ++i) {
    const double seconds = rng.uniform(min_seconds, max_seconds);
    const bool tone = i % 2 == 0;
    Waveform w = tone ? synth_tone_clip(rng, seconds) : synth_noise_clip(rng, seconds);
    char name[32];
    std::snprintf(name, sizeof(name), "%s_%03d.wav", tone ? "tone" : "noise", i);
    const auto path = (fs::path(dir) / name).string();
    write_wav(path, w);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace vocgan
