#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vocgan/generator.hpp"
#include "vocgan/pitch.hpp"

namespace vocgan {

inline constexpr std::int64_t kMcdCoefficients = 13;  // cepstral orders 1..13, c0 excluded

namespace metrics_detail {

// Orthonormal DCT-II rows 1..kMcdCoefficients of a log-mel frame.
inline std::vector<double> mel_cepstrum(const MelSpectrogram& mel, std::int64_t frame) {
  const std::int64_t n = mel.n_mels;
  std::vector<double> c(static_cast<size_t>(kMcdCoefficients));
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::int64_t k = 1; k <= kMcdCoefficients; ++k) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      acc += static_cast<double>(mel.at(i, frame)) *
             std::cos(3.14159265358979323846 * (2.0 * i + 1.0) * k / (2.0 * n));
    c[static_cast<size_t>(k - 1)] = scale * acc;
  }
  return c;
}

}  // namespace metrics_detail

// Mel cepstral distortion in dB between two time-aligned waveforms (the
// copy-synthesis setting: both signals come from the same mel timeline, so no
// DTW). Lengths are truncated to the shorter signal; a mismatch beyond one
// frame is reported to stderr.
inline double mcd(const Waveform& reference, const Waveform& synthesized) {
  if (reference.sample_rate != synthesized.sample_rate)
    throw DataError(strcat_("mcd: sample rates differ: ", reference.sample_rate, " vs ",
                            synthesized.sample_rate));
  const auto mel_ref = mel_spectrogram(reference);
  const auto mel_syn = mel_spectrogram(synthesized);
  const std::int64_t frames = std::min(mel_ref.n_frames, mel_syn.n_frames);
  if (std::abs(mel_ref.n_frames - mel_syn.n_frames) > 1)
    std::cerr << "[mcd] length mismatch: " << mel_ref.n_frames << " vs " << mel_syn.n_frames
              << " frames, truncating to " << frames << "\n";

  double acc = 0.0;
  for (std::int64_t t = 0; t < frames; ++t) {
    const auto c_ref = metrics_detail::mel_cepstrum(mel_ref, t);
    const auto c_syn = metrics_detail::mel_cepstrum(mel_syn, t);
    double dist2 = 0.0;
    for (size_t i = 0; i < c_ref.size(); ++i) {
      const double d = c_ref[i] - c_syn[i];
      dist2 += d * d;
    }
    acc += std::sqrt(dist2);
  }
  const double mean_dist = frames > 0 ? acc / static_cast<double>(frames) : 0.0;
  return 10.0 * std::sqrt(2.0) / std::log(10.0) * mean_dist;
}

// RMSE in Hz over frames voiced in BOTH signals; empty when the voiced sets
// never intersect.
inline std::optional<double> f0_rmse(const Waveform& reference, const Waveform& synthesized) {
  const auto ref = estimate_f0(reference);
  const auto syn = estimate_f0(synthesized);
  const size_t frames = std::min(ref.size(), syn.size());
  double acc = 0.0;
  std::int64_t voiced = 0;
  for (size_t t = 0; t < frames; ++t) {
    if (!ref[t].voiced || !syn[t].voiced) continue;
    const double d = ref[t].f0 - syn[t].f0;
    acc += d * d;
    ++voiced;
  }
  if (voiced == 0) return std::nullopt;
  return std::sqrt(acc / static_cast<double>(voiced));
}

// CSV "time,f0_ref,f0_syn", one row per frame, unvoiced as an empty field.
inline void dump_f0_trajectory(const Waveform& reference, const Waveform& synthesized,
                               const std::string& path) {
  const auto ref = estimate_f0(reference);
  const auto syn = estimate_f0(synthesized);
  std::ofstream os(path);
  if (!os) throw DataError(strcat_("cannot open trajectory CSV for writing: ", path));
  os << "time,f0_ref,f0_syn\n";
  const size_t frames = std::min(ref.size(), syn.size());
  char buf[96];
  for (size_t t = 0; t < frames; ++t) {
    std::snprintf(buf, sizeof(buf), "%.6f", ref[t].time);
    os << buf << ",";
    if (ref[t].voiced) {
      std::snprintf(buf, sizeof(buf), "%.4f", ref[t].f0);
      os << buf;
    }
    os << ",";
    if (syn[t].voiced) {
      std::snprintf(buf, sizeof(buf), "%.4f", syn[t].f0);
      os << buf;
    }
    os << "\n";
  }
  if (!os) throw DataError(strcat_("trajectory CSV write failed: ", path));
}

struct RtfReport {
  double rtf_median = 0.0;
  double rtf_variance = 0.0;
  std::vector<double> rtf_runs;
  double total_audio_seconds = 0.0;
  int threads = 1;
  int runs = 0;
  std::string config_hash;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["rtf_median"] = rtf_median;
    j["rtf_variance"] = rtf_variance;
    j["rtf_runs"] = rtf_runs;
    j["total_audio_seconds"] = total_audio_seconds;
    j["threads"] = threads;
    j["runs"] = runs;
    j["config_hash"] = config_hash;
    return j;
  }
};

// Real-time factor: synthesized audio seconds per wall-clock second, median
// over `runs` timed passes after one untimed warm-up pass.
template <typename T>
RtfReport benchmark_rtf(const Generator<T>& gen, const std::vector<MelSpectrogram>& mels,
                        int threads, int runs = 5) {
  if (mels.empty()) throw DataError("benchmark_rtf: empty mel list");
  if (runs < 5) throw ContractError("benchmark_rtf: need at least 5 timed runs");
  set_threads(threads);

  std::vector<Tensor<T>> inputs;
  double audio_seconds = 0.0;
  for (const auto& mel : mels) {
    auto t = Tensor<T>::zeros({1, mel.n_mels, mel.n_frames});
    for (std::int64_t m = 0; m < mel.n_mels; ++m)
      for (std::int64_t f = 0; f < mel.n_frames; ++f)
        t.data()[m * mel.n_frames + f] = static_cast<T>(mel.at(m, f));
    inputs.push_back(std::move(t));
    audio_seconds += static_cast<double>(gen.output_length(mel.n_frames)) / kSampleRate;
  }

  auto synth_all = [&] {
    NoGradGuard ng;
    for (const auto& in : inputs) {
      auto out = gen.generate_full(in);
      (void)out;
    }
  };

  synth_all();  // warm-up, excluded

  RtfReport report;
  report.threads = threads;
  report.runs = runs;
  report.total_audio_seconds = audio_seconds;
  report.config_hash = gen.config().config_hash();
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    synth_all();
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.rtf_runs.push_back(audio_seconds / wall);
  }

  std::vector<double> sorted = report.rtf_runs;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  report.rtf_median =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mean = 0.0;
  for (double v : report.rtf_runs) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : report.rtf_runs) var += (v - mean) * (v - mean);
  report.rtf_variance = var / static_cast<double>(n);
  return report;
}

}  // namespace vocgan
