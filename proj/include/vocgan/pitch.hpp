#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vocgan/wav.hpp"

namespace vocgan {

struct F0Frame {
  double time = 0.0;  // frame center, seconds
  double f0 = 0.0;    // Hz, valid when voiced
  bool voiced = false;
};

inline constexpr double kF0Min = 50.0;
inline constexpr double kF0Max = 500.0;
inline constexpr std::int64_t kF0FrameSize = 1024;
inline constexpr std::int64_t kF0Hop = 256;
inline constexpr double kVoicingThreshold = 0.45;

// Per-frame F0 via the cumulative-mean-normalized difference function (YIN
// style) with parabolic minimum interpolation. Search band 50-500 Hz; frames
// whose normalized difference never drops below the voicing threshold are
// reported unvoiced.
inline std::vector<F0Frame> estimate_f0(const Waveform& w) {
  if (w.sample_rate != kSampleRate)
    throw DataError(strcat_("estimate_f0: sample rate ", w.sample_rate, ", expected ",
                            kSampleRate));
  const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
  const double sr = static_cast<double>(w.sample_rate);
  const std::int64_t lag_min = static_cast<std::int64_t>(sr / kF0Max);        // 44
  const std::int64_t lag_max = static_cast<std::int64_t>(std::ceil(sr / kF0Min));  // 441
  const std::int64_t integ = kF0FrameSize - lag_max - 1;  // integration window, fits the frame

  std::vector<F0Frame> frames;
  if (n < kF0FrameSize) return frames;

  std::vector<double> diff(static_cast<size_t>(lag_max + 1), 0.0);
  std::vector<double> cmnd(static_cast<size_t>(lag_max + 1), 1.0);

  for (std::int64_t start = 0; start + kF0FrameSize <= n; start += kF0Hop) {
    const float* x = w.samples.data() + start;
    F0Frame frame;
    frame.time = (static_cast<double>(start) + kF0FrameSize / 2.0) / sr;

    for (std::int64_t tau = 1; tau <= lag_max; ++tau) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < integ; ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(x[i + tau]);
        acc += d * d;
      }
      diff[static_cast<size_t>(tau)] = acc;
    }

    double cumsum = 0.0;
    for (std::int64_t tau = 1; tau <= lag_max; ++tau) {
      cumsum += diff[static_cast<size_t>(tau)];
      cmnd[static_cast<size_t>(tau)] =
          cumsum > 0.0 ? diff[static_cast<size_t>(tau)] * static_cast<double>(tau) / cumsum : 1.0;
    }

    // absolute-threshold rule: first lag under threshold, then walk to the
    // local minimum so harmonics above the true period are skipped
    std::int64_t best = -1;
    for (std::int64_t tau = lag_min; tau <= lag_max; ++tau) {
      if (cmnd[static_cast<size_t>(tau)] < kVoicingThreshold) {
        while (tau + 1 <= lag_max &&
               cmnd[static_cast<size_t>(tau + 1)] < cmnd[static_cast<size_t>(tau)])
          ++tau;
        best = tau;
        break;
      }
    }

    if (best > 0) {
      double refined = static_cast<double>(best);
      if (best > 1 && best < lag_max) {
        const double a = cmnd[static_cast<size_t>(best - 1)];
        const double b = cmnd[static_cast<size_t>(best)];
        const double c = cmnd[static_cast<size_t>(best + 1)];
        const double denom = a - 2.0 * b + c;
        if (std::abs(denom) > 1e-12) {
          double shift = 0.5 * (a - c) / denom;
          if (shift > 0.5) shift = 0.5;
          if (shift < -0.5) shift = -0.5;
          refined += shift;
        }
      }
      frame.voiced = true;
      frame.f0 = sr / refined;
    }
    frames.push_back(frame);
  }
  return frames;
}

}  // namespace vocgan
