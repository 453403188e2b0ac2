#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <filesystem>
#include <fstream>

#include "test_support.hpp"
#include "vocgan/audio.hpp"
#include "vocgan/fft.hpp"
#include "vocgan/mel.hpp"
#include "vocgan/pitch.hpp"
#include "vocgan/stft.hpp"
#include "vocgan/wav.hpp"

using namespace vocgan;

namespace {

// O(N^2) DFT oracle.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t i = 0; i < n; ++i) {
      const double a = -2.0 * 3.14159265358979323846 * static_cast<double>(k * i) /
                       static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

Waveform sine_wave(double freq, double seconds, double amp = 0.8, int rate = kSampleRate) {
  Waveform w;
  w.sample_rate = rate;
  const auto n = static_cast<std::int64_t>(seconds * rate);
  w.samples.resize(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    w.samples[static_cast<size_t>(i)] = static_cast<float>(
        amp * std::sin(2.0 * 3.14159265358979323846 * freq * i / rate));
  return w;
}

}  // namespace

TEST_CASE("fft matches the naive DFT oracle for sizes up to 512") {
  Rng rng(101);
  for (std::int64_t n : {4, 8, 32, 128, 512}) {
    std::vector<std::complex<double>> x(static_cast<size_t>(n));
    for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    auto expect = naive_dft(x);
    auto got = x;
    Fft<double> fft(n);
    fft.forward(got.data());
    for (size_t i = 0; i < x.size(); ++i) {
      REQUIRE(got[i].real() == Catch::Approx(expect[i].real()).margin(1e-6));
      REQUIRE(got[i].imag() == Catch::Approx(expect[i].imag()).margin(1e-6));
    }
    fft.inverse(got.data());
    for (size_t i = 0; i < x.size(); ++i)
      REQUIRE(got[i].real() == Catch::Approx(x[i].real()).margin(1e-9));
  }
  REQUIRE_THROWS_AS(Fft<double>(12), ContractError);
}

TEST_CASE("stft basics") {
  SECTION("all-zero input gives all-zero magnitudes") {
    Waveform w;
    w.samples.assign(4096, 0.0f);
    auto spec = stft(w, mel_stft_config());
    for (std::int64_t t = 0; t < spec.frames; ++t)
      for (std::int64_t b = 0; b < spec.bins; ++b) REQUIRE(spec.magnitude(b, t) == 0.0f);
  }

  SECTION("frame count is 1 + len/hop") {
    Waveform w = sine_wave(220.0, 1.0);
    REQUIRE(w.samples.size() == 22050);
    auto spec = stft(w, mel_stft_config());
    REQUIRE(spec.frames == 1 + 22050 / 256);
    REQUIRE(spec.bins == 513);
  }

  SECTION("pure cosine at an exact bin peaks at that bin in every frame") {
    const std::int64_t bin = 40;
    const double freq = static_cast<double>(bin) * kSampleRate / kMelFftSize;
    Waveform w;
    w.samples.resize(8192);
    for (size_t i = 0; i < w.samples.size(); ++i)
      w.samples[i] = static_cast<float>(
          0.7 * std::cos(2.0 * 3.14159265358979323846 * freq * static_cast<double>(i) /
                         kSampleRate));
    auto spec = stft(w, mel_stft_config());
    for (std::int64_t t = 0; t < spec.frames; ++t) {
      std::int64_t argmax = 0;
      float best = -1.0f;
      for (std::int64_t b = 0; b < spec.bins; ++b)
        if (spec.magnitude(b, t) > best) {
          best = spec.magnitude(b, t);
          argmax = b;
        }
      REQUIRE(argmax == bin);
    }
  }

  SECTION("clip shorter than a window is rejected") {
    Waveform w;
    w.samples.assign(100, 0.1f);
    REQUIRE_THROWS_AS(stft(w, mel_stft_config()), ContractError);
  }

  SECTION("Parseval ratio between windowed energy and spectrum within 1e-3") {
    Rng rng(55);
    Waveform w;
    w.samples.resize(6000);
    for (auto& s : w.samples) s = static_cast<float>(rng.uniform(-0.8, 0.8));
    const auto cfg = mel_stft_config();
    const auto window = stft_detail::padded_window<double>(cfg);
    std::vector<double> x(w.samples.begin(), w.samples.end());
    auto spec = stft_samples(x.data(), static_cast<std::int64_t>(x.size()), cfg);

    for (std::int64_t t = 1; t + 1 < spec.frames; t += 7) {
      double time_energy = 0.0;
      const std::int64_t start = t * cfg.hop - cfg.fft_size / 2;
      for (std::int64_t i = 0; i < cfg.fft_size; ++i) {
        const auto src = stft_detail::reflect_index(start + i, static_cast<std::int64_t>(x.size()));
        const double v = x[static_cast<size_t>(src)] * window[static_cast<size_t>(i)];
        time_energy += v * v;
      }
      // reassemble the full-spectrum energy from the one-sided bins
      double spec_energy = std::norm(spec.at(0, t)) + std::norm(spec.at(spec.bins - 1, t));
      for (std::int64_t b = 1; b < spec.bins - 1; ++b) spec_energy += 2.0 * std::norm(spec.at(b, t));
      spec_energy /= static_cast<double>(cfg.fft_size);
      if (time_energy < 1e-9) continue;
      REQUIRE(spec_energy / time_energy == Catch::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("mel spectrogram") {
  SECTION("zero input hits the log floor everywhere") {
    Waveform w;
    w.samples.assign(22050, 0.0f);
    auto mel = mel_spectrogram(w);
    const float expect = std::log(1e-5f);
    for (float v : mel.values) REQUIRE(v == Catch::Approx(expect).margin(1e-5));
  }

  SECTION("one second gives 87 frames and 80 mel rows") {
    auto mel = mel_spectrogram(sine_wave(220.0, 1.0));
    REQUIRE(mel.n_frames == 87);
    REQUIRE(mel.n_mels == 80);
  }

  SECTION("wrong sample rate is rejected") {
    REQUIRE_THROWS_AS(mel_spectrogram(sine_wave(220.0, 1.0, 0.8, 44100)), DataError);
  }

  SECTION("filterbank rows: positive sums, contiguous support, no all-zero rows") {
    const auto fb = mel_filterbank(kNumMels, kMelFftSize, kSampleRate, kMelFmin, kMelFmax);
    const std::int64_t bins = kMelFftSize / 2 + 1;
    for (std::int64_t m = 0; m < kNumMels; ++m) {
      double sum = 0.0;
      std::int64_t first = -1, last = -1;
      bool gap = false;
      for (std::int64_t b = 0; b < bins; ++b) {
        const double v = fb[static_cast<size_t>(m * bins + b)];
        REQUIRE(v >= 0.0);
        sum += v;
        if (v > 0.0) {
          if (first < 0) first = b;
          if (last >= 0 && b > last + 1) gap = true;
          last = b;
        }
      }
      REQUIRE(sum > 0.0);
      REQUIRE(first >= 0);
      REQUIRE_FALSE(gap);
    }
  }

  SECTION("mel cache round-trips") {
    auto mel = mel_spectrogram(sine_wave(150.0, 1.0));
    const auto path = std::filesystem::temp_directory_path() / "vocgan_mel_test.vocm";
    save_mel(path.string(), mel);
    auto back = load_mel(path.string());
    REQUIRE(back.n_mels == mel.n_mels);
    REQUIRE(back.n_frames == mel.n_frames);
    REQUIRE(back.values == mel.values);
    std::filesystem::remove(path);
  }
}

TEST_CASE("wav io") {
  const auto path = std::filesystem::temp_directory_path() / "vocgan_wav_test.wav";

  SECTION("write/read round trip within one quantization step") {
    Rng rng(7);
    Waveform w;
    w.samples.resize(5000);
    for (auto& s : w.samples) s = static_cast<float>(rng.uniform(-1.0, 1.0));
    write_wav(path.string(), w);
    auto back = read_wav(path.string());
    REQUIRE(back.sample_rate == kSampleRate);
    REQUIRE(back.samples.size() == w.samples.size());
    float max_diff = 0.0f;
    for (size_t i = 0; i < w.samples.size(); ++i)
      max_diff = std::max(max_diff, std::abs(back.samples[i] - w.samples[i]));
    REQUIRE(max_diff <= 1.0f / 32768.0f);
  }

  SECTION("empty file is a format error") {
    std::ofstream(path.string(), std::ios::binary).close();
    REQUIRE_THROWS_AS(read_wav(path.string()), DataError);
  }

  SECTION("stereo is rejected") {
    // hand-built stereo header
    Waveform w = sine_wave(220.0, 0.1);
    write_wav(path.string(), w);
    std::fstream f(path.string(), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(22);
    const char two = 2;
    f.write(&two, 1);
    f.close();
    REQUIRE_THROWS_MATCHES(read_wav(path.string()), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("channels")));
  }

  std::filesystem::remove(path);
}

TEST_CASE("waveform downsampling") {
  SECTION("k=0 is the identity") {
    auto w = sine_wave(220.0, 0.2);
    auto d = downsample_waveform(w, 0);
    REQUIRE(d.samples == w.samples);
  }

  SECTION("constant signal stays constant at interior samples for every k") {
    Waveform w;
    w.samples.assign(2560, 0.5f);
    for (int k = 0; k <= 4; ++k) {
      auto d = downsample_waveform(w, k);
      for (size_t i = 1; i + 1 < d.samples.size(); ++i)
        REQUIRE(d.samples[i] == Catch::Approx(0.5f).margin(1e-6));
    }
  }

  SECTION("length 2560 at k=4 gives 160") {
    Waveform w;
    w.samples.assign(2560, 0.1f);
    REQUIRE(downsample_waveform(w, 4).samples.size() == 160);
  }

  SECTION("length follows floor-halving for a grid of lengths") {
    for (std::int64_t len : {17, 64, 100, 255, 1024, 22016}) {
      Waveform w;
      w.samples.assign(static_cast<size_t>(len), 0.1f);
      for (int k = 0; k <= 3; ++k) {
        std::int64_t expect = len;
        for (int i = 0; i < k; ++i) expect /= 2;
        if (expect < 2) break;
        REQUIRE(static_cast<std::int64_t>(downsample_waveform(w, k).samples.size()) == expect);
      }
    }
  }

  SECTION("negative k is a contract error") {
    REQUIRE_THROWS_AS(downsample_waveform(sine_wave(100.0, 0.1), -1), ContractError);
  }
}

TEST_CASE("peak normalization and linear resampling") {
  auto w = sine_wave(220.0, 0.2, 0.3);
  auto n = peak_normalize(w, 0.95f);
  float peak = 0.0f;
  for (float s : n.samples) peak = std::max(peak, std::abs(s));
  REQUIRE(peak == Catch::Approx(0.95f).margin(1e-4));

  Waveform silence;
  silence.samples.assign(100, 0.0f);
  REQUIRE(peak_normalize(silence).samples == silence.samples);

  auto hi = sine_wave(220.0, 0.5, 0.8, 44100);
  auto lo = resample_linear(hi, 22050);
  REQUIRE(lo.sample_rate == 22050);
  REQUIRE(static_cast<double>(lo.samples.size()) ==
          Catch::Approx(hi.samples.size() / 2.0).margin(1.0));
}

TEST_CASE("f0 estimation") {
  SECTION("220 Hz sine recovered within 2 Hz on all voiced frames") {
    auto frames = estimate_f0(sine_wave(220.0, 1.0));
    REQUIRE_FALSE(frames.empty());
    std::int64_t voiced = 0;
    for (const auto& f : frames) {
      if (!f.voiced) continue;
      ++voiced;
      REQUIRE(f.f0 == Catch::Approx(220.0).margin(2.0));
    }
    REQUIRE(voiced > static_cast<std::int64_t>(frames.size() * 3 / 4));
  }

  SECTION("silence has no voiced frames") {
    Waveform w;
    w.samples.assign(22050, 0.0f);
    for (const auto& f : estimate_f0(w)) REQUIRE_FALSE(f.voiced);
  }

  SECTION("harmonic complex resolves to the fundamental, not the octave") {
    Waveform w;
    w.samples.resize(22050);
    for (size_t i = 0; i < w.samples.size(); ++i) {
      const double t = static_cast<double>(i) / kSampleRate;
      w.samples[i] = static_cast<float>(
          0.5 * std::sin(2.0 * 3.14159265358979323846 * 100.0 * t) +
          0.35 * std::sin(2.0 * 3.14159265358979323846 * 200.0 * t));
    }
    std::int64_t voiced = 0;
    for (const auto& f : estimate_f0(w)) {
      if (!f.voiced) continue;
      ++voiced;
      REQUIRE(f.f0 == Catch::Approx(100.0).margin(3.0));
    }
    REQUIRE(voiced > 0);
  }

  SECTION("estimates scale with pitch: f vs 2f within 2%") {
    for (double f : {110.0, 160.0, 200.0}) {
      auto lo = estimate_f0(sine_wave(f, 0.6));
      auto hi = estimate_f0(sine_wave(2.0 * f, 0.6));
      auto mean_f0 = [](const std::vector<F0Frame>& frames) {
        double acc = 0.0;
        int n = 0;
        for (const auto& fr : frames)
          if (fr.voiced) {
            acc += fr.f0;
            ++n;
          }
        REQUIRE(n > 0);
        return acc / n;
      };
      REQUIRE(mean_f0(hi) / mean_f0(lo) == Catch::Approx(2.0).epsilon(0.02));
    }
  }
}
