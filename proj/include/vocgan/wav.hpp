#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vocgan/common.hpp"

namespace vocgan {

inline constexpr int kSampleRate = 22050;

struct Waveform {
  std::vector<float> samples;  // [-1, 1]
  int sample_rate = kSampleRate;

  double seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

namespace wav_detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void wr_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xff));
}

inline void wr_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>(x >> 8));
}

}  // namespace wav_detail

// Reads a RIFF PCM 16-bit mono file. No silent resampling: the caller sees
// the file's rate and decides. Stereo and non-PCM encodings are rejected.
inline Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(strcat_("cannot open WAV file: ", path));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError(strcat_("not a RIFF/WAVE file: ", path));

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = wav_detail::rd_u32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + len > bytes.size()) throw DataError(strcat_("truncated WAV chunk in ", path));
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw DataError(strcat_("malformed fmt chunk in ", path));
      format = wav_detail::rd_u16(bytes.data() + body);
      channels = wav_detail::rd_u16(bytes.data() + body + 2);
      rate = wav_detail::rd_u32(bytes.data() + body + 4);
      bits = wav_detail::rd_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0) throw DataError(strcat_("WAV missing fmt/data chunk: ", path));
  if (format != 1) throw DataError(strcat_("WAV is not integer PCM (format ", format, "): ", path));
  if (channels != 1)
    throw DataError(strcat_("WAV has ", channels, " channels, expected mono: ", path));
  if (bits != 16) throw DataError(strcat_("WAV has ", bits, "-bit samples, expected 16: ", path));

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  const size_t n = data_len / 2;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const std::uint16_t u = wav_detail::rd_u16(bytes.data() + data_off + 2 * i);
    const std::int16_t s = static_cast<std::int16_t>(u);
    w.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

inline void write_wav(const std::string& path, const Waveform& w) {
  std::vector<unsigned char> out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wav_detail::wr_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  wav_detail::wr_u32(out, 16);
  wav_detail::wr_u16(out, 1);  // integer PCM
  wav_detail::wr_u16(out, 1);  // mono
  wav_detail::wr_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  wav_detail::wr_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  wav_detail::wr_u16(out, 2);
  wav_detail::wr_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wav_detail::wr_u32(out, data_len);
  for (float s : w.samples) {
    double v = std::lround(static_cast<double>(s) * 32768.0);
    v = std::min(32767.0, std::max(-32768.0, v));
    wav_detail::wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(strcat_("cannot open WAV for writing: ", path));
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw DataError(strcat_("WAV write failed: ", path));
}

}  // namespace vocgan
