// src/audio.cc

// Copyright 2026  Parrot Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "parrot/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "parrot/common.h"
#include "parrot/io.h"

namespace parrot {

namespace {

uint32_t ReadLe(const unsigned char *p, int bytes) {
  uint32_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

void PutLe(std::string *out, uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i)
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

void ValidateClip(const AudioClip &clip) {
  if (clip.sample_rate <= 0)
    throw ConfigError("audio clip has non-positive sample rate");
  for (double s : clip.samples)
    if (!std::isfinite(s)) throw ConfigError("audio clip has non-finite sample");
}

double Energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double MeanPower(std::span<const double> x) {
  return x.empty() ? 0.0 : Energy(x) / static_cast<double>(x.size());
}

AudioClip LoadWav(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto *bytes = reinterpret_cast<const unsigned char *>(data.data());
  if (data.size() < 12 || std::memcmp(bytes, "RIFF", 4) != 0 ||
      std::memcmp(bytes + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file: " + path.string());

  int channels = 0, bits = 0, rate = 0;
  bool have_fmt = false;
  const unsigned char *pcm = nullptr;
  size_t pcm_bytes = 0;
  size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const unsigned char *chunk = bytes + pos;
    size_t size = ReadLe(chunk + 4, 4);
    size_t body = pos + 8;
    size_t avail = std::min(size, data.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw DataError("truncated fmt chunk: " + path.string());
      uint32_t format = ReadLe(bytes + body, 2);
      channels = static_cast<int>(ReadLe(bytes + body + 2, 2));
      rate = static_cast<int>(ReadLe(bytes + body + 4, 4));
      bits = static_cast<int>(ReadLe(bytes + body + 14, 2));
      if (format == 0xFFFE && avail >= 26)  // WAVE_FORMAT_EXTENSIBLE
        format = ReadLe(bytes + body + 24, 2);
      if (format != 1)
        throw DataError("WAV is not PCM encoded: " + path.string());
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = bytes + body;
      pcm_bytes = avail;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || pcm == nullptr)
    throw DataError("WAV missing fmt or data chunk: " + path.string());
  if (channels < 1 || rate <= 0 ||
      (bits != 8 && bits != 16 && bits != 24 && bits != 32))
    throw DataError("unsupported WAV layout: " + path.string());

  const int width = bits / 8;
  const size_t frames = pcm_bytes / (static_cast<size_t>(width) * channels);
  if (frames == 0) throw DataError("WAV has zero-length audio: " + path.string());

  const double scale = 1.0 / std::ldexp(1.0, bits - 1);
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(frames);
  for (size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char *p = pcm + (f * channels + c) * width;
      int64_t v;
      if (bits == 8) {
        v = static_cast<int64_t>(p[0]) - 128;  // 8-bit PCM is unsigned
      } else {
        uint32_t u = ReadLe(p, width);
        const uint32_t sign = 1u << (bits - 1);
        v = (u & sign) ? static_cast<int64_t>(u) - (int64_t{1} << bits)
                       : static_cast<int64_t>(u);
      }
      acc += static_cast<double>(v) * scale;
    }
    clip.samples[f] = acc / channels;
  }
  return clip;
}

void WriteWav(const std::filesystem::path &path, const AudioClip &clip) {
  ValidateClip(clip);
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutLe(&out, 36 + data_bytes, 4);
  out += "WAVEfmt ";
  PutLe(&out, 16, 4);
  PutLe(&out, 1, 2);  // PCM
  PutLe(&out, 1, 2);  // mono
  PutLe(&out, static_cast<uint32_t>(clip.sample_rate), 4);
  PutLe(&out, static_cast<uint32_t>(clip.sample_rate) * 2, 4);
  PutLe(&out, 2, 2);
  PutLe(&out, 16, 2);
  out += "data";
  PutLe(&out, data_bytes, 4);
  for (double s : clip.samples) {
    double q = std::round(s * 32768.0);
    q = std::clamp(q, -32768.0, 32767.0);
    PutLe(&out, static_cast<uint32_t>(static_cast<int16_t>(q)) & 0xffff, 2);
  }
  WriteFileAtomic(path, out);
}

std::vector<double> ResampleToLength(std::span<const double> x,
                                     size_t out_len) {
  if (x.empty() || out_len == 0) return std::vector<double>(out_len, 0.0);
  if (out_len == x.size()) return {x.begin(), x.end()};
  // Output sample j sits at input position j * step.
  const double step = static_cast<double>(x.size()) / out_len;
  const double cutoff = std::min(1.0, 1.0 / step);
  constexpr int kZeros = 16;
  const double half_width = kZeros / cutoff;
  std::vector<double> y(out_len);
  const long n = static_cast<long>(x.size());
  for (size_t j = 0; j < out_len; ++j) {
    const double t = j * step;
    const long lo = static_cast<long>(std::ceil(t - half_width));
    const long hi = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0;
    for (long i = std::max(lo, 0L); i <= std::min(hi, n - 1); ++i) {
      const double d = t - i;
      const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += x[i] * cutoff * Sinc(cutoff * d) * w;
    }
    y[j] = acc;
  }
  return y;
}

AudioClip Resample(const AudioClip &clip, int new_rate) {
  if (new_rate <= 0) throw ConfigError("resample target rate must be positive");
  if (new_rate == clip.sample_rate) return clip;
  const size_t out_len = static_cast<size_t>(std::llround(
      static_cast<double>(clip.samples.size()) * new_rate / clip.sample_rate));
  return AudioClip(ResampleToLength(clip.samples, std::max<size_t>(out_len, 1)),
                   new_rate);
}

std::vector<double> TileToLength(std::span<const double> x, size_t len) {
  if (x.empty()) throw ConfigError("cannot tile an empty waveform");
  std::vector<double> y(len);
  for (size_t i = 0; i < len; ++i) y[i] = x[i % x.size()];
  return y;
}

AudioClip Head(const AudioClip &clip, double seconds) {
  const size_t n = static_cast<size_t>(std::llround(seconds * clip.sample_rate));
  if (n == 0 || n > clip.samples.size())
    throw ConfigError("clip shorter than requested " + std::to_string(seconds) +
                      " s");
  return AudioClip({clip.samples.begin(), clip.samples.begin() + n},
                   clip.sample_rate);
}

}  // namespace parrot
