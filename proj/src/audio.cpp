// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>

#include "voxtrig/error.hpp"

namespace voxtrig {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kUnsupportedCodec: return "unsupported codec";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kCapacity: return "capacity error";
    case ErrorKind::kBackend: return "backend error";
    case ErrorKind::kIncompletePredictions: return "incomplete predictions";
    case ErrorKind::kInvalidVariant: return "invalid variant";
  }
  return "error";
}

AudioClip::AudioClip(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.empty()) Fail(ErrorKind::kInvalidInput, "audio clip is empty");
  if (sample_rate_ <= 0)
    Fail(ErrorKind::kInvalidInput,
         "sample rate must be positive, got " + std::to_string(sample_rate_));
  for (double v : samples_) {
    if (!std::isfinite(v))
      Fail(ErrorKind::kInvalidInput, "audio clip contains non-finite samples");
  }
}

double HardClip(std::vector<double>& samples) {
  double peak = 0.0;
  for (double& v : samples) {
    peak = std::max(peak, std::abs(v));
    v = std::clamp(v, -1.0, 1.0);
  }
  return std::max(0.0, peak - 1.0);
}

double Rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double SnrDb(std::span<const double> reference, std::span<const double> test) {
  if (reference.size() != test.size())
    Fail(ErrorKind::kInvalidInput, "SNR requires equal-length signals");
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    signal += reference[i] * reference[i];
    const double d = reference[i] - test[i];
    noise += d * d;
  }
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(std::span<const unsigned char> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void AppendLe(std::vector<unsigned char>& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

void AppendTag(std::vector<unsigned char>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

bool TagIs(std::span<const unsigned char> bytes, std::size_t offset,
           const char* tag) {
  return std::memcmp(bytes.data() + offset, tag, 4) == 0;
}

struct FmtChunk {
  std::uint16_t format;
  std::uint16_t channels;
  std::uint32_t sample_rate;
  std::uint16_t bits;
};

}  // namespace

AudioClip DecodeWav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || !TagIs(bytes, 0, "RIFF") || !TagIs(bytes, 8, "WAVE"))
    Fail(ErrorKind::kFormat, "not a RIFF/WAVE stream");

  std::optional<FmtChunk> fmt;
  std::optional<std::span<const unsigned char>> data;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto chunk_size = ReadLe<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    // Truncated data chunks are tolerated; some writers leave the size unset.
    const std::size_t avail =
        std::min<std::size_t>(chunk_size, bytes.size() - body);
    if (TagIs(bytes, pos, "fmt ")) {
      if (avail < 16) Fail(ErrorKind::kFormat, "fmt chunk too short");
      FmtChunk f{};
      f.format = ReadLe<std::uint16_t>(bytes, body);
      f.channels = ReadLe<std::uint16_t>(bytes, body + 2);
      f.sample_rate = ReadLe<std::uint32_t>(bytes, body + 4);
      f.bits = ReadLe<std::uint16_t>(bytes, body + 14);
      if (f.format == kFormatExtensible) {
        if (avail < 26) Fail(ErrorKind::kFormat, "extensible fmt chunk too short");
        // First two bytes of the SubFormat GUID carry the format tag.
        f.format = ReadLe<std::uint16_t>(bytes, body + 24);
      }
      fmt = f;
    } else if (TagIs(bytes, pos, "data")) {
      data = bytes.subspan(body, avail);
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!fmt) Fail(ErrorKind::kFormat, "missing fmt chunk");
  if (!data) Fail(ErrorKind::kFormat, "missing data chunk");
  if (fmt->channels == 0) Fail(ErrorKind::kFormat, "zero channels");
  if (fmt->sample_rate == 0 ||
      fmt->sample_rate > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
    Fail(ErrorKind::kFormat, "invalid sample rate");

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !f32)
    Fail(ErrorKind::kUnsupportedCodec,
         "unsupported WAV encoding (format " + std::to_string(fmt->format) +
             ", " + std::to_string(fmt->bits) + " bits); need PCM16 or float32");

  const std::size_t width = fmt->bits / 8;
  const std::size_t channels = fmt->channels;
  const std::size_t frames = data->size() / (width * channels);
  if (frames == 0) Fail(ErrorKind::kFormat, "WAV file has no audio frames");

  std::vector<double> mono(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (i * channels + c) * width;
      if (pcm16) {
        acc += ReadLe<std::int16_t>(*data, off) / 32768.0;
      } else {
        acc += static_cast<double>(ReadLe<float>(*data, off));
      }
    }
    mono[i] = acc / static_cast<double>(channels);
  }
  return AudioClip(std::move(mono), static_cast<int>(fmt->sample_rate));
}

std::vector<unsigned char> EncodeWav(const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  AppendTag(out, "RIFF");
  AppendLe<std::uint32_t>(out, 36 + data_bytes);
  AppendTag(out, "WAVE");
  AppendTag(out, "fmt ");
  AppendLe<std::uint32_t>(out, 16);
  AppendLe<std::uint16_t>(out, kFormatPcm);
  AppendLe<std::uint16_t>(out, 1);
  AppendLe<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate()));
  AppendLe<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate()) * 2);
  AppendLe<std::uint16_t>(out, 2);
  AppendLe<std::uint16_t>(out, 16);
  AppendTag(out, "data");
  AppendLe<std::uint32_t>(out, data_bytes);
  for (double v : clip.samples()) {
    const double scaled = std::nearbyint(v * 32768.0);
    AppendLe<std::int16_t>(
        out, static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
  }
  return out;
}

AudioClip LoadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void SaveWav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto bytes = EncodeWav(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace voxtrig
