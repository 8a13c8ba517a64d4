// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace voxtrig {

// Mono time-domain signal. Samples are nominally in [-1, 1].
class AudioClip {
 public:
  // Throws kInvalidInput if samples is empty, contains non-finite values, or
  // sample_rate is not positive.
  AudioClip(std::vector<double> samples, int sample_rate);

  std::span<const double> samples() const { return samples_; }
  const std::vector<double>& data() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  int sample_rate() const { return sample_rate_; }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  friend bool operator==(const AudioClip&, const AudioClip&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

// Hard-clips to [-1, 1] in place and returns the peak overage
// (max |x| - 1, or 0 if nothing was clipped).
double HardClip(std::vector<double>& samples);

// Reads RIFF/WAVE with PCM16 or IEEE float32 data. Channels are averaged.
AudioClip LoadWav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Values are rounded and saturated to
// [-32768, 32767]; 1.0 maps to 32767.
void SaveWav(const AudioClip& clip, const std::filesystem::path& path);

// Same encodings as LoadWav/SaveWav, over in-memory bytes.
AudioClip DecodeWav(std::span<const unsigned char> bytes);
std::vector<unsigned char> EncodeWav(const AudioClip& clip);

double Rms(std::span<const double> x);

// 10 log10(|ref|^2 / |ref - test|^2). Returns +inf for an exact match.
// Lengths must agree.
double SnrDb(std::span<const double> reference, std::span<const double> test);

}  // namespace voxtrig
