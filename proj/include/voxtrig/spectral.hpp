// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxtrig/audio.hpp"

namespace voxtrig {

using Complex = std::complex<double>;

// Discrete Fourier transform of a fixed length, backed by Eigen's FFT
// module. Not safe for concurrent use of one instance.
class Fft {
 public:
  explicit Fft(std::size_t size);
  ~Fft();
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  std::size_t size() const { return size_; }
  void Forward(std::span<Complex> data) const;
  void Inverse(std::span<Complex> data) const;  // includes the 1/N scale

  // Real-input transform; returns size/2 + 1 bins.
  std::vector<Complex> ForwardReal(std::span<const double> frame) const;
  // Inverse of ForwardReal; bins.size() must be size/2 + 1.
  std::vector<double> InverseReal(std::span<const Complex> bins) const;

 private:
  struct Engine;
  std::size_t size_;
  std::unique_ptr<Engine> engine_;
};

enum class Window { kHann, kSqrtHann, kRect };

Window ParseWindow(std::string_view name);
std::string_view WindowName(Window w);

// Periodic window of the given length.
std::vector<double> MakeWindow(Window w, std::size_t length);

struct StftParams {
  std::size_t frame_size = 1024;
  std::size_t hop = 256;
  Window window = Window::kHann;

  // Throws kInvalidInput unless frame_size is a power of two and
  // 0 < hop <= frame_size.
  void Validate() const;
};

// Complex STFT frames of a real signal.
//
// `centered` spectrograms were computed on a signal reflect-padded by
// frame_size/2 at both ends; Istft strips that padding and returns
// `signal_length` samples. Non-centered spectrograms reconstruct the full
// overlap-add span, frame_size + (frames - 1) * hop samples.
struct Spectrogram {
  std::vector<std::vector<Complex>> frames;
  StftParams params;
  int sample_rate = 16000;
  std::size_t signal_length = 0;
  bool centered = true;

  std::size_t num_bins() const { return params.frame_size / 2 + 1; }
};

// Frame count is 1 + floor(len / hop) (the reflect-padded signal has
// len + frame_size samples). Requires len >= frame_size.
Spectrogram Stft(const AudioClip& clip, const StftParams& params = {});

// Weighted overlap-add inverse with squared-window normalization. Throws
// kConfig when the squared window does not overlap-add to a constant at the
// given hop. The result is not clipped.
std::vector<double> IstftSamples(const Spectrogram& spec);

// IstftSamples followed by a hard clip to [-1, 1].
AudioClip Istft(const Spectrogram& spec);

// True when sum_k w^2(n + k*hop) is constant over n (relative tolerance 1e-9).
bool SatisfiesCola(const StftParams& params);

// Band-limited resampling of `x` to exactly `out_length` samples
// (Hann-windowed sinc, cutoff lowered when shrinking).
std::vector<double> ResampleToLength(std::span<const double> x,
                                     std::size_t out_length);

// Frequency (Hz) of the strongest spectral peak between lo_hz and hi_hz,
// refined by parabolic interpolation on the log magnitude. Uses a Hann
// window over the whole clip, zero-padded to a power of two of at least
// 4x its length.
double DominantFrequency(const AudioClip& clip, double lo_hz = 50.0,
                         double hi_hz = 4000.0);

// Power-weighted mean frequency (Hz) of the whole-clip spectrum.
double SpectralCentroid(const AudioClip& clip);

}  // namespace voxtrig
