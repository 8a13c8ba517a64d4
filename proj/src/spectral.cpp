// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "voxtrig/error.hpp"

namespace voxtrig {

namespace {
constexpr double kPi = std::numbers::pi;

bool IsPowerOfTwo(std::size_t n) { return n != 0 && std::has_single_bit(n); }
}  // namespace

// ---------------------------------------------------------------------------
// Fft

struct Fft::Engine {
  Eigen::FFT<double> fft;
  std::vector<Complex> in, out;
  std::vector<double> real;
};

Fft::Fft(std::size_t size) : size_(size), engine_(std::make_unique<Engine>()) {
  if (size == 0) Fail(ErrorKind::kInvalidInput, "FFT size must be positive");
}
Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::Forward(std::span<Complex> data) const {
  if (data.size() != size_) Fail(ErrorKind::kInvalidInput, "FFT buffer size mismatch");
  engine_->in.assign(data.begin(), data.end());
  engine_->fft.fwd(engine_->out, engine_->in);
  std::copy(engine_->out.begin(), engine_->out.end(), data.begin());
}

void Fft::Inverse(std::span<Complex> data) const {
  if (data.size() != size_) Fail(ErrorKind::kInvalidInput, "FFT buffer size mismatch");
  engine_->in.assign(data.begin(), data.end());
  engine_->fft.inv(engine_->out, engine_->in);
  std::copy(engine_->out.begin(), engine_->out.end(), data.begin());
}

std::vector<Complex> Fft::ForwardReal(std::span<const double> frame) const {
  if (frame.size() != size_) Fail(ErrorKind::kInvalidInput, "FFT frame size mismatch");
  engine_->real.assign(frame.begin(), frame.end());
  std::vector<Complex> bins;
  engine_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  engine_->fft.fwd(bins, engine_->real);
  engine_->fft.ClearFlag(Eigen::FFT<double>::HalfSpectrum);
  bins.resize(size_ / 2 + 1);
  return bins;
}

std::vector<double> Fft::InverseReal(std::span<const Complex> bins) const {
  if (bins.size() != size_ / 2 + 1)
    Fail(ErrorKind::kInvalidInput, "inverse real FFT expects size/2+1 bins");
  // Hermitian extension; DC and (even-size) Nyquist of a real signal are real.
  std::vector<Complex> full(size_);
  for (std::size_t k = 0; k < bins.size(); ++k) full[k] = bins[k];
  full[0] = Complex(bins.front().real(), 0.0);
  if (size_ % 2 == 0) full[size_ / 2] = Complex(bins.back().real(), 0.0);
  for (std::size_t k = 1; k < (size_ + 1) / 2; ++k) full[size_ - k] = std::conj(bins[k]);
  engine_->fft.inv(engine_->out, full);
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = engine_->out[i].real();
  return out;
}

// ---------------------------------------------------------------------------
// Windows

Window ParseWindow(std::string_view name) {
  if (name == "hann") return Window::kHann;
  if (name == "sqrt_hann") return Window::kSqrtHann;
  if (name == "rect") return Window::kRect;
  Fail(ErrorKind::kConfig, "unknown window '" + std::string(name) + "'");
}

std::string_view WindowName(Window w) {
  switch (w) {
    case Window::kHann: return "hann";
    case Window::kSqrtHann: return "sqrt_hann";
    case Window::kRect: return "rect";
  }
  return "hann";
}

std::vector<double> MakeWindow(Window w, std::size_t length) {
  std::vector<double> out(length, 1.0);
  if (w == Window::kRect) return out;
  for (std::size_t i = 0; i < length; ++i) {
    const double hann =
        0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(length));
    out[i] = (w == Window::kHann) ? hann : std::sqrt(hann);
  }
  return out;
}

void StftParams::Validate() const {
  if (!IsPowerOfTwo(frame_size) || frame_size < 2)
    Fail(ErrorKind::kInvalidInput,
         "frame size must be a power of two >= 2, got " + std::to_string(frame_size));
  if (hop == 0 || hop > frame_size)
    Fail(ErrorKind::kInvalidInput,
         "hop must satisfy 0 < hop <= frame size, got " + std::to_string(hop));
}

bool SatisfiesCola(const StftParams& params) {
  params.Validate();
  const auto w = MakeWindow(params.window, params.frame_size);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t n = 0; n < params.hop; ++n) {
    double s = 0.0;
    for (std::size_t m = n; m < params.frame_size; m += params.hop) s += w[m] * w[m];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return hi > 0.0 && (hi - lo) <= 1e-9 * hi;
}

// ---------------------------------------------------------------------------
// STFT / ISTFT

Spectrogram Stft(const AudioClip& clip, const StftParams& params) {
  params.Validate();
  const std::size_t n = clip.size();
  const std::size_t frame = params.frame_size;
  if (n < frame)
    Fail(ErrorKind::kInvalidInput,
         "clip of " + std::to_string(n) + " samples is shorter than one frame (" +
             std::to_string(frame) + ")");

  const std::size_t pad = frame / 2;
  const auto x = clip.samples();
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    padded[i] = x[pad - i];
    padded[pad + n + i] = x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

  const Fft fft(frame);
  const auto window = MakeWindow(params.window, frame);
  const std::size_t count = 1 + (padded.size() - frame) / params.hop;

  Spectrogram spec;
  spec.params = params;
  spec.sample_rate = clip.sample_rate();
  spec.signal_length = n;
  spec.centered = true;
  spec.frames.reserve(count);
  std::vector<double> buf(frame);
  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t start = f * params.hop;
    for (std::size_t i = 0; i < frame; ++i) buf[i] = padded[start + i] * window[i];
    spec.frames.push_back(fft.ForwardReal(buf));
  }
  return spec;
}

std::vector<double> IstftSamples(const Spectrogram& spec) {
  const auto& params = spec.params;
  params.Validate();
  if (!SatisfiesCola(params))
    Fail(ErrorKind::kConfig,
         "window '" + std::string(WindowName(params.window)) + "' with frame " +
             std::to_string(params.frame_size) + " and hop " +
             std::to_string(params.hop) + " violates constant overlap-add");
  if (spec.frames.empty()) Fail(ErrorKind::kInvalidInput, "spectrogram has no frames");

  const std::size_t frame = params.frame_size;
  const std::size_t total = frame + (spec.frames.size() - 1) * params.hop;
  const Fft fft(frame);
  const auto window = MakeWindow(params.window, frame);

  std::vector<double> acc(total, 0.0);
  std::vector<double> weight(total, 0.0);
  for (std::size_t f = 0; f < spec.frames.size(); ++f) {
    if (spec.frames[f].size() != spec.num_bins())
      Fail(ErrorKind::kInvalidInput, "spectrogram frame has wrong bin count");
    const auto time = fft.InverseReal(spec.frames[f]);
    const std::size_t start = f * params.hop;
    for (std::size_t i = 0; i < frame; ++i) {
      acc[start + i] += time[i] * window[i];
      weight[start + i] += window[i] * window[i];
    }
  }
  const double peak_weight = *std::max_element(weight.begin(), weight.end());
  for (std::size_t i = 0; i < total; ++i) {
    acc[i] = weight[i] > 1e-10 * peak_weight ? acc[i] / weight[i] : 0.0;
  }

  if (!spec.centered) return acc;
  const std::size_t pad = frame / 2;
  const std::size_t length =
      spec.signal_length > 0 ? spec.signal_length : total - frame;
  std::vector<double> out(length, 0.0);
  for (std::size_t i = 0; i < length && pad + i < total; ++i) out[i] = acc[pad + i];
  return out;
}

AudioClip Istft(const Spectrogram& spec) {
  auto samples = IstftSamples(spec);
  HardClip(samples);
  return AudioClip(std::move(samples), spec.sample_rate);
}

// ---------------------------------------------------------------------------
// Resampling and measurement

std::vector<double> ResampleToLength(std::span<const double> x, std::size_t out_length) {
  if (x.empty() || out_length == 0)
    Fail(ErrorKind::kInvalidInput, "resampling requires non-empty input and output");
  if (out_length == x.size()) return {x.begin(), x.end()};

  constexpr double kZeroCrossings = 32.0;
  const double step = static_cast<double>(x.size()) / static_cast<double>(out_length);
  const double cutoff = std::min(1.0, 1.0 / step);
  const double half_width = kZeroCrossings / cutoff;
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> out(out_length);
  for (std::size_t m = 0; m < out_length; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double d = t - static_cast<double>(i);
      const double u = d / half_width;
      if (std::abs(u) >= 1.0) continue;
      const double arg = kPi * cutoff * d;
      const double sinc = (arg == 0.0) ? 1.0 : std::sin(arg) / arg;
      const double taper = 0.5 * (1.0 + std::cos(kPi * u));
      acc += x[static_cast<std::size_t>(i)] * cutoff * sinc * taper;
    }
    out[m] = acc;
  }
  return out;
}

namespace {

std::vector<double> PowerSpectrum(const AudioClip& clip, std::size_t min_fft) {
  const std::size_t n = clip.size();
  const std::size_t nfft = std::bit_ceil(std::max<std::size_t>(min_fft, 2));
  std::vector<Complex> buf(nfft);
  const auto x = clip.samples();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = n > 1 ? 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                                 static_cast<double>(n - 1))
                           : 1.0;
    buf[i] = x[i] * w;
  }
  Fft(nfft).Forward(buf);
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

}  // namespace

double DominantFrequency(const AudioClip& clip, double lo_hz, double hi_hz) {
  const auto power = PowerSpectrum(clip, 4 * clip.size());
  const std::size_t nfft = (power.size() - 1) * 2;
  const double bin_hz = static_cast<double>(clip.sample_rate()) / static_cast<double>(nfft);
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::ceil(lo_hz / bin_hz)));
  const auto hi = std::min(power.size() - 2, static_cast<std::size_t>(std::floor(hi_hz / bin_hz)));
  if (lo > hi) Fail(ErrorKind::kInvalidInput, "empty frequency band");

  std::size_t best = lo;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (power[k] > power[best]) best = k;
  }
  if (power[best] <= 0.0) return 0.0;
  const double a = std::log(power[best - 1] + 1e-300);
  const double b = std::log(power[best] + 1e-300);
  const double c = std::log(power[best + 1] + 1e-300);
  const double denom = a - 2.0 * b + c;
  const double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return (static_cast<double>(best) + offset) * bin_hz;
}

double SpectralCentroid(const AudioClip& clip) {
  const auto power = PowerSpectrum(clip, clip.size());
  const std::size_t nfft = (power.size() - 1) * 2;
  const double bin_hz = static_cast<double>(clip.sample_rate()) / static_cast<double>(nfft);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    num += static_cast<double>(k) * bin_hz * power[k];
    den += power[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace voxtrig
