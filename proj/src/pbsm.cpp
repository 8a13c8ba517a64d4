// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/pbsm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "voxtrig/error.hpp"

namespace voxtrig {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double WrapPhase(double phase) {
  return phase - kTwoPi * std::round(phase / kTwoPi);
}
}  // namespace

void HighPitchSpec::Validate(int sample_rate) const {
  if (!(frequency_hz > 0.0) || frequency_hz >= sample_rate / 2.0)
    Fail(ErrorKind::kInvalidInput,
         "tone frequency " + std::to_string(frequency_hz) +
             " Hz must lie in (0, Nyquist=" + std::to_string(sample_rate / 2.0) + ")");
  if (!(duration_ms > 0.0))
    Fail(ErrorKind::kInvalidInput, "tone duration must be positive");
  if (!(amplitude_ratio >= 0.0) || !std::isfinite(amplitude_ratio))
    Fail(ErrorKind::kInvalidInput, "tone amplitude ratio must be non-negative");
  if (!(fade_ms >= 0.0)) Fail(ErrorKind::kInvalidInput, "fade length must be non-negative");
}

InsertAt ParseInsertAt(std::string_view name) {
  if (name == "segment_end") return InsertAt::kSegmentEnd;
  if (name == "segment_start") return InsertAt::kSegmentStart;
  Fail(ErrorKind::kConfig, "unknown insertion point '" + std::string(name) + "'");
}

std::string_view InsertAtName(InsertAt at) {
  return at == InsertAt::kSegmentEnd ? "segment_end" : "segment_start";
}

void PbsmConfig::Validate() const {
  if (semitones < 0)
    Fail(ErrorKind::kInvalidInput, "semitones must be >= 0, got " + std::to_string(semitones));
  if (!(segment_ms > 0.0)) Fail(ErrorKind::kInvalidInput, "segment length must be positive");
  stft.Validate();
}

std::size_t MsToSamples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

double SemitoneFactor(int semitones) { return std::exp2(semitones / 12.0); }

std::vector<double> ShiftPitchRaw(const AudioClip& clip, double factor,
                                  const StftParams& stft) {
  stft.Validate();
  if (!(factor > 0.0) || !std::isfinite(factor))
    Fail(ErrorKind::kInvalidInput, "pitch factor must be positive");
  if (clip.size() < stft.frame_size)
    Fail(ErrorKind::kInvalidInput,
         "clip of " + std::to_string(clip.size()) + " samples is shorter than one frame (" +
             std::to_string(stft.frame_size) + ")");
  if (factor == 1.0) return clip.data();

  const Spectrogram analysis = Stft(clip, stft);
  const std::size_t frames = analysis.frames.size();
  const std::size_t bins = analysis.num_bins();
  const double rate = 1.0 / factor;

  std::vector<double> advance(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    advance[k] = kTwoPi * static_cast<double>(stft.hop) * static_cast<double>(k) /
                 static_cast<double>(stft.frame_size);
  }
  std::vector<double> phase(bins);
  for (std::size_t k = 0; k < bins; ++k) phase[k] = std::arg(analysis.frames[0][k]);

  // Time stretch: read the analysis frames at fractional positions, with
  // linearly interpolated magnitudes and accumulated phase.
  Spectrogram stretched;
  stretched.params = stft;
  stretched.sample_rate = clip.sample_rate();
  stretched.centered = true;
  stretched.signal_length =
      static_cast<std::size_t>(std::llround(static_cast<double>(clip.size()) * factor));
  const std::vector<Complex> silent(bins);
  for (std::size_t step = 0;; ++step) {
    const double t = static_cast<double>(step) * rate;
    if (t >= static_cast<double>(frames)) break;
    const auto c = static_cast<std::size_t>(t);
    const double a = t - static_cast<double>(c);
    const auto& left = analysis.frames[c];
    const auto& right = c + 1 < frames ? analysis.frames[c + 1] : silent;
    std::vector<Complex> out(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      const double mag = (1.0 - a) * std::abs(left[k]) + a * std::abs(right[k]);
      out[k] = std::polar(mag, phase[k]);
      const double dphi = WrapPhase(std::arg(right[k]) - std::arg(left[k]) - advance[k]);
      phase[k] += advance[k] + dphi;
    }
    stretched.frames.push_back(std::move(out));
  }

  const auto long_signal = IstftSamples(stretched);
  return ResampleToLength(long_signal, clip.size());
}

AudioClip PitchShift(const AudioClip& clip, int semitones, const StftParams& stft) {
  if (semitones < 0)
    Fail(ErrorKind::kInvalidInput, "semitones must be >= 0, got " + std::to_string(semitones));
  auto shifted = ShiftPitchRaw(clip, SemitoneFactor(semitones), stft);
  HardClip(shifted);
  return AudioClip(std::move(shifted), clip.sample_rate());
}

std::size_t LocateMaxEnergy(std::span<const double> x, std::size_t window_len) {
  if (window_len == 0 || window_len > x.size())
    Fail(ErrorKind::kInvalidInput,
         "window length " + std::to_string(window_len) + " must lie in [1, " +
             std::to_string(x.size()) + "]");
  const std::size_t count = x.size() - window_len + 1;
  std::vector<long double> prefix(x.size() + 1, 0.0L);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + std::abs(x[i]);

  long double best = 0.0L;
  for (std::size_t i = 0; i < count; ++i) {
    best = std::max(best, prefix[i + window_len] - prefix[i]);
  }
  // Prefix differences carry rounding error; windows within it of the
  // maximum are ties and resolve to the first one.
  const long double tol = 1e-12L * best;
  for (std::size_t i = 0; i < count; ++i) {
    if (prefix[i + window_len] - prefix[i] >= best - tol) return i + window_len;
  }
  return window_len;
}

std::size_t LocateMaxEnergy(const AudioClip& clip, std::size_t window_len) {
  return LocateMaxEnergy(clip.samples(), window_len);
}

AudioClip SynthesizeHighPitch(const HighPitchSpec& spec, int sample_rate, double target_rms) {
  spec.Validate(sample_rate);
  if (!(target_rms >= 0.0) || !std::isfinite(target_rms))
    Fail(ErrorKind::kInvalidInput, "target RMS must be non-negative");
  const std::size_t n = MsToSamples(spec.duration_ms, sample_rate);
  if (n == 0) Fail(ErrorKind::kInvalidInput, "tone is shorter than one sample");

  const std::size_t fade = std::min(MsToSamples(spec.fade_ms, sample_rate), n / 2);
  std::vector<double> tone(n);
  const double omega = kTwoPi * spec.frequency_hz / sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    double gain = 1.0;
    const std::size_t edge = std::min(i, n - 1 - i);
    if (edge < fade) {
      gain = 0.5 - 0.5 * std::cos(kPi * (static_cast<double>(edge) + 0.5) /
                                  static_cast<double>(fade));
    }
    tone[i] = gain * std::sin(omega * static_cast<double>(i));
  }
  const double wanted = spec.amplitude_ratio * target_rms;
  const double actual = Rms(tone);
  const double scale = (wanted > 0.0 && actual > 0.0) ? wanted / actual : 0.0;
  for (double& v : tone) v *= scale;
  return AudioClip(std::move(tone), sample_rate);
}

std::vector<double> InjectRaw(std::span<const double> x, std::span<const double> h,
                              std::size_t start) {
  if (h.empty()) Fail(ErrorKind::kInvalidInput, "injected signal is empty");
  if (start > x.size() || h.size() > x.size() - start)
    Fail(ErrorKind::kInvalidInput,
         "signal of " + std::to_string(h.size()) + " samples at index " +
             std::to_string(start) + " overruns clip of " + std::to_string(x.size()));
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < h.size(); ++i) out[start + i] += h[i];
  return out;
}

AudioClip InjectSignal(const AudioClip& clip, const AudioClip& h, std::size_t start) {
  if (clip.sample_rate() != h.sample_rate())
    Fail(ErrorKind::kInvalidInput, "sample rates of clip and injected signal differ");
  auto out = InjectRaw(clip.samples(), h.samples(), start);
  HardClip(out);
  return AudioClip(std::move(out), clip.sample_rate());
}

PbsmResult ApplyPbsmDetailed(const AudioClip& clip, const PbsmConfig& cfg) {
  cfg.Validate();
  cfg.signal.Validate(clip.sample_rate());
  const int rate = clip.sample_rate();

  const auto boosted = ShiftPitchRaw(clip, SemitoneFactor(cfg.semitones), cfg.stft);

  const std::size_t window = MsToSamples(cfg.segment_ms, rate);
  if (window == 0 || window > boosted.size())
    Fail(ErrorKind::kInvalidInput,
         "segment of " + std::to_string(window) + " samples does not fit clip of " +
             std::to_string(boosted.size()));
  const std::size_t end = LocateMaxEnergy(boosted, window);
  const double host_rms =
      Rms(std::span<const double>(boosted).subspan(end - window, window));

  const AudioClip tone =
      SynthesizeHighPitch(cfg.signal, rate, std::max(host_rms, kHostRmsFloor));
  if (tone.size() > boosted.size())
    Fail(ErrorKind::kInvalidInput, "tone is longer than the clip");

  std::size_t start = cfg.insert_at == InsertAt::kSegmentEnd ? end : end - window;
  start = std::min(start, boosted.size() - tone.size());

  auto mixed = InjectRaw(boosted, tone.samples(), start);
  const double overage = HardClip(mixed);
  return PbsmResult{AudioClip(std::move(mixed), rate), end, start, host_rms, Rms(tone.samples()),
                    overage};
}

AudioClip ApplyPbsm(const AudioClip& clip, const PbsmConfig& cfg) {
  return ApplyPbsmDetailed(clip, cfg).audio;
}

AudioClip ApplyPitchOnly(const AudioClip& clip, const PbsmConfig& cfg) {
  cfg.Validate();
  return PitchShift(clip, cfg.semitones, cfg.stft);
}

}  // namespace voxtrig
