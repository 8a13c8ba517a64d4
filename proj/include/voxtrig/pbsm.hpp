// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Pitch boosting and sound masking (PBSM) trigger.
//
// The trigger raises the pitch of an utterance by a fixed number of
// semitones, finds the highest-energy segment of the boosted signal and
// mixes a short high-pitched tone in at that position.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "voxtrig/audio.hpp"
#include "voxtrig/spectral.hpp"

namespace voxtrig {

struct HighPitchSpec {
  double frequency_hz = 6000.0;
  double duration_ms = 100.0;
  // Tone RMS relative to the RMS of the host segment.
  double amplitude_ratio = 0.5;
  double fade_ms = 5.0;

  void Validate(int sample_rate) const;
};

// Where the tone starts relative to the located high-energy window.
enum class InsertAt { kSegmentEnd, kSegmentStart };

InsertAt ParseInsertAt(std::string_view name);
std::string_view InsertAtName(InsertAt at);

struct PbsmConfig {
  int semitones = 5;
  double segment_ms = 100.0;
  HighPitchSpec signal;
  StftParams stft;
  InsertAt insert_at = InsertAt::kSegmentEnd;

  void Validate() const;
};

// Host-segment RMS below this floor is raised to it before scaling the tone.
inline constexpr double kHostRmsFloor = 1e-4;

// 2^(semitones / 12).
double SemitoneFactor(int semitones);

// Duration-preserving pitch shift by an arbitrary positive factor:
// phase-vocoder time stretch by `factor`, then band-limited resampling back
// to the input length. Output is not clipped.
std::vector<double> ShiftPitchRaw(const AudioClip& clip, double factor,
                                  const StftParams& stft = {});

// Pitch shift by `semitones` >= 0; output has the input length and is
// hard-clipped to [-1, 1].
AudioClip PitchShift(const AudioClip& clip, int semitones, const StftParams& stft = {});

// End index T of the first length-`window_len` window with the largest sum of
// absolute amplitudes. T lies in [window_len, x.size()]. O(n).
std::size_t LocateMaxEnergy(std::span<const double> x, std::size_t window_len);
std::size_t LocateMaxEnergy(const AudioClip& clip, std::size_t window_len);

// Sine at spec.frequency_hz with raised-cosine fades whose RMS equals
// spec.amplitude_ratio * target_rms.
AudioClip SynthesizeHighPitch(const HighPitchSpec& spec, int sample_rate, double target_rms);

// Adds h to x starting at `start`; samples outside [start, start + |h|) are
// untouched. Not clipped. Throws unless start + |h| <= |x|.
std::vector<double> InjectRaw(std::span<const double> x, std::span<const double> h,
                              std::size_t start);

// InjectRaw followed by a hard clip.
AudioClip InjectSignal(const AudioClip& clip, const AudioClip& h, std::size_t start);

struct PbsmResult {
  AudioClip audio;
  // End of the located high-energy window in the boosted signal.
  std::size_t segment_end = 0;
  // First sample of the injected tone (after clamping).
  std::size_t insert_index = 0;
  double host_rms = 0.0;
  double tone_rms = 0.0;
  double peak_overage = 0.0;
};

PbsmResult ApplyPbsmDetailed(const AudioClip& clip, const PbsmConfig& cfg);
AudioClip ApplyPbsm(const AudioClip& clip, const PbsmConfig& cfg);

// Pitch boost only, no tone.
AudioClip ApplyPitchOnly(const AudioClip& clip, const PbsmConfig& cfg);

// Window length in samples for a duration in milliseconds (rounded).
std::size_t MsToSamples(double ms, int sample_rate);

}  // namespace voxtrig
