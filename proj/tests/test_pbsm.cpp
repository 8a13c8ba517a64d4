// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "voxtrig/error.hpp"
#include "voxtrig/pbsm.hpp"
#include "voxtrig/spectral.hpp"

using namespace voxtrig;
using namespace voxtrig::testing;

using oracle::MaxEnergyEnd;

TEST_CASE("semitone factor") {
  CHECK(SemitoneFactor(0) == 1.0);
  CHECK(SemitoneFactor(12) == 2.0);
  CHECK(SemitoneFactor(5) == doctest::Approx(1.3348398541700344).epsilon(1e-15));
}

TEST_CASE("pitch shift of 440 Hz by 5 semitones lands at 587.3 Hz") {
  const auto out = PitchShift(Tone(440.0), 5);
  CHECK(DominantFrequency(out) == doctest::Approx(587.3295358348151).epsilon(0.02));
  CHECK(out.size() == 16000);
}

TEST_CASE("zero semitones is an identity") {
  const auto x = RandomClip(16000, 21);
  const auto y = PitchShift(x, 0);
  CHECK(SnrDb(x.samples(), y.samples()) > 40.0);
}

TEST_CASE("negative semitones are rejected") {
  CHECK_THROWS_AS(PitchShift(Tone(440.0), -1), Error);
}

TEST_CASE("energy locator fixtures") {
  CHECK(LocateMaxEnergy(std::vector<double>{0, 0, 1, 1, 0, 0}, 2) == 4);
  const std::vector<double> flat(500, 0.3);
  for (std::size_t L : {1u, 7u, 100u, 500u}) CHECK(LocateMaxEnergy(flat, L) == L);
  CHECK_THROWS_AS(LocateMaxEnergy(flat, 501), Error);
  CHECK_THROWS_AS(LocateMaxEnergy(flat, 0), Error);
}

TEST_CASE("energy locator agrees with brute force on a 16000-sample clip") {
  const auto x = RandomSignal(16000, 77);
  CHECK(LocateMaxEnergy(x, 1600) == MaxEnergyEnd(x, 1600));
}

TEST_CASE("tone synthesis") {
  HighPitchSpec spec;
  const auto tone = SynthesizeHighPitch(spec, 16000, 0.1);
  CHECK(tone.size() == 1600);
  CHECK(Rms(tone.samples()) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(DominantFrequency(tone, 50, 7900) == doctest::Approx(6000).epsilon(0.01));
  spec.amplitude_ratio = 0.0;
  const auto silent = SynthesizeHighPitch(spec, 16000, 0.1);
  for (double v : silent.samples()) REQUIRE(v == 0.0);
  spec.frequency_hz = 9000;  // above Nyquist
  CHECK_THROWS_AS(SynthesizeHighPitch(spec, 16000, 0.1), Error);
}

TEST_CASE("injection locality and inversion") {
  const auto x = RandomClip(4000, 5);
  const AudioClip h(RandomSignal(300, 6, 0.2), 16000);
  const std::size_t T = 1000;
  const auto y = InjectSignal(x, h, T);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i < T || i >= T + h.size()) REQUIRE(y.samples()[i] == x.samples()[i]);
  }
  // No clipping possible: |x| <= 0.5, |h| <= 0.2.
  for (std::size_t i = 0; i < h.size(); ++i)
    REQUIRE(y.samples()[T + i] - h.samples()[i] == doctest::Approx(x.samples()[T + i]).epsilon(1e-12));

  const AudioClip zero(std::vector<double>(4000, 0.0), 16000);
  const auto z = InjectSignal(zero, h, T);
  for (std::size_t i = 0; i < h.size(); ++i) REQUIRE(z.samples()[T + i] == h.samples()[i]);
  CHECK_THROWS_AS(InjectSignal(zero, h, 3800), Error);
}

TEST_CASE("PBSM on a toy utterance raises pitch and inserts the tone at the segment end") {
  const auto clip = LoadWav(ToyDir() / "test" / "test_4_left.wav");
  PbsmConfig cfg;
  const auto r = ApplyPbsmDetailed(clip, cfg);
  const auto boosted = PitchShift(clip, 5);
  CHECK(r.segment_end == MaxEnergyEnd(boosted.data(), 1600));
  CHECK(r.insert_index == std::min<std::size_t>(r.segment_end, clip.size() - 1600));
  CHECK(r.tone_rms == doctest::Approx(0.5 * r.host_rms).epsilon(1e-9));
  const double ratio = DominantFrequency(r.audio) / DominantFrequency(clip);
  CHECK(ratio == doctest::Approx(SemitoneFactor(5)).epsilon(0.02));
  // Outside the tone the output is the pitch-boosted clip.
  for (std::size_t i = 0; i < r.insert_index; ++i)
    REQUIRE(r.audio.samples()[i] == boosted.samples()[i]);
  // Inside, the residual is the 6 kHz tone.
  std::vector<double> residual(1600);
  for (std::size_t i = 0; i < 1600; ++i)
    residual[i] = r.audio.samples()[r.insert_index + i] - boosted.samples()[r.insert_index + i];
  CHECK(DominantFrequency(AudioClip(residual, 16000), 50, 7900) == doctest::Approx(6000).epsilon(0.01));
}

TEST_CASE("segment-start insertion") {
  const auto clip = LoadWav(ToyDir() / "test" / "test_0_yes.wav");
  PbsmConfig cfg;
  cfg.insert_at = InsertAt::kSegmentStart;
  const auto r = ApplyPbsmDetailed(clip, cfg);
  CHECK(r.insert_index == r.segment_end - 1600);
}

TEST_CASE("PBSM on silence injects the floor-scaled tone after the first window") {
  const AudioClip silence(std::vector<double>(16000, 0.0), 16000);
  const auto r = ApplyPbsmDetailed(silence, {});
  CHECK(r.segment_end == 1600);
  CHECK(r.insert_index == 1600);
  CHECK(r.tone_rms == doctest::Approx(0.5 * kHostRmsFloor).epsilon(1e-9));
  const auto tone = SynthesizeHighPitch({}, 16000, kHostRmsFloor);
  for (std::size_t i = 0; i < 16000; ++i) {
    const double expect = (i >= 1600 && i < 3200) ? tone.samples()[i - 1600] : 0.0;
    REQUIRE(r.audio.samples()[i] == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("neutral configuration is an identity, also when applied twice") {
  const auto clip = LoadWav(ToyDir() / "train" / "train_8_left.wav");
  PbsmConfig cfg;
  cfg.semitones = 0;
  cfg.signal.amplitude_ratio = 0.0;
  const auto twice = ApplyPbsm(ApplyPbsm(clip, cfg), cfg);
  CHECK(SnrDb(clip.samples(), twice.samples()) > 40.0);
}

TEST_CASE("pitch-only equals PBSM with a silent tone") {
  const auto clip = LoadWav(ToyDir() / "train" / "train_3_no.wav");
  PbsmConfig cfg;
  const auto only = ApplyPitchOnly(clip, cfg);
  cfg.signal.amplitude_ratio = 0.0;
  CHECK(only == ApplyPbsm(clip, cfg));
  CHECK(DominantFrequency(ApplyPitchOnly(Tone(440.0), {})) ==
        doctest::Approx(587.3295358348151).epsilon(0.02));
}

TEST_CASE("PBSM is deterministic") {
  const auto clip = RandomClip(16000, 3);
  CHECK(ApplyPbsm(clip, {}) == ApplyPbsm(clip, {}));
}

TEST_CASE("configuration validation") {
  PbsmConfig cfg;
  cfg.segment_ms = 0;
  CHECK_THROWS_AS(cfg.Validate(), Error);
  cfg = {};
  cfg.segment_ms = 2000;
  CHECK_THROWS_AS(ApplyPbsm(Tone(440.0), cfg), Error);
  CHECK(ParseInsertAt("segment_start") == InsertAt::kSegmentStart);
  CHECK_THROWS_AS(ParseInsertAt("middle"), Error);
}
