// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"
#include "voxtrig/error.hpp"
#include "voxtrig/spectral.hpp"

using namespace voxtrig;
using namespace voxtrig::testing;

namespace {

// Direct O(N^2) DFT; the oracle for the radix-2 transform.
std::vector<Complex> NaiveDft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / n);
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("FFT matches a direct DFT") {
  for (std::size_t n : {2u, 8u, 12u, 64u, 256u}) {
    const auto x = RandomSignal(n, n);
    const auto fast = Fft(n).ForwardReal(x);
    const auto slow = NaiveDft(x);
    for (std::size_t k = 0; k < slow.size(); ++k) {
      CHECK(std::abs(fast[k] - slow[k]) < 1e-9 * n);
    }
    const auto back = Fft(n).InverseReal(fast);
    for (std::size_t t = 0; t < n; ++t) CHECK(back[t] == doctest::Approx(x[t]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(Fft(0), Error);
}

TEST_CASE("window parsing") {
  CHECK(ParseWindow("hann") == Window::kHann);
  CHECK(ParseWindow("sqrt_hann") == Window::kSqrtHann);
  CHECK(ParseWindow("rect") == Window::kRect);
  CHECK_THROWS_AS(ParseWindow("kaiser"), Error);
  CHECK(WindowName(Window::kSqrtHann) == "sqrt_hann");
}

TEST_CASE("COLA check") {
  CHECK(SatisfiesCola({1024, 256, Window::kHann}));
  CHECK(SatisfiesCola({1024, 512, Window::kSqrtHann}));
  CHECK(SatisfiesCola({512, 512, Window::kRect}));
  CHECK_FALSE(SatisfiesCola({1024, 700, Window::kHann}));
}

TEST_CASE("1 kHz tone peaks at bin 64") {
  const auto spec = Stft(Tone(1000.0), {});
  REQUIRE(spec.num_bins() == 513);
  // frames = 1 + floor(16000 / 256) on the padded signal
  CHECK(spec.frames.size() == 63);
  // Frames 0 and 62 reach into the reflected padding, where a sine at phase
  // zero folds into its own negative; every frame fully inside the clip peaks at 64.
  for (std::size_t f = 2; f + 2 < spec.frames.size(); ++f) {
    const auto& frame = spec.frames[f];
    const auto peak = std::max_element(frame.begin(), frame.end(), [](Complex a, Complex b) {
      return std::abs(a) < std::abs(b);
    });
    REQUIRE(peak - frame.begin() == 64);
  }
}

TEST_CASE("zero signal gives zero coefficients and back") {
  const auto spec = Stft(AudioClip(std::vector<double>(4096, 0.0), 16000));
  for (const auto& f : spec.frames)
    for (const auto& c : f) REQUIRE(c == Complex{});
  const auto back = Istft(spec);
  CHECK(back.size() == 4096);
  for (double v : back.samples()) REQUIRE(v == 0.0);
}

TEST_CASE("short clip is rejected") {
  CHECK_THROWS_AS(Stft(AudioClip(std::vector<double>(1000, 0.1), 16000)), Error);
}

TEST_CASE("round trip SNR exceeds 40 dB") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = RandomClip(16000, seed);
    const auto y = Istft(Stft(x));
    REQUIRE(y.size() == x.size());
    CHECK(SnrDb(x.samples(), y.samples()) > 40.0);
  }
  const auto x = RandomClip(5000, 9);
  CHECK(SnrDb(x.samples(), Istft(Stft(x, {512, 128, Window::kSqrtHann})).samples()) > 40.0);
}

TEST_CASE("single-frame spectrogram resynthesizes its windowed sinusoid") {
  const std::size_t n = 256;
  const auto w = MakeWindow(Window::kHann, n);
  std::vector<double> s(n), ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = 0.7 * std::cos(2.0 * std::numbers::pi * 5.25 * i / n + 0.3);
    ws[i] = w[i] * s[i];
  }
  Spectrogram spec;
  spec.params = {n, n / 4, Window::kHann};
  spec.centered = false;
  spec.frames = {NaiveDft(ws)};
  const auto out = IstftSamples(spec);
  REQUIRE(out.size() == n);
  for (std::size_t i = 0; i < n; ++i) {
    // Window compensation restores the sinusoid wherever the window is nonzero.
    CHECK(out[i] * w[i] == doctest::Approx(ws[i]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("non-COLA params fail at synthesis") {
  auto spec = Stft(RandomClip(4096, 4), {1024, 256, Window::kHann});
  spec.params.hop = 700;
  CHECK_THROWS_AS(IstftSamples(spec), Error);
}

TEST_CASE("resampling preserves length contract and a slow sinusoid") {
  const auto x = Tone(200.0, 2000).data();
  const auto y = ResampleToLength(x, 1000);
  CHECK(y.size() == 1000);
  // Half the samples: same waveform at double the step.
  for (std::size_t i = 100; i < 900; ++i) CHECK(y[i] == doctest::Approx(x[2 * i]).epsilon(0.02).scale(1.0));
  CHECK(ResampleToLength(x, x.size()) == x);
}

TEST_CASE("dominant frequency estimator") {
  for (double hz : {220.0, 440.0, 587.33, 1760.0}) {
    CHECK(DominantFrequency(Tone(hz)) == doctest::Approx(hz).epsilon(0.002));
  }
}

TEST_CASE("spectral centroid orders tones") {
  CHECK(SpectralCentroid(Tone(300.0)) < SpectralCentroid(Tone(2000.0)));
  CHECK(SpectralCentroid(Tone(1000.0)) == doctest::Approx(1000.0).epsilon(0.05));
}
