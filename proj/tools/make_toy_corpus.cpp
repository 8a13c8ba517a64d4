// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Writes the bundled toy keyword corpus: synthetic one-second "utterances"
// (harmonic source, two formants, syllable envelope) for ten command words,
// plus a speaker-embedding table. Output is deterministic.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voxtrig/audio.hpp"
#include "voxtrig/csv.hpp"

namespace {

constexpr int kRate = 16000;
const std::vector<std::string> kClasses = {"yes", "no",  "up",  "down", "left",
                                           "right", "on", "off", "stop", "go"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [lo, hi) from the top 53 bits.
  double Uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Gaussian() {
    const double u1 = Uniform(1e-12, 1.0);
    const double u2 = Uniform(0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

voxtrig::AudioClip Utterance(int word, int speaker, Rng& rng) {
  const double f0 = 95.0 + 18.0 * speaker + rng.Uniform(-4.0, 4.0);
  const double formant1 = 350.0 + 60.0 * word;
  const double formant2 = 2400.0 - 110.0 * word;
  const double onset = rng.Uniform(0.12, 0.30);
  const double length = rng.Uniform(0.35, 0.55);
  const double glide = rng.Uniform(-0.15, 0.15);

  std::vector<double> x(kRate, 0.0);
  double phase = 0.0;
  for (int n = 0; n < kRate; ++n) {
    const double t = static_cast<double>(n) / kRate;
    const double u = (t - onset) / length;
    double env = 0.0;
    if (u > 0.0 && u < 1.0) env = std::pow(std::sin(std::numbers::pi * u), 1.5);
    const double f = f0 * (1.0 + glide * u);
    phase += 2.0 * std::numbers::pi * f / kRate;
    double v = 0.0;
    for (int h = 1; h * f < 5000.0; ++h) {
      const double fh = h * f;
      const double g = std::exp(-std::pow((fh - formant1) / 180.0, 2)) +
                       0.5 * std::exp(-std::pow((fh - formant2) / 260.0, 2)) + 0.02;
      v += g * std::sin(h * phase) / std::sqrt(static_cast<double>(h));
    }
    x[n] = 0.25 * env * v + 0.002 * rng.Gaussian();
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  for (double& v : x) v *= 0.6 / peak;
  return voxtrig::AudioClip(std::move(x), kRate);
}

void WriteSet(const std::filesystem::path& root, const std::string& split,
              const std::vector<int>& words, std::uint64_t seed) {
  Rng rng(seed);
  std::filesystem::create_directories(root / split);
  std::ofstream manifest(root / (split + "_manifest.csv"));
  manifest << "sample_id,path,label\n";
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int word = words[i];
    const int speaker = static_cast<int>(i % 5);
    const std::string id = split + "_" + std::to_string(i) + "_" + kClasses[word];
    const std::string rel = split + "/" + id + ".wav";
    voxtrig::SaveWav(Utterance(word, speaker, rng), root / rel);
    manifest << id << ',' << rel << ',' << word << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the toy keyword corpus"};
  std::string out = "tests/data/toy";
  std::uint64_t seed = 20240;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path root(out);
  std::vector<int> train;
  for (int w = 0; w < 10; ++w) train.insert(train.end(), {w, w});
  WriteSet(root, "train", train, seed);
  WriteSet(root, "test", {0, 1, 2, 3, 4, 4, 5, 6, 7, 8}, seed + 1);

  Rng rng(seed + 2);
  std::ofstream emb(root / "embeddings.csv");
  voxtrig::csv::Row header{"id"};
  for (int d = 0; d < 512; ++d) header.push_back("v" + std::to_string(d));
  emb << voxtrig::csv::FormatRow(header);
  for (int k = 0; k < 20; ++k) {
    voxtrig::csv::Row row{"spk" + std::to_string(k)};
    for (int d = 0; d < 512; ++d) row.push_back(voxtrig::csv::FormatDouble(rng.Gaussian()));
    emb << voxtrig::csv::FormatRow(row);
  }
  std::cout << "wrote toy corpus to " << root << "\n";
  return 0;
}
