// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "voxtrig/error.hpp"
#include "voxtrig/spectral.hpp"
#include "voxtrig/vsvc.hpp"

using namespace voxtrig;
using namespace voxtrig::testing;

namespace {

EmbeddingSet Line(const std::vector<double>& positions) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> v;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    ids.push_back("p" + std::to_string(static_cast<int>(positions[i])));
    v.push_back({positions[i]});
  }
  return EmbeddingSet(ids, v);
}

std::filesystem::path Script(const std::filesystem::path& dir, const std::string& name,
                             const std::string& body) {
  const auto p = dir / name;
  WriteText(p, "#!/bin/sh\n" + body + "\n");
  std::filesystem::permissions(p, std::filesystem::perms::owner_all);
  return p;
}

}  // namespace

TEST_CASE("embedding parsing") {
  const auto e = ParseEmbeddings("id,v0,v1,v2\na,1,2,3\nb,4,5,6\n");
  CHECK(e.size() == 2);
  CHECK(e.dim() == 3);
  CHECK(e.vectors()[1][2] == 6.0);
  CHECK_THROWS_AS(ParseEmbeddings("id,v0\na,1\na,2\n"), Error);
  CHECK_THROWS_AS(ParseEmbeddings("id,v0\na,1\nb,nan\n"), Error);
  CHECK_THROWS_AS(ParseEmbeddings("id,v0\na,1\n"), Error);
  CHECK_THROWS_AS(ParseEmbeddings("id,v0,v1\na,1\nb,2,3\n"), Error);
}

TEST_CASE("bundled 20-speaker fixture loads") {
  const auto e = LoadEmbeddings(ToyDir() / "embeddings.csv");
  CHECK(e.size() == 20);
  CHECK(e.dim() == 512);
  for (const auto& v : e.vectors())
    for (double x : v) REQUIRE(std::isfinite(x));
}

TEST_CASE("similarity matrix entries") {
  const auto same = ComputeSimilarity(EmbeddingSet({"a", "b"}, {{1, 2}, {1, 2}}));
  CHECK(same.at(0, 1) == 0.0);
  const auto tri = ComputeSimilarity(EmbeddingSet({"a", "b"}, {{0, 0}, {3, 4}}));
  CHECK(tri.at(0, 1) == 5.0);
  CHECK(tri.at(1, 0) == 5.0);
  CHECK(tri.at(0, 0) == 0.0);
}

TEST_CASE("similarity matches reversed-order summation") {
  std::vector<std::vector<double>> v;
  std::vector<std::string> ids;
  for (int k = 0; k < 6; ++k) {
    v.push_back(RandomSignal(40, 100 + k, 3.0));
    ids.push_back("s" + std::to_string(k));
  }
  const auto sim = ComputeSimilarity(EmbeddingSet(ids, v));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      double acc = 0.0;
      for (std::size_t d = 40; d-- > 0;) acc += (v[j][d] - v[i][d]) * (v[j][d] - v[i][d]);
      CHECK(sim.at(i, j) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
      CHECK(sim.at(i, j) == sim.at(j, i));
    }
  }
}

TEST_CASE("matrix CSV has a header row and K data rows") {
  const auto csv = ComputeSimilarity(Line({0, 1, 5})).ToCsv();
  CHECK(csv.rfind("id,p0,p1,p5\np0,0,1,5\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("greedy selection fixtures") {
  const auto two = ComputeSimilarity(Line({0, 3}));
  CHECK(GreedySelect(two, 2) == std::vector<std::size_t>{0, 1});

  const auto line = ComputeSimilarity(Line({0, 1, 5, 6}));
  CHECK(GreedySelectIds(line, 3) == std::vector<std::string>{"p0", "p6", "p1"});
  const auto all = GreedySelect(line, 4);
  CHECK(all.size() == 4);
  CHECK(all[0] == 0);
  CHECK(all[1] == 3);
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 4);

  CHECK_THROWS_AS(GreedySelect(line, 5), Error);
  CHECK_THROWS_AS(GreedySelect(line, 1), Error);
}

TEST_CASE("greedy selection equals the reference on random matrices") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 9;
    std::vector<std::vector<double>> v(k);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < k; ++i) {
      // Small integer grid so ties occur.
      for (int d = 0; d < 2; ++d) v[i].push_back(static_cast<double>(rng() % 4));
      ids.push_back(std::to_string(i));
    }
    const auto sim = ComputeSimilarity(EmbeddingSet(ids, v));
    std::vector<std::vector<double>> d(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) d[i][j] = sim.at(i, j);
    const std::size_t m = 2 + rng() % (k - 1);
    REQUIRE(GreedySelect(sim, m) == oracle::MaxMinSelect(d, m));
  }
}

TEST_CASE("max-sum objective differs from max-min where it should") {
  // Positions 0, 10 seed. Candidates 5 (min 5, sum 10) and 9 (min 1, sum 10)...
  // and 4 (min 4, sum 10). Max-min picks 5; max-sum ties at 10 and takes the lowest index.
  const auto sim = ComputeSimilarity(Line({0, 10, 9, 5, 4}));
  CHECK(GreedySelect(sim, 3, SelectionObjective::kMaxMin)[2] == 3);
  CHECK(GreedySelect(sim, 3, SelectionObjective::kMaxSum)[2] == 2);
  CHECK(ParseSelectionObjective("max_sum") == SelectionObjective::kMaxSum);
  CHECK_THROWS_AS(ParseSelectionObjective("random"), Error);
}

TEST_CASE("default transform slots") {
  const auto one = DefaultTransformSlots(1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].warp_alpha == 0.8);
  const auto three = DefaultTransformSlots(3);
  REQUIRE(three.size() == 3);
  CHECK(three[0].warp_alpha == doctest::Approx(0.8));
  CHECK(three[1].warp_alpha == doctest::Approx(1.025));
  CHECK(three[2].warp_alpha == doctest::Approx(1.25));

  const auto t = AssignTransforms({"a", "b", "c"});
  CHECK(t[1].timbre_id == "b");
  CHECK(t[2].warp_alpha == doctest::Approx(1.25));
}

TEST_CASE("transform table rules") {
  CHECK_THROWS_AS(AssignTransforms({"a", "b"}, std::vector<TransformSlot>{{0.9, 1}, {0.9, 1}}), Error);
  CHECK_THROWS_AS(AssignTransforms({"a", "b"}, std::vector<TransformSlot>{{0.9, 1}}), Error);
  CHECK_THROWS_AS(AssignTransforms({"a"}, std::vector<TransformSlot>{{2.0, 0}}), Error);
  const auto dir = ScratchDir("slots");
  WriteText(dir / "t.csv", "warp_alpha,pitch_offset_semitones\n0.9,1\n1.1,-1\n");
  const auto slots = LoadTransformSlots(dir / "t.csv");
  REQUIRE(slots.size() == 2);
  CHECK(slots[1].pitch_offset_semitones == -1);
}

TEST_CASE("identity conversion") {
  const auto clip = LoadWav(ToyDir() / "test" / "test_1_no.wav");
  const auto out = ConvertVoice(clip, {"x", 1.0, 0, {}});
  CHECK(SnrDb(clip.samples(), out.samples()) > 40.0);
}

TEST_CASE("builtin conversion is deterministic") {
  const auto clip = LoadWav(ToyDir() / "test" / "test_2_up.wav");
  const TimbreTransform t{"x", 1.1, 2, {}};
  CHECK(ConvertVoice(clip, t) == ConvertVoice(clip, t));
}

TEST_CASE("warp above one raises the centroid of a 440 Hz tone") {
  const auto tone = Tone(440.0);
  const auto out = ConvertVoice(tone, {"x", 1.2, 0, {}});
  CHECK(SpectralCentroid(out) > SpectralCentroid(tone));
}

TEST_CASE("distinct transforms give audibly distinct outputs") {
  const auto clip = LoadWav(ToyDir() / "train" / "train_10_right.wav");
  const auto ts = AssignTransforms({"a", "b", "c"});
  std::vector<double> centroids;
  for (const auto& t : ts) centroids.push_back(SpectralCentroid(ConvertVoice(clip, t)));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      CHECK(std::abs(centroids[i] - centroids[j]) > 0.01 * std::max(centroids[i], centroids[j]));
}

TEST_CASE("external backend protocol") {
  const auto dir = ScratchDir("backend");
  const auto clip = LoadWav(ToyDir() / "test" / "test_3_down.wav");
  // Arguments arrive as: --in X --out Y --timbre ID
  const auto copy = Script(dir, "copy.sh", "cp \"$2\" \"$4\"");
  const auto out = ConvertVoice(clip, {"spk7", 1.0, 0, {copy.string()}});
  CHECK(SnrDb(clip.samples(), out.samples()) > 80.0);

  const auto fail = Script(dir, "fail.sh", "exit 1");
  try {
    ConvertVoice(clip, {"spk7", 1.0, 0, {fail.string()}});
    FAIL("expected backend error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBackend);
  }

  const auto nothing = Script(dir, "nothing.sh", "exit 0");
  CHECK_THROWS_AS(ConvertVoice(clip, {"spk7", 1.0, 0, {nothing.string()}}), Error);

  // Writes a clip one third the length.
  SaveWav(AudioClip(std::vector<double>(clip.size() / 3, 0.0), clip.sample_rate()),
          dir / "short.wav");
  const auto shorter = Script(dir, "short.sh", "cp '" + (dir / "short.wav").string() + "' \"$4\"");
  try {
    ConvertVoice(clip, {"spk7", 1.0, 0, {shorter.string()}});
    FAIL("expected backend error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBackend);
  }
}
