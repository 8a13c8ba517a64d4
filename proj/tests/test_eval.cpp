// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "doctest.h"
#include "voxtrig/error.hpp"
#include "voxtrig/eval.hpp"

using namespace voxtrig;

namespace {

DatasetManifest Clean(int n) {
  DatasetManifest m;
  m.num_classes = 10;
  for (int i = 0; i < n; ++i) m.entries.push_back({"c" + std::to_string(i), "x.wav", i % 10});
  return m;
}

// Ten triggered entries with target 4; the two with ground truth 4 are excluded.
PoisonedManifest Attack() {
  PoisonedManifest m;
  m.num_classes = 10;
  const int truth[] = {0, 1, 2, 3, 4, 4, 5, 6, 7, 8};
  for (int i = 0; i < 10; ++i)
    m.entries.push_back({"a" + std::to_string(i), "p.wav", 4, truth[i], 1, truth[i] == 4, "{}"});
  return m;
}

PoisonPlan Plan(AttackMode mode = AttackMode::kAllToOne) {
  PoisonPlan p;
  p.mode = mode;
  p.targets = {4};
  p.rates = {0.1};
  return p;
}

}  // namespace

TEST_CASE("benign accuracy") {
  PredictionFile perfect;
  for (int i = 0; i < 10; ++i) perfect.labels["c" + std::to_string(i)] = i % 10;
  CHECK(BenignAccuracy(perfect, Clean(10)) == Fraction{10, 10});
  auto eight = perfect;
  eight.labels["c1"] = 0;
  eight.labels["c2"] = 0;
  const auto f = BenignAccuracy(eight, Clean(10));
  CHECK(f == Fraction{8, 10});
  CHECK(f.value() == 0.8);
  PredictionFile none;
  try {
    BenignAccuracy(none, Clean(10));
    FAIL("expected incomplete predictions");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIncompletePredictions);
  }
}

TEST_CASE("attack success rate with exclusions") {
  PredictionFile all_target;
  for (int i = 0; i < 10; ++i) all_target.labels["a" + std::to_string(i)] = 4;
  CHECK(AttackSuccessRate(all_target, Attack(), Plan()).overall == Fraction{8, 8});

  auto six = all_target;
  six.labels["a0"] = 0;
  six.labels["a9"] = 8;
  six.labels["a4"] = 0;  // excluded, must not count
  const auto m = AttackSuccessRate(six, Attack(), Plan());
  CHECK(m.overall == Fraction{6, 8});
  CHECK(m.overall.value() == 0.75);
  CHECK(m.per_target.at(4) == Fraction{6, 8});
  CHECK(m.per_class.count(4) == 0);
  // Per-class fractions aggregate exactly to the overall one.
  std::uint64_t num = 0, den = 0;
  for (const auto& [c, f] : m.per_class) {
    num += f.numerator;
    den += f.denominator;
  }
  CHECK(Fraction{num, den} == m.overall);
}

TEST_CASE("all-to-all attack that fails everywhere") {
  PoisonedManifest m;
  PredictionFile preds;
  for (int i = 0; i < 10; ++i) {
    m.entries.push_back({"a" + std::to_string(i), "p.wav", (i + 1) % 10, i, 1, false, "{}"});
    preds.labels["a" + std::to_string(i)] = i;
  }
  const auto r = AttackSuccessRate(preds, m, Plan(AttackMode::kAllToAll));
  CHECK(r.overall == Fraction{0, 10});
  CHECK(r.per_target.empty());
  CHECK(r.per_class.size() == 10);
  for (const auto& [c, f] : r.per_class) CHECK(f == Fraction{0, 1});
}

TEST_CASE("prediction parsing") {
  const auto p = ParsePredictions("sample_id,predicted_label\na,1\nb,2\n");
  CHECK(p.labels.at("b") == 2);
  CHECK_THROWS_AS(ParsePredictions("sample_id,predicted_label\na,1\na,2\n"), Error);
  CHECK_THROWS_AS(ParsePredictions("sample_id,predicted_label\na,11\n", 10), Error);
  CHECK_THROWS_AS(ParsePredictions("id,label\na,1\n"), Error);
}

TEST_CASE("report rendering") {
  MetricsReport r;
  r.benign_accuracy = Fraction{8, 10};
  const auto csv = RenderReport(r, ReportFormat::kCsv);
  CHECK(csv.find("benign_accuracy,0.8000,8,10") != std::string::npos);

  AttackMetrics a;
  a.overall = {5, 10};
  for (int c = 0; c < 10; ++c) a.per_class[c] = {static_cast<std::uint64_t>(c % 2), 1};
  r.attack = a;
  const auto table = RenderReport(r, ReportFormat::kCsv);
  std::size_t class_rows = 0, overall_rows = 0, pos = 0;
  while ((pos = table.find("asr_class_", pos)) != std::string::npos) ++class_rows, ++pos;
  pos = 0;
  while ((pos = table.find("asr_overall", pos)) != std::string::npos) ++overall_rows, ++pos;
  CHECK(class_rows == 10);
  CHECK(overall_rows == 1);

  a.per_target[4] = {5, 10};
  r.attack = a;
  const auto jl = RenderReport(r, ReportFormat::kJsonLines);
  CHECK(ParseJsonLinesReport(jl) == r);
  CHECK(RenderReport(r, ReportFormat::kText).find("benign_accuracy") != std::string::npos);
  CHECK(ParseReportFormat("jsonl") == ReportFormat::kJsonLines);
  CHECK_THROWS_AS(ParseReportFormat("xml"), Error);
}
