// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "voxtrig/poisoner.hpp"

namespace voxtrig {

// Exact count pair. value() is 0 when the denominator is 0.
struct Fraction {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  double value() const {
    return denominator ? static_cast<double>(numerator) / static_cast<double>(denominator) : 0.0;
  }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

struct PredictionFile {
  std::unordered_map<std::string, int> labels;
};

// CSV `sample_id,predicted_label`. Labels must lie in [0, num_classes) when
// num_classes is given.
PredictionFile LoadPredictions(const std::filesystem::path& path,
                               std::optional<int> num_classes = std::nullopt);
PredictionFile ParsePredictions(std::string_view csv_text,
                                std::optional<int> num_classes = std::nullopt);

// Throws kIncompletePredictions listing missing ids.
Fraction BenignAccuracy(const PredictionFile& preds, const DatasetManifest& manifest);

struct AttackMetrics {
  Fraction overall;
  std::map<int, Fraction> per_target;  // keyed by target label; empty for all_to_all
  std::map<int, Fraction> per_class;   // keyed by ground-truth class
};

// A non-excluded entry is a hit when the prediction equals its `label`
// column (the target, or (y + 1) mod K under all_to_all). Excluded entries
// are ignored entirely.
AttackMetrics AttackSuccessRate(const PredictionFile& preds, const PoisonedManifest& attack,
                                const PoisonPlan& plan);

struct MetricsReport {
  std::optional<Fraction> benign_accuracy;
  std::optional<AttackMetrics> attack;

  friend bool operator==(const MetricsReport&, const MetricsReport&);
};

enum class ReportFormat { kText, kCsv, kJsonLines };
ReportFormat ParseReportFormat(std::string_view name);

// Rows in a fixed order: benign_accuracy, asr_overall, asr_target_<t>...,
// asr_class_<c>.... Values carry 4 decimals next to the raw counts.
std::string RenderReport(const MetricsReport& report, ReportFormat format);

// Inverse of the json-lines rendering (counts are authoritative).
MetricsReport ParseJsonLinesReport(std::string_view text);

}  // namespace voxtrig
