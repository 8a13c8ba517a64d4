// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/eval.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "voxtrig/csv.hpp"
#include "voxtrig/error.hpp"

namespace voxtrig {

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  if (a.benign_accuracy != b.benign_accuracy) return false;
  if (a.attack.has_value() != b.attack.has_value()) return false;
  if (!a.attack) return true;
  return a.attack->overall == b.attack->overall && a.attack->per_target == b.attack->per_target &&
         a.attack->per_class == b.attack->per_class;
}

PredictionFile ParsePredictions(std::string_view csv_text, std::optional<int> num_classes) {
  const auto rows = csv::Parse(csv_text);
  if (rows.empty()) Fail(ErrorKind::kFormat, "prediction file is empty");
  const auto id_col = csv::RequireColumn(rows[0], "sample_id", "predictions");
  const auto label_col = csv::RequireColumn(rows[0], "predicted_label", "predictions");
  PredictionFile preds;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size())
      Fail(ErrorKind::kFormat, "prediction row " + std::to_string(r) + " is ragged");
    const auto label = csv::ParseInt(row[label_col], "predicted_label");
    if (label < 0 || (num_classes && label >= *num_classes))
      Fail(ErrorKind::kFormat, "predicted label " + std::to_string(label) + " for '" +
                                   row[id_col] + "' is out of range");
    if (!preds.labels.emplace(row[id_col], static_cast<int>(label)).second)
      Fail(ErrorKind::kFormat, "duplicate prediction for '" + row[id_col] + "'");
  }
  return preds;
}

PredictionFile LoadPredictions(const std::filesystem::path& path, std::optional<int> num_classes) {
  const auto text = csv::ReadFile(path);
  try {
    return ParsePredictions(text, num_classes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

namespace {

[[noreturn]] void FailMissing(const std::vector<std::string>& missing) {
  std::string msg = std::to_string(missing.size()) + " sample(s) have no prediction:";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) msg += " " + missing[i];
  if (missing.size() > shown) msg += " ...";
  Fail(ErrorKind::kIncompletePredictions, msg);
}

}  // namespace

Fraction BenignAccuracy(const PredictionFile& preds, const DatasetManifest& manifest) {
  if (manifest.entries.empty()) Fail(ErrorKind::kInvalidInput, "manifest has no entries");
  Fraction f;
  std::vector<std::string> missing;
  for (const auto& e : manifest.entries) {
    const auto it = preds.labels.find(e.sample_id);
    if (it == preds.labels.end()) {
      missing.push_back(e.sample_id);
      continue;
    }
    ++f.denominator;
    if (it->second == e.label) ++f.numerator;
  }
  if (!missing.empty()) FailMissing(missing);
  return f;
}

AttackMetrics AttackSuccessRate(const PredictionFile& preds, const PoisonedManifest& attack,
                                const PoisonPlan& plan) {
  AttackMetrics m;
  std::vector<std::string> missing;
  const bool per_target = plan.mode != AttackMode::kAllToAll;
  for (const auto& e : attack.entries) {
    if (e.excluded_from_asr) continue;
    const auto it = preds.labels.find(e.sample_id);
    if (it == preds.labels.end()) {
      missing.push_back(e.sample_id);
      continue;
    }
    const bool hit = it->second == e.label;
    auto bump = [hit](Fraction& f) {
      ++f.denominator;
      if (hit) ++f.numerator;
    };
    bump(m.overall);
    bump(m.per_class[e.ground_truth]);
    if (per_target) {
      if (e.subset < 1 || e.subset > plan.targets.size())
        Fail(ErrorKind::kInvalidInput, "attack entry '" + e.sample_id +
                                           "' belongs to no backdoor of this plan");
      bump(m.per_target[plan.targets[e.subset - 1]]);
    }
  }
  if (!missing.empty()) FailMissing(missing);
  return m;
}

ReportFormat ParseReportFormat(std::string_view name) {
  if (name == "text") return ReportFormat::kText;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json-lines" || name == "jsonl") return ReportFormat::kJsonLines;
  Fail(ErrorKind::kConfig, "unknown report format '" + std::string(name) + "'");
}

namespace {

struct Row {
  std::string metric;
  Fraction f;
};

std::vector<Row> Rows(const MetricsReport& r) {
  std::vector<Row> rows;
  if (r.benign_accuracy) rows.push_back({"benign_accuracy", *r.benign_accuracy});
  if (r.attack) {
    rows.push_back({"asr_overall", r.attack->overall});
    for (const auto& [t, f] : r.attack->per_target) rows.push_back({"asr_target_" + std::to_string(t), f});
    for (const auto& [c, f] : r.attack->per_class) rows.push_back({"asr_class_" + std::to_string(c), f});
  }
  return rows;
}

std::string Fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string RenderReport(const MetricsReport& report, ReportFormat format) {
  std::ostringstream out;
  const auto rows = Rows(report);
  switch (format) {
    case ReportFormat::kCsv:
      out << "metric,value,numerator,denominator\n";
      for (const auto& row : rows) {
        out << row.metric << ',' << Fixed4(row.f.value()) << ',' << row.f.numerator << ','
            << row.f.denominator << '\n';
      }
      break;
    case ReportFormat::kText:
      for (const auto& row : rows) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-20s %s  (%" PRIu64 "/%" PRIu64 ")\n",
                      row.metric.c_str(), Fixed4(row.f.value()).c_str(), row.f.numerator,
                      row.f.denominator);
        out << line;
      }
      break;
    case ReportFormat::kJsonLines:
      for (const auto& row : rows) {
        nlohmann::ordered_json j;
        j["metric"] = row.metric;
        j["value"] = std::round(row.f.value() * 1e4) / 1e4;
        j["numerator"] = row.f.numerator;
        j["denominator"] = row.f.denominator;
        out << j.dump() << '\n';
      }
      break;
  }
  return out.str();
}

MetricsReport ParseJsonLinesReport(std::string_view text) {
  MetricsReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  auto attack = [&]() -> AttackMetrics& {
    if (!r.attack) r.attack.emplace();
    return *r.attack;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kFormat, std::string("bad report line: ") + e.what());
    }
    const auto metric = j.at("metric").get<std::string>();
    const Fraction f{j.at("numerator").get<std::uint64_t>(), j.at("denominator").get<std::uint64_t>()};
    if (metric == "benign_accuracy") {
      r.benign_accuracy = f;
    } else if (metric == "asr_overall") {
      attack().overall = f;
    } else if (metric.rfind("asr_target_", 0) == 0) {
      attack().per_target[static_cast<int>(csv::ParseInt(metric.substr(11), "target"))] = f;
    } else if (metric.rfind("asr_class_", 0) == 0) {
      attack().per_class[static_cast<int>(csv::ParseInt(metric.substr(10), "class"))] = f;
    } else {
      Fail(ErrorKind::kFormat, "unknown metric '" + metric + "'");
    }
  }
  return r;
}

}  // namespace voxtrig
