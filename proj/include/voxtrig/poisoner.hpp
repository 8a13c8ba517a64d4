// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Poisoned-dataset construction.
//
// A plan selects M disjoint subsets D_s(1..M) of a labelled corpus, applies
// trigger i to every sample of D_s(i) and relabels it, and leaves the rest
// (the benign subset) untouched.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "voxtrig/pbsm.hpp"
#include "voxtrig/vsvc.hpp"

namespace voxtrig {

struct ManifestEntry {
  std::string sample_id;
  // Absolute, or relative to the manifest's directory.
  std::string path;
  int label = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int num_classes = 0;
  // Directory that relative entry paths resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path Resolve(const ManifestEntry& e) const;
  // Throws kFormat unless ids are unique, labels lie in [0, num_classes)
  // and there is at least one entry.
  void Validate() const;
};

// CSV `sample_id,path,label`. num_classes defaults to max label + 1.
DatasetManifest LoadManifest(const std::filesystem::path& path,
                             std::optional<int> num_classes = std::nullopt);

enum class TriggerKind { kPbsm, kVsvc };
enum class AttackMode { kAllToOne, kAllToAll, kCleanLabel };

std::string_view TriggerKindName(TriggerKind t);
std::string_view AttackModeName(AttackMode m);

struct VsvcSettings {
  std::filesystem::path embeddings;
  std::optional<std::filesystem::path> transforms;
  ConversionBackend backend;
  SelectionObjective selection = SelectionObjective::kMaxMin;
};

struct PoisonPlan {
  TriggerKind trigger = TriggerKind::kPbsm;
  AttackMode mode = AttackMode::kAllToOne;
  std::vector<std::string> classes;
  std::optional<int> num_classes;
  // Target label per backdoor. Empty for all_to_all.
  std::vector<int> targets;
  // Poisoning rate per backdoor.
  std::vector<double> rates;
  std::uint64_t seed = 0;
  bool exclude_target_from_asr = true;
  PbsmConfig pbsm;
  VsvcSettings vsvc;

  std::size_t num_backdoors() const { return rates.size(); }
  // K: num_classes, else classes.size(), else the fallback.
  int ResolveNumClasses(int fallback) const;
  // Throws kConfig on rate, target or mode violations.
  void Validate(int num_classes) const;
};

// Parses the plan tree. Targets may be class indices or names from
// `classes`. Relative file paths resolve against base_dir. Unknown keys are
// rejected.
PoisonPlan ParsePlan(const nlohmann::json& tree, const std::filesystem::path& base_dir = {});
PoisonPlan LoadPlan(const std::filesystem::path& path);
// Canonical tree with every field present (targets as indices, paths as
// given after resolution).
nlohmann::json PlanToJson(const PoisonPlan& plan);

// floor(rate * n), robust to decimal rates that are not exactly
// representable in binary.
std::size_t SubsetSize(double rate, std::size_t n);

// Seeded generator shared by all sampling. The identifier is recorded in
// output metadata.
inline constexpr std::string_view kSamplerId = "mt19937_64+fisher-yates+mod-rejection";

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed);
  // Uniform integer in [0, bound).
  std::uint64_t Below(std::uint64_t bound);
  std::vector<std::size_t> Permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct Partition {
  std::vector<std::size_t> benign;                 // ascending entry indices
  std::vector<std::vector<std::size_t>> poisoned;  // per backdoor, ascending
};

Partition SamplePoisonSubsets(const DatasetManifest& manifest, const PoisonPlan& plan);

int PoisonLabel(int label, AttackMode mode, int target, int num_classes);

struct PoisonedEntry {
  std::string sample_id;
  std::string path;
  int label = 0;
  int ground_truth = 0;
  // 0 for benign, i for the i-th backdoor (1-based).
  std::size_t subset = 0;
  bool excluded_from_asr = false;
  std::string trigger_meta = "{}";
};

struct PoisonedManifest {
  std::vector<PoisonedEntry> entries;
  int num_classes = 0;
  std::filesystem::path base_dir;

  std::string ToCsv() const;
};

std::string SubsetName(std::size_t subset);

PoisonedManifest LoadPoisonedManifest(const std::filesystem::path& path);

struct FileError {
  std::string path;
  std::string message;
};

struct BuildOptions {
  unsigned jobs = 1;
  bool keep_going = false;
};

struct BuildResult {
  PoisonedManifest manifest;
  std::vector<FileError> errors;
};

// Writes triggered WAVs under out_dir/poisoned/ and out_dir/manifest.csv.
// Poisoned rows use paths relative to out_dir; benign rows point at the
// source files. Throws kInvalidInput naming the first failing file unless
// keep_going, in which case failed rows are dropped and reported.
BuildResult BuildPoisonedDataset(const DatasetManifest& manifest, const PoisonPlan& plan,
                                 const std::filesystem::path& out_dir,
                                 const BuildOptions& options = {});

enum class TestsetVariant { kFull, kPitchOnly };
TestsetVariant ParseTestsetVariant(std::string_view name);

// Triggers every test entry once per backdoor, writing out_dir/attack/ and
// out_dir/manifest.csv. With more than one backdoor, ids gain an "@i"
// suffix. `label` holds the label the attack aims for.
BuildResult BuildAttackTestset(const DatasetManifest& test_manifest, const PoisonPlan& plan,
                               TestsetVariant variant, const std::filesystem::path& out_dir,
                               const BuildOptions& options = {});

// Trigger application for one clip and backdoor (1-based), with its metadata.
class TriggerEngine {
 public:
  explicit TriggerEngine(const PoisonPlan& plan);

  struct Output {
    AudioClip audio;
    nlohmann::json meta;
  };
  Output Apply(const AudioClip& clip, std::size_t backdoor, TestsetVariant variant) const;

  const std::vector<TimbreTransform>& transforms() const { return transforms_; }

 private:
  PoisonPlan plan_;
  std::vector<TimbreTransform> transforms_;
};

// Timbres bound to backdoors 1..M. A single backdoor takes the first timbre
// of the farthest pair.
std::vector<TimbreTransform> PlanTransforms(const PoisonPlan& plan);

}  // namespace voxtrig
