// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/poisoner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "voxtrig/csv.hpp"
#include "voxtrig/error.hpp"

namespace voxtrig {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifests

std::filesystem::path DatasetManifest::Resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void DatasetManifest::Validate() const {
  if (entries.empty()) Fail(ErrorKind::kFormat, "manifest has no entries");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.sample_id).second)
      Fail(ErrorKind::kFormat, "duplicate sample id '" + e.sample_id + "'");
    if (e.label < 0 || e.label >= num_classes)
      Fail(ErrorKind::kFormat, "sample '" + e.sample_id + "' has label " +
                                   std::to_string(e.label) + " outside [0, " +
                                   std::to_string(num_classes) + ")");
  }
}

DatasetManifest LoadManifest(const std::filesystem::path& path, std::optional<int> num_classes) {
  const auto rows = csv::ReadFileRows(path);
  const auto name = path.string();
  if (rows.empty()) Fail(ErrorKind::kFormat, name + ": empty manifest");
  const auto id_col = csv::RequireColumn(rows[0], "sample_id", name);
  const auto path_col = csv::RequireColumn(rows[0], "path", name);
  const auto label_col = csv::RequireColumn(rows[0], "label", name);

  DatasetManifest m;
  m.base_dir = path.parent_path();
  int max_label = -1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size())
      Fail(ErrorKind::kFormat, name + ": row " + std::to_string(r) + " has " +
                                   std::to_string(row.size()) + " fields");
    const auto label = csv::ParseInt(row[label_col], "label");
    if (label < 0 || label > std::numeric_limits<int>::max())
      Fail(ErrorKind::kFormat, name + ": negative or oversized label on row " + std::to_string(r));
    m.entries.push_back({row[id_col], row[path_col], static_cast<int>(label)});
    max_label = std::max(max_label, static_cast<int>(label));
  }
  m.num_classes = num_classes.value_or(max_label + 1);
  try {
    m.Validate();
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  }
  return m;
}

std::string SubsetName(std::size_t subset) {
  return subset == 0 ? "benign" : "poisoned_" + std::to_string(subset);
}

std::string PoisonedManifest::ToCsv() const {
  std::string out = csv::FormatRow({"sample_id", "path", "label", "ground_truth", "subset",
                                    "excluded_from_asr", "trigger_meta_json"});
  for (const auto& e : entries) {
    out += csv::FormatRow({e.sample_id, e.path, std::to_string(e.label),
                           std::to_string(e.ground_truth), SubsetName(e.subset),
                           e.excluded_from_asr ? "1" : "0", e.trigger_meta});
  }
  return out;
}

PoisonedManifest LoadPoisonedManifest(const std::filesystem::path& path) {
  const auto rows = csv::ReadFileRows(path);
  const auto name = path.string();
  if (rows.empty()) Fail(ErrorKind::kFormat, name + ": empty manifest");
  const auto& h = rows[0];
  const auto id_col = csv::RequireColumn(h, "sample_id", name);
  const auto path_col = csv::RequireColumn(h, "path", name);
  const auto label_col = csv::RequireColumn(h, "label", name);
  const auto gt_col = csv::RequireColumn(h, "ground_truth", name);
  const auto subset_col = csv::RequireColumn(h, "subset", name);
  const auto excl_col = csv::RequireColumn(h, "excluded_from_asr", name);
  const auto meta_col = csv::RequireColumn(h, "trigger_meta_json", name);

  PoisonedManifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != h.size())
      Fail(ErrorKind::kFormat, name + ": row " + std::to_string(r) + " is ragged");
    PoisonedEntry e;
    e.sample_id = row[id_col];
    if (!seen.insert(e.sample_id).second)
      Fail(ErrorKind::kFormat, name + ": duplicate sample id '" + e.sample_id + "'");
    e.path = row[path_col];
    e.label = static_cast<int>(csv::ParseInt(row[label_col], "label"));
    e.ground_truth = static_cast<int>(csv::ParseInt(row[gt_col], "ground_truth"));
    const auto& subset = row[subset_col];
    if (subset == "benign") {
      e.subset = 0;
    } else if (subset.rfind("poisoned_", 0) == 0) {
      const auto idx = csv::ParseInt(std::string_view(subset).substr(9), "subset index");
      if (idx < 1) Fail(ErrorKind::kFormat, name + ": bad subset '" + subset + "'");
      e.subset = static_cast<std::size_t>(idx);
    } else {
      Fail(ErrorKind::kFormat, name + ": bad subset '" + subset + "'");
    }
    const auto& excl = row[excl_col];
    if (excl != "0" && excl != "1")
      Fail(ErrorKind::kFormat, name + ": excluded_from_asr must be 0 or 1");
    e.excluded_from_asr = excl == "1";
    e.trigger_meta = row[meta_col];
    if (e.label < 0 || e.ground_truth < 0)
      Fail(ErrorKind::kFormat, name + ": negative label on row " + std::to_string(r));
    m.num_classes = std::max({m.num_classes, e.label + 1, e.ground_truth + 1});
    m.entries.push_back(std::move(e));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Plans

std::string_view TriggerKindName(TriggerKind t) {
  return t == TriggerKind::kPbsm ? "pbsm" : "vsvc";
}

std::string_view AttackModeName(AttackMode m) {
  switch (m) {
    case AttackMode::kAllToOne: return "all_to_one";
    case AttackMode::kAllToAll: return "all_to_all";
    case AttackMode::kCleanLabel: return "clean_label";
  }
  return "all_to_one";
}

namespace {

std::string_view SelectionName(SelectionObjective s) {
  return s == SelectionObjective::kMaxMin ? "max_min" : "max_sum";
}

void CheckKeys(const json& obj, std::initializer_list<std::string_view> allowed,
               const std::string& where) {
  if (!obj.is_object()) Fail(ErrorKind::kConfig, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      Fail(ErrorKind::kConfig, "unknown plan key '" + where + key + "'");
  }
}

std::filesystem::path ResolvePath(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal();
}

int ResolveTarget(const json& v, const std::vector<std::string>& classes) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    const auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end())
      Fail(ErrorKind::kConfig, "target '" + name + "' is not in the plan's classes list");
    return static_cast<int>(it - classes.begin());
  }
  Fail(ErrorKind::kConfig, "targets must be class indices or class names");
}

json AsArray(const json& v) { return v.is_array() ? v : json::array({v}); }

}  // namespace

PoisonPlan ParsePlan(const json& tree, const std::filesystem::path& base_dir) {
  try {
    CheckKeys(tree,
              {"trigger", "mode", "classes", "num_classes", "targets", "rates", "seed",
               "exclude_target_from_asr", "pbsm", "stft", "vsvc"},
              "");
    PoisonPlan plan;
    const auto trigger = tree.value("trigger", std::string("pbsm"));
    if (trigger == "pbsm") {
      plan.trigger = TriggerKind::kPbsm;
    } else if (trigger == "vsvc") {
      plan.trigger = TriggerKind::kVsvc;
    } else {
      Fail(ErrorKind::kConfig, "unknown trigger '" + trigger + "'");
    }
    const auto mode = tree.value("mode", std::string("all_to_one"));
    if (mode == "all_to_one") {
      plan.mode = AttackMode::kAllToOne;
    } else if (mode == "all_to_all") {
      plan.mode = AttackMode::kAllToAll;
    } else if (mode == "clean_label") {
      plan.mode = AttackMode::kCleanLabel;
    } else {
      Fail(ErrorKind::kConfig, "unknown mode '" + mode + "'");
    }
    if (tree.contains("classes")) plan.classes = tree.at("classes").get<std::vector<std::string>>();
    if (tree.contains("num_classes")) plan.num_classes = tree.at("num_classes").get<int>();
    if (tree.contains("targets")) {
      for (const auto& t : AsArray(tree.at("targets"))) plan.targets.push_back(ResolveTarget(t, plan.classes));
    }
    if (tree.contains("rates")) {
      for (const auto& r : AsArray(tree.at("rates"))) plan.rates.push_back(r.get<double>());
    }
    if (tree.contains("seed")) plan.seed = tree.at("seed").get<std::uint64_t>();
    plan.exclude_target_from_asr = tree.value("exclude_target_from_asr", true);

    if (tree.contains("pbsm")) {
      const auto& p = tree.at("pbsm");
      CheckKeys(p, {"semitones", "segment_ms", "insert_at", "signal"}, "pbsm.");
      plan.pbsm.semitones = p.value("semitones", plan.pbsm.semitones);
      plan.pbsm.segment_ms = p.value("segment_ms", plan.pbsm.segment_ms);
      if (p.contains("insert_at")) plan.pbsm.insert_at = ParseInsertAt(p.at("insert_at").get<std::string>());
      if (p.contains("signal")) {
        const auto& s = p.at("signal");
        CheckKeys(s, {"frequency_hz", "duration_ms", "amplitude_ratio", "fade_ms"}, "pbsm.signal.");
        auto& sig = plan.pbsm.signal;
        sig.frequency_hz = s.value("frequency_hz", sig.frequency_hz);
        sig.duration_ms = s.value("duration_ms", sig.duration_ms);
        sig.amplitude_ratio = s.value("amplitude_ratio", sig.amplitude_ratio);
        sig.fade_ms = s.value("fade_ms", sig.fade_ms);
      }
    }
    if (tree.contains("stft")) {
      const auto& s = tree.at("stft");
      CheckKeys(s, {"frame_size", "hop", "window"}, "stft.");
      plan.pbsm.stft.frame_size = s.value("frame_size", plan.pbsm.stft.frame_size);
      plan.pbsm.stft.hop = s.value("hop", plan.pbsm.stft.hop);
      if (s.contains("window")) plan.pbsm.stft.window = ParseWindow(s.at("window").get<std::string>());
    }
    if (tree.contains("vsvc")) {
      const auto& v = tree.at("vsvc");
      CheckKeys(v, {"embeddings", "transforms", "backend", "selection"}, "vsvc.");
      if (v.contains("embeddings"))
        plan.vsvc.embeddings = ResolvePath(v.at("embeddings").get<std::string>(), base_dir);
      if (v.contains("transforms") && !v.at("transforms").is_null())
        plan.vsvc.transforms = ResolvePath(v.at("transforms").get<std::string>(), base_dir);
      const auto backend = v.value("backend", std::string("builtin"));
      plan.vsvc.backend.command = backend == "builtin" ? "" : backend;
      if (v.contains("selection"))
        plan.vsvc.selection = ParseSelectionObjective(v.at("selection").get<std::string>());
    }
    return plan;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kConfig, std::string("malformed plan: ") + e.what());
  }
}

PoisonPlan LoadPlan(const std::filesystem::path& path) {
  const auto text = csv::ReadFile(path);
  json tree;
  try {
    tree = json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  try {
    return ParsePlan(tree, path.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

json PlanToJson(const PoisonPlan& plan) {
  json tree;
  tree["trigger"] = TriggerKindName(plan.trigger);
  tree["mode"] = AttackModeName(plan.mode);
  tree["classes"] = plan.classes;
  if (plan.num_classes) tree["num_classes"] = *plan.num_classes;
  tree["targets"] = plan.targets;
  tree["rates"] = plan.rates;
  tree["seed"] = plan.seed;
  tree["exclude_target_from_asr"] = plan.exclude_target_from_asr;
  const auto& p = plan.pbsm;
  tree["pbsm"] = {{"semitones", p.semitones},
                  {"segment_ms", p.segment_ms},
                  {"insert_at", InsertAtName(p.insert_at)},
                  {"signal",
                   {{"frequency_hz", p.signal.frequency_hz},
                    {"duration_ms", p.signal.duration_ms},
                    {"amplitude_ratio", p.signal.amplitude_ratio},
                    {"fade_ms", p.signal.fade_ms}}}};
  tree["stft"] = {{"frame_size", p.stft.frame_size},
                  {"hop", p.stft.hop},
                  {"window", WindowName(p.stft.window)}};
  tree["vsvc"] = {
      {"embeddings", plan.vsvc.embeddings.generic_string()},
      {"backend", plan.vsvc.backend.builtin() ? std::string("builtin") : plan.vsvc.backend.command},
      {"selection", SelectionName(plan.vsvc.selection)}};
  if (plan.vsvc.transforms) tree["vsvc"]["transforms"] = plan.vsvc.transforms->generic_string();
  return tree;
}

int PoisonPlan::ResolveNumClasses(int fallback) const {
  if (num_classes) return *num_classes;
  if (!classes.empty()) return static_cast<int>(classes.size());
  return fallback;
}

void PoisonPlan::Validate(int k) const {
  if (k < 1) Fail(ErrorKind::kConfig, "number of classes must be positive");
  if (rates.empty()) Fail(ErrorKind::kConfig, "plan needs at least one poisoning rate");
  double total = 0.0;
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0))
      Fail(ErrorKind::kConfig, "poisoning rate " + csv::FormatDouble(r) + " outside (0, 1]");
    total += r;
  }
  if (total > 1.0 + 1e-12)
    Fail(ErrorKind::kConfig, "poisoning rates sum to " + csv::FormatDouble(total) + " > 1");
  if (mode == AttackMode::kAllToAll) {
    if (rates.size() != 1) Fail(ErrorKind::kConfig, "all_to_all supports exactly one backdoor");
  } else {
    if (targets.size() != rates.size())
      Fail(ErrorKind::kConfig, "plan has " + std::to_string(targets.size()) + " targets for " +
                                   std::to_string(rates.size()) + " rates");
    std::set<int> seen;
    for (int t : targets) {
      if (t < 0 || t >= k)
        Fail(ErrorKind::kConfig, "target label " + std::to_string(t) + " outside [0, " +
                                     std::to_string(k) + ")");
      if (!seen.insert(t).second)
        Fail(ErrorKind::kConfig, "target label " + std::to_string(t) + " repeated");
    }
  }
  if (!classes.empty() && static_cast<int>(classes.size()) != k)
    Fail(ErrorKind::kConfig, "classes list has " + std::to_string(classes.size()) +
                                 " names for " + std::to_string(k) + " classes");
  pbsm.Validate();
  if (trigger == TriggerKind::kVsvc && vsvc.embeddings.empty())
    Fail(ErrorKind::kConfig, "vsvc plan needs vsvc.embeddings");
}

// ---------------------------------------------------------------------------
// Sampling

std::size_t SubsetSize(double rate, std::size_t n) {
  // The relative nudge absorbs decimal rates such as 0.29 whose binary value
  // sits one ulp below the intended product.
  const double exact = rate * static_cast<double>(n);
  return static_cast<std::size_t>(std::floor(exact * (1.0 + 1e-12)));
}

Sampler::Sampler(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Sampler::Below(std::uint64_t bound) {
  if (bound == 0) Fail(ErrorKind::kInvalidInput, "sampling bound must be positive");
  // Reject the low (2^64 mod bound) values so the modulo is unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

std::vector<std::size_t> Sampler::Permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(Below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

Partition SamplePoisonSubsets(const DatasetManifest& manifest, const PoisonPlan& plan) {
  const std::size_t n = manifest.entries.size();
  plan.Validate(manifest.num_classes);

  Sampler sampler(plan.seed);
  const auto order = sampler.Permutation(n);
  std::vector<bool> taken(n, false);

  Partition part;
  for (std::size_t b = 0; b < plan.num_backdoors(); ++b) {
    const std::size_t want = SubsetSize(plan.rates[b], n);
    std::vector<std::size_t> subset;
    for (std::size_t idx : order) {
      if (subset.size() == want) break;
      if (taken[idx]) continue;
      if (plan.mode == AttackMode::kCleanLabel && manifest.entries[idx].label != plan.targets[b])
        continue;
      subset.push_back(idx);
      taken[idx] = true;
    }
    if (subset.size() < want)
      Fail(ErrorKind::kCapacity, "backdoor " + std::to_string(b + 1) + " needs " +
                                     std::to_string(want) + " samples of class " +
                                     std::to_string(plan.targets[b]) + " but only " +
                                     std::to_string(subset.size()) + " are available");
    std::sort(subset.begin(), subset.end());
    part.poisoned.push_back(std::move(subset));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!taken[i]) part.benign.push_back(i);
  }
  return part;
}

int PoisonLabel(int label, AttackMode mode, int target, int num_classes) {
  if (mode == AttackMode::kAllToAll) return (label + 1) % num_classes;
  return target;
}

// ---------------------------------------------------------------------------
// Trigger application

std::vector<TimbreTransform> PlanTransforms(const PoisonPlan& plan) {
  if (plan.trigger != TriggerKind::kVsvc) return {};
  const auto embeddings = LoadEmbeddings(plan.vsvc.embeddings);
  const auto sim = ComputeSimilarity(embeddings);
  const std::size_t m = plan.num_backdoors();
  std::vector<std::string> ids;
  if (m == 1) {
    ids = {GreedySelectIds(sim, 2, plan.vsvc.selection).front()};
  } else {
    if (m > sim.size())
      Fail(ErrorKind::kConfig, "plan needs " + std::to_string(m) + " timbres but only " +
                                   std::to_string(sim.size()) + " candidates exist");
    ids = GreedySelectIds(sim, m, plan.vsvc.selection);
  }
  const auto slots = plan.vsvc.transforms ? LoadTransformSlots(*plan.vsvc.transforms)
                                          : DefaultTransformSlots(ids.size());
  return AssignTransforms(ids, slots, plan.vsvc.backend);
}

TriggerEngine::TriggerEngine(const PoisonPlan& plan) : plan_(plan), transforms_(PlanTransforms(plan)) {}

TriggerEngine::Output TriggerEngine::Apply(const AudioClip& clip, std::size_t backdoor,
                                           TestsetVariant variant) const {
  if (backdoor < 1 || backdoor > plan_.num_backdoors())
    Fail(ErrorKind::kInvalidInput, "backdoor index out of range");
  if (plan_.trigger == TriggerKind::kPbsm) {
    const auto& cfg = plan_.pbsm;
    json meta = {{"trigger", "pbsm"},
                 {"backdoor", backdoor},
                 {"variant", variant == TestsetVariant::kFull ? "full" : "pitch_only"},
                 {"semitones", cfg.semitones},
                 {"pitch_factor", SemitoneFactor(cfg.semitones)}};
    if (variant == TestsetVariant::kPitchOnly) {
      return {ApplyPitchOnly(clip, cfg), std::move(meta)};
    }
    auto r = ApplyPbsmDetailed(clip, cfg);
    meta["segment_ms"] = cfg.segment_ms;
    meta["insert_at"] = InsertAtName(cfg.insert_at);
    meta["frequency_hz"] = cfg.signal.frequency_hz;
    meta["duration_ms"] = cfg.signal.duration_ms;
    meta["amplitude_ratio"] = cfg.signal.amplitude_ratio;
    meta["fade_ms"] = cfg.signal.fade_ms;
    meta["segment_end"] = r.segment_end;
    meta["insert_index"] = r.insert_index;
    meta["host_rms"] = r.host_rms;
    meta["tone_rms"] = r.tone_rms;
    meta["peak_overage"] = r.peak_overage;
    return {std::move(r.audio), std::move(meta)};
  }
  if (variant == TestsetVariant::kPitchOnly)
    Fail(ErrorKind::kInvalidVariant, "the pitch-only variant applies to pbsm plans only");
  const auto& t = transforms_.at(backdoor - 1);
  json meta = {{"trigger", "vsvc"},
               {"backdoor", backdoor},
               {"timbre_id", t.timbre_id},
               {"warp_alpha", t.warp_alpha},
               {"pitch_offset_semitones", t.pitch_offset_semitones},
               {"backend", t.backend.builtin() ? std::string("builtin") : t.backend.command}};
  return {ConvertVoice(clip, t, plan_.pbsm.stft), std::move(meta)};
}

// ---------------------------------------------------------------------------
// Builders

TestsetVariant ParseTestsetVariant(std::string_view name) {
  if (name == "full") return TestsetVariant::kFull;
  if (name == "pitch_only" || name == "pitch-only") return TestsetVariant::kPitchOnly;
  Fail(ErrorKind::kInvalidVariant, "unknown test-set variant '" + std::string(name) + "'");
}

namespace {

struct Job {
  std::size_t entry;
  std::size_t backdoor;
  std::string relative_path;
};

std::string SafeName(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

// Assigns each job a unique file name under `dir`.
void NameOutputs(std::vector<Job>& jobs, const DatasetManifest& manifest, std::string_view dir,
                 bool tag_backdoor) {
  std::set<std::string> used;
  for (auto& job : jobs) {
    std::string stem = SafeName(manifest.entries[job.entry].sample_id);
    if (tag_backdoor) stem += ".p" + std::to_string(job.backdoor);
    std::string name = stem + ".wav";
    if (!used.insert(name).second) {
      name = stem + "_" + std::to_string(job.entry) + ".wav";
      used.insert(name);
    }
    job.relative_path = std::string(dir) + "/" + name;
  }
}

void ParallelFor(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

// Runs the trigger over every job; returns the error message per job
// (empty on success) and the metadata per job.
std::pair<std::vector<std::string>, std::vector<json>> RunJobs(
    const std::vector<Job>& jobs, const DatasetManifest& manifest, const TriggerEngine& engine,
    TestsetVariant variant, const std::filesystem::path& out_dir, unsigned workers) {
  std::vector<std::string> errors(jobs.size());
  std::vector<json> metas(jobs.size());
  ParallelFor(jobs.size(), workers, [&](std::size_t j) {
    const auto& job = jobs[j];
    try {
      const auto clip = LoadWav(manifest.Resolve(manifest.entries[job.entry]));
      auto out = engine.Apply(clip, job.backdoor, variant);
      SaveWav(out.audio, out_dir / job.relative_path);
      metas[j] = std::move(out.meta);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  });
  return {std::move(errors), std::move(metas)};
}

void WriteManifest(const PoisonedManifest& m, const std::filesystem::path& out_dir) {
  const auto path = out_dir / "manifest.csv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << m.ToCsv();
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

void EnsureDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

void RaiseIfFailed(const std::vector<FileError>& errors, bool keep_going) {
  if (errors.empty() || keep_going) return;
  std::string msg = errors.front().path + ": " + errors.front().message;
  if (errors.size() > 1) msg += " (and " + std::to_string(errors.size() - 1) + " more)";
  Fail(ErrorKind::kIo, msg);
}

DatasetManifest WithClassCount(const DatasetManifest& manifest, const PoisonPlan& plan) {
  DatasetManifest m = manifest;
  m.num_classes = plan.ResolveNumClasses(manifest.num_classes);
  m.Validate();
  plan.Validate(m.num_classes);
  return m;
}

}  // namespace

BuildResult BuildPoisonedDataset(const DatasetManifest& source, const PoisonPlan& plan,
                                 const std::filesystem::path& out_dir, const BuildOptions& options) {
  const DatasetManifest manifest = WithClassCount(source, plan);
  const int k = manifest.num_classes;
  const Partition part = SamplePoisonSubsets(manifest, plan);
  const TriggerEngine engine(plan);

  std::vector<Job> jobs;
  std::vector<std::size_t> subset_of(manifest.entries.size(), 0);
  for (std::size_t b = 0; b < part.poisoned.size(); ++b) {
    for (std::size_t idx : part.poisoned[b]) subset_of[idx] = b + 1;
  }
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (subset_of[i] != 0) jobs.push_back({i, subset_of[i], {}});
  }
  NameOutputs(jobs, manifest, "poisoned", plan.num_backdoors() > 1);

  EnsureDir(out_dir / "poisoned");
  auto [job_errors, metas] =
      RunJobs(jobs, manifest, engine, TestsetVariant::kFull, out_dir, options.jobs);

  std::vector<FileError> errors;
  std::vector<const Job*> job_of(manifest.entries.size(), nullptr);
  std::vector<std::size_t> job_index(manifest.entries.size(), 0);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    job_of[jobs[j].entry] = &jobs[j];
    job_index[jobs[j].entry] = j;
  }

  BuildResult result;
  result.manifest.num_classes = k;
  result.manifest.base_dir = out_dir;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const auto source_path = std::filesystem::absolute(manifest.Resolve(e)).lexically_normal();
    if (job_of[i] == nullptr) {
      if (!std::filesystem::exists(source_path)) {
        errors.push_back({source_path.string(), "source file not found"});
        continue;
      }
      result.manifest.entries.push_back(
          {e.sample_id, source_path.generic_string(), e.label, e.label, 0, false, "{}"});
      continue;
    }
    const std::size_t j = job_index[i];
    if (!job_errors[j].empty()) {
      errors.push_back({source_path.string(), job_errors[j]});
      continue;
    }
    const std::size_t b = job_of[i]->backdoor;
    const int target = plan.mode == AttackMode::kAllToAll ? -1 : plan.targets[b - 1];
    json meta = std::move(metas[j]);
    meta["source"] = e.path;
    meta["seed"] = plan.seed;
    meta["sampler"] = kSamplerId;
    result.manifest.entries.push_back({e.sample_id, job_of[i]->relative_path,
                                       PoisonLabel(e.label, plan.mode, target, k), e.label, b,
                                       false, meta.dump()});
  }
  RaiseIfFailed(errors, options.keep_going);
  result.errors = std::move(errors);
  WriteManifest(result.manifest, out_dir);
  return result;
}

BuildResult BuildAttackTestset(const DatasetManifest& source, const PoisonPlan& plan,
                               TestsetVariant variant, const std::filesystem::path& out_dir,
                               const BuildOptions& options) {
  if (variant == TestsetVariant::kPitchOnly && plan.trigger != TriggerKind::kPbsm)
    Fail(ErrorKind::kInvalidVariant, "the pitch-only variant applies to pbsm plans only");
  const DatasetManifest manifest = WithClassCount(source, plan);
  const int k = manifest.num_classes;
  const TriggerEngine engine(plan);
  const std::size_t m = plan.num_backdoors();

  std::vector<Job> jobs;
  for (std::size_t b = 1; b <= m; ++b) {
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) jobs.push_back({i, b, {}});
  }
  NameOutputs(jobs, manifest, "attack", m > 1);

  EnsureDir(out_dir / "attack");
  auto [job_errors, metas] = RunJobs(jobs, manifest, engine, variant, out_dir, options.jobs);

  BuildResult result;
  result.manifest.num_classes = k;
  result.manifest.base_dir = out_dir;
  std::vector<FileError> errors;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& job = jobs[j];
    const auto& e = manifest.entries[job.entry];
    if (!job_errors[j].empty()) {
      errors.push_back({manifest.Resolve(e).string(), job_errors[j]});
      continue;
    }
    const bool per_target = plan.mode != AttackMode::kAllToAll;
    const int target = per_target ? plan.targets[job.backdoor - 1] : -1;
    json meta = std::move(metas[j]);
    meta["source"] = e.path;
    result.manifest.entries.push_back(
        {m > 1 ? e.sample_id + "@" + std::to_string(job.backdoor) : e.sample_id,
         job.relative_path, PoisonLabel(e.label, plan.mode, target, k), e.label, job.backdoor,
         per_target && plan.exclude_target_from_asr && e.label == target, meta.dump()});
  }
  RaiseIfFailed(errors, options.keep_going);
  result.errors = std::move(errors);
  WriteManifest(result.manifest, out_dir);
  return result;
}

}  // namespace voxtrig
