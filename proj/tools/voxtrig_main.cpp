// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// voxtrig: trigger synthesis, poisoned-dataset construction and attack
// evaluation for keyword-spotting corpora.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 backend error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "voxtrig/audio.hpp"
#include "voxtrig/csv.hpp"
#include "voxtrig/error.hpp"
#include "voxtrig/eval.hpp"
#include "voxtrig/pbsm.hpp"
#include "voxtrig/poisoner.hpp"
#include "voxtrig/run_record.hpp"
#include "voxtrig/spectral.hpp"
#include "voxtrig/vsvc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voxtrig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

constexpr const char* kPlanEnv = "VOXTRIG_PLAN";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidVariant:
      return kExitUsage;
    case ErrorKind::kBackend:
      return kExitBackend;
    default:
      return kExitData;
  }
}

// Plan flags. Each maps one-to-one onto a plan key and overrides the file.
struct PlanFlags {
  std::string plan_path;
  std::string trigger, mode, classes, insert_at, window, embeddings, transforms, backend, selection;
  std::vector<std::string> targets;
  std::vector<double> rates;
  int num_classes = 0, semitones = 0;
  std::uint64_t seed = 0;
  bool exclude_target = true;
  double segment_ms = 0, frequency_hz = 0, duration_ms = 0, amplitude_ratio = 0, fade_ms = 0;
  std::size_t frame_size = 0, hop = 0;

  struct Binding {
    CLI::Option* opt;
    json::json_pointer key;
    std::function<json()> value;
  };
  std::vector<Binding> bindings;

  template <typename T>
  void Bind(CLI::App* app, const std::string& flag, T& var, const std::string& key,
            const std::string& help) {
    auto* opt = app->add_option(flag, var, help);
    bindings.push_back({opt, json::json_pointer(key), [&var] { return json(var); }});
  }

  void Register(CLI::App* app, bool dataset_keys) {
    app->add_option("--plan", plan_path,
                    std::string("Plan file (JSON); defaults to $") + kPlanEnv);
    if (dataset_keys) {
      Bind(app, "--trigger", trigger, "/trigger", "pbsm | vsvc");
      Bind(app, "--mode", mode, "/mode", "all_to_one | all_to_all | clean_label");
      Bind(app, "--num-classes", num_classes, "/num_classes", "Number of classes K");
      Bind(app, "--seed", seed, "/seed", "Sampling seed");
      Bind(app, "--exclude-target-from-asr", exclude_target, "/exclude_target_from_asr",
           "Flag target-class test entries as excluded from ASR");
      auto* c = app->add_option("--classes", classes, "Comma-separated class names");
      bindings.push_back({c, json::json_pointer("/classes"), [this] {
                            json arr = json::array();
                            std::stringstream ss(classes);
                            for (std::string item; std::getline(ss, item, ',');) arr.push_back(item);
                            return arr;
                          }});
      auto* t = app->add_option("--target", targets, "Target label (index or class name); repeatable");
      bindings.push_back({t, json::json_pointer("/targets"), [this] {
                            json arr = json::array();
                            for (const auto& v : targets) {
                              char* end = nullptr;
                              const long n = std::strtol(v.c_str(), &end, 10);
                              if (!v.empty() && *end == '\0') {
                                arr.push_back(n);
                              } else {
                                arr.push_back(v);
                              }
                            }
                            return arr;
                          }});
      Bind(app, "--rate", rates, "/rates", "Poisoning rate per backdoor; repeatable");
    }
    Bind(app, "--semitones", semitones, "/pbsm/semitones", "Pitch boost in semitones");
    Bind(app, "--segment-ms", segment_ms, "/pbsm/segment_ms", "High-energy segment length (ms)");
    Bind(app, "--insert-at", insert_at, "/pbsm/insert_at", "segment_end | segment_start");
    Bind(app, "--frequency-hz", frequency_hz, "/pbsm/signal/frequency_hz", "Tone frequency");
    Bind(app, "--duration-ms", duration_ms, "/pbsm/signal/duration_ms", "Tone duration");
    Bind(app, "--amplitude-ratio", amplitude_ratio, "/pbsm/signal/amplitude_ratio",
         "Tone RMS relative to the host segment");
    Bind(app, "--fade-ms", fade_ms, "/pbsm/signal/fade_ms", "Tone fade length");
    Bind(app, "--frame-size", frame_size, "/stft/frame_size", "STFT frame size");
    Bind(app, "--hop", hop, "/stft/hop", "STFT hop");
    Bind(app, "--window", window, "/stft/window", "hann | sqrt_hann | rect");
    BindPath(app, "--embeddings", embeddings, "/vsvc/embeddings", "Speaker embedding CSV");
    BindPath(app, "--transforms", transforms, "/vsvc/transforms", "Transform slot table CSV");
    Bind(app, "--backend", backend, "/vsvc/backend", "builtin or an external converter command");
    Bind(app, "--selection", selection, "/vsvc/selection", "max_min | max_sum");
  }

  void BindPath(CLI::App* app, const std::string& flag, std::string& var, const std::string& key,
                const std::string& help) {
    auto* opt = app->add_option(flag, var, help);
    bindings.push_back({opt, json::json_pointer(key),
                        [&var] { return json(fs::absolute(var).lexically_normal().string()); }});
  }

  // File tree (if any) with flag overrides applied, and its directory.
  std::pair<json, fs::path> Tree() const {
    std::string path = plan_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kPlanEnv)) path = env;
    }
    json tree = json::object();
    fs::path base;
    if (!path.empty()) {
      const auto text = csv::ReadFile(path);
      try {
        tree = json::parse(text);
      } catch (const json::parse_error& e) {
        Fail(ErrorKind::kConfig, path + ": " + e.what());
      }
      base = fs::path(path).parent_path();
    }
    for (const auto& b : bindings) {
      if (b.opt->count() > 0) tree[b.key] = b.value();
    }
    return {tree, base};
  }

  PoisonPlan Plan() const {
    const auto [tree, base] = Tree();
    return ParsePlan(tree, base);
  }
};

unsigned DefaultJobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<std::string> CommandLine(int argc, char** argv) {
  return std::vector<std::string>(argv, argv + argc);
}

// ---------------------------------------------------------------------------

struct TriggerArgs {
  std::string in, out;
  bool vsvc = false;
  std::string timbre;
  std::size_t num_timbres = 2;
  double warp_alpha = 1.0;
  int pitch_offset = 0;
  CLI::Option* warp_opt = nullptr;
  CLI::Option* offset_opt = nullptr;
  PlanFlags flags;
};

TimbreTransform ResolveTimbre(const TriggerArgs& args, const PoisonPlan& plan) {
  if (!plan.vsvc.embeddings.empty()) {
    const auto sim = ComputeSimilarity(LoadEmbeddings(plan.vsvc.embeddings));
    if (args.num_timbres < 2 || args.num_timbres > sim.size())
      throw UsageError("--num-timbres must lie in [2, " + std::to_string(sim.size()) + "]");
    const auto ids = GreedySelectIds(sim, args.num_timbres, plan.vsvc.selection);
    const auto slots = plan.vsvc.transforms ? LoadTransformSlots(*plan.vsvc.transforms)
                                            : DefaultTransformSlots(ids.size());
    const auto transforms = AssignTransforms(ids, slots, plan.vsvc.backend);
    if (args.timbre.empty()) return transforms.front();
    for (const auto& t : transforms) {
      if (t.timbre_id == args.timbre) return t;
    }
    throw UsageError("timbre '" + args.timbre + "' is not among the selected timbres");
  }
  // Without embeddings the first builtin slot applies unless overridden.
  const TransformSlot slot = DefaultTransformSlots(1).front();
  return {args.timbre.empty() ? "custom" : args.timbre,
          args.warp_opt->count() ? args.warp_alpha : slot.warp_alpha,
          args.offset_opt->count() ? args.pitch_offset : slot.pitch_offset_semitones,
          plan.vsvc.backend};
}

int RunTrigger(const TriggerArgs& args) {
  const PoisonPlan plan = args.flags.Plan();
  const AudioClip clip = LoadWav(args.in);
  if (!args.vsvc && plan.trigger != TriggerKind::kVsvc) {
    const auto r = ApplyPbsmDetailed(clip, plan.pbsm);
    SaveWav(r.audio, args.out);
    const double before = DominantFrequency(clip);
    const double after = DominantFrequency(r.audio);
    std::cout << "trigger=pbsm\n"
              << "semitones=" << plan.pbsm.semitones << "\n"
              << "expected_ratio=" << SemitoneFactor(plan.pbsm.semitones) << "\n"
              << "measured_ratio=" << (before > 0 ? after / before : 0.0) << "\n"
              << "segment_end=" << r.segment_end << "\n"
              << "insert_index=" << r.insert_index << "\n"
              << "peak_overage=" << r.peak_overage << "\n";
    return kExitOk;
  }
  const auto t = ResolveTimbre(args, plan);
  SaveWav(ConvertVoice(clip, t, plan.pbsm.stft), args.out);
  std::cout << "trigger=vsvc\n"
            << "timbre=" << t.timbre_id << "\n"
            << "warp_alpha=" << t.warp_alpha << "\n"
            << "pitch_offset_semitones=" << t.pitch_offset_semitones << "\n";
  return kExitOk;
}

struct SelectArgs {
  std::string embeddings;
  std::size_t count = 2;
  std::string selection = "max_min";
  std::string matrix_out;
};

int RunSelect(const SelectArgs& args) {
  const auto objective = ParseSelectionObjective(args.selection);
  const auto sim = ComputeSimilarity(LoadEmbeddings(args.embeddings));
  if (args.count < 2 || args.count > sim.size())
    throw UsageError("M must lie in [2, K=" + std::to_string(sim.size()) + "], got " +
                     std::to_string(args.count));
  const auto ids = GreedySelectIds(sim, args.count, objective);
  csv::Row row{"selected"};
  row.insert(row.end(), ids.begin(), ids.end());
  std::cout << csv::FormatRow(row);
  if (args.matrix_out.empty()) {
    std::cout << sim.ToCsv();
  } else {
    std::ofstream out(args.matrix_out);
    if (!out) Fail(ErrorKind::kIo, "cannot write " + args.matrix_out);
    out << sim.ToCsv();
  }
  return kExitOk;
}

struct DatasetArgs {
  std::string manifest, out, variant = "full";
  unsigned jobs = DefaultJobs();
  bool keep_going = false;
  PlanFlags flags;
};

int RunDataset(const DatasetArgs& args, bool attack, const std::vector<std::string>& argv) {
  RunRecord record;
  record.command_line = argv;
  record.started_at = UtcNow();
  const PoisonPlan plan = args.flags.Plan();
  record.plan_digest = PlanDigest(plan);
  record.seed = plan.seed;

  const DatasetManifest manifest = LoadManifest(args.manifest);
  const BuildOptions options{args.jobs, args.keep_going};
  fs::create_directories(args.out);
  BuildResult result;
  try {
    result = attack ? BuildAttackTestset(manifest, plan, ParseTestsetVariant(args.variant),
                                         args.out, options)
                    : BuildPoisonedDataset(manifest, plan, args.out, options);
  } catch (const Error&) {
    record.finished_at = UtcNow();
    record.Write(fs::path(args.out) / "run_record.json");
    throw;
  }
  record.errors = result.errors;
  record.finished_at = UtcNow();
  record.Write(fs::path(args.out) / "run_record.json");

  std::size_t poisoned = 0, excluded = 0;
  for (const auto& e : result.manifest.entries) {
    if (e.subset != 0) ++poisoned;
    if (e.excluded_from_asr) ++excluded;
  }
  std::cout << "manifest=" << (fs::path(args.out) / "manifest.csv").string() << "\n"
            << "rows=" << result.manifest.entries.size() << "\n"
            << "poisoned=" << poisoned << "\n"
            << "benign=" << result.manifest.entries.size() - poisoned << "\n";
  if (attack) std::cout << "excluded_from_asr=" << excluded << "\n";
  std::cout << "plan_digest=" << record.plan_digest << "\n";
  for (const auto& e : result.errors) std::cerr << "error: " << e.path << ": " << e.message << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string preds, benign_manifest, attack_manifest, format = "text";
  PlanFlags flags;
};

int RunEvaluate(const EvalArgs& args) {
  if (args.benign_manifest.empty() && args.attack_manifest.empty())
    throw UsageError("evaluate needs --benign-manifest and/or --attack-manifest");
  const auto format = ParseReportFormat(args.format);
  const auto preds = LoadPredictions(args.preds);
  MetricsReport report;
  if (!args.benign_manifest.empty()) {
    report.benign_accuracy = BenignAccuracy(preds, LoadManifest(args.benign_manifest));
  }
  if (!args.attack_manifest.empty()) {
    const PoisonPlan plan = args.flags.Plan();
    report.attack = AttackSuccessRate(preds, LoadPoisonedManifest(args.attack_manifest), plan);
  }
  std::cout << RenderReport(report, format);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor trigger synthesis and poisoned-dataset tooling for speech commands"};
  app.set_version_flag("--version", VOXTRIG_VERSION);
  app.require_subcommand(1);

  TriggerArgs trig;
  auto* trigger = app.add_subcommand("trigger", "Apply a trigger to one WAV file");
  trigger->add_option("in_wav", trig.in, "Input WAV")->required()->check(CLI::ExistingFile);
  trigger->add_option("out_wav", trig.out, "Output WAV")->required();
  auto* pbsm_flag = trigger->add_flag("--pbsm", "Pitch boosting + sound masking (default)");
  auto* vsvc_flag = trigger->add_flag("--vsvc", trig.vsvc, "Voice conversion trigger");
  pbsm_flag->excludes(vsvc_flag);
  trigger->add_option("--timbre", trig.timbre, "Timbre id to convert to");
  trigger->add_option("--num-timbres", trig.num_timbres, "Timbres to select from --embeddings");
  trig.warp_opt = trigger->add_option("--warp-alpha", trig.warp_alpha, "Spectral warp factor");
  trig.offset_opt = trigger->add_option("--pitch-offset", trig.pitch_offset, "Pitch offset in semitones");
  trig.flags.Register(trigger, false);

  SelectArgs sel;
  auto* select = app.add_subcommand("select-timbres", "Greedy max-min timbre selection");
  select->add_option("--embeddings", sel.embeddings, "Embedding CSV")->required();
  select->add_option("-M,--num-timbres", sel.count, "Number of timbres")->required();
  select->add_option("--selection", sel.selection, "max_min | max_sum");
  select->add_option("--matrix-out", sel.matrix_out, "Write the similarity matrix here");

  DatasetArgs poison_args;
  auto* poison = app.add_subcommand("poison", "Build a poisoned training set");
  poison->add_option("--manifest", poison_args.manifest, "Input manifest CSV")->required();
  poison->add_option("--out", poison_args.out, "Output directory")->required();
  poison->add_option("--jobs", poison_args.jobs, "Worker threads");
  poison->add_flag("--keep-going", poison_args.keep_going, "Skip unreadable files");
  poison_args.flags.Register(poison, true);

  DatasetArgs attack_args;
  auto* attack = app.add_subcommand("attack-testset", "Build a triggered test set for ASR");
  attack->add_option("--manifest", attack_args.manifest, "Test manifest CSV")->required();
  attack->add_option("--out", attack_args.out, "Output directory")->required();
  attack->add_option("--variant", attack_args.variant, "full | pitch-only");
  attack->add_option("--jobs", attack_args.jobs, "Worker threads");
  attack->add_flag("--keep-going", attack_args.keep_going, "Skip unreadable files");
  attack_args.flags.Register(attack, true);

  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Compute BA and ASR from predictions");
  evaluate->add_option("--preds", eval_args.preds, "Prediction CSV")->required();
  evaluate->add_option("--benign-manifest", eval_args.benign_manifest, "Clean test manifest");
  evaluate->add_option("--attack-manifest", eval_args.attack_manifest, "Attack test manifest");
  evaluate->add_option("--format", eval_args.format, "text | csv | json-lines");
  eval_args.flags.Register(evaluate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto cmdline = CommandLine(argc, argv);
  try {
    if (*trigger) {
      if (trig.vsvc) trig.flags.trigger = "vsvc";
      return RunTrigger(trig);
    }
    if (*select) return RunSelect(sel);
    if (*poison) return RunDataset(poison_args, false, cmdline);
    if (*attack) return RunDataset(attack_args, true, cmdline);
    if (*evaluate) return RunEvaluate(eval_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << ErrorKindName(e.kind()) << ": " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
