// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "voxtrig/audio.hpp"
#include "voxtrig/error.hpp"
#include "voxtrig/eval.hpp"
#include "voxtrig/pbsm.hpp"
#include "voxtrig/poisoner.hpp"
#include "voxtrig/run_record.hpp"
#include "voxtrig/spectral.hpp"
#include "voxtrig/vsvc.hpp"

namespace py = pybind11;
using namespace voxtrig;

namespace {

PbsmConfig MakePbsm(int semitones, double segment_ms, double frequency_hz, double duration_ms,
                    double amplitude_ratio, const std::string& insert_at) {
  PbsmConfig cfg;
  cfg.semitones = semitones;
  cfg.segment_ms = segment_ms;
  cfg.signal.frequency_hz = frequency_hz;
  cfg.signal.duration_ms = duration_ms;
  cfg.signal.amplitude_ratio = amplitude_ratio;
  cfg.insert_at = ParseInsertAt(insert_at);
  return cfg;
}

PoisonPlan PlanFromPython(const std::string& json_text, const std::string& base_dir) {
  return ParsePlan(nlohmann::json::parse(json_text), base_dir);
}

py::dict ReportDict(const Fraction& f) {
  py::dict d;
  d["numerator"] = f.numerator;
  d["denominator"] = f.denominator;
  d["value"] = f.value();
  return d;
}

}  // namespace

PYBIND11_MODULE(_voxtrig, m) {
  m.doc() = "Native core of voxtrig";
  m.attr("__version__") = VOXTRIG_VERSION;
  m.attr("SAMPLER_ID") = std::string(kSamplerId);

  static py::exception<Error> error(m, "VoxtrigError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object kind = py::str(ErrorKindName(e.kind()));
      PyErr_SetObject(error.ptr(), py::make_tuple(kind, e.what()).ptr());
    }
  });

  m.def("load_wav", [](const std::filesystem::path& p) {
    const auto clip = LoadWav(p);
    return py::make_tuple(clip.data(), clip.sample_rate());
  }, "Returns (samples, sample_rate).");
  m.def("save_wav", [](std::vector<double> samples, int rate, const std::filesystem::path& p) {
    SaveWav(AudioClip(std::move(samples), rate), p);
  });
  m.def("snr_db", [](const std::vector<double>& a, const std::vector<double>& b) { return SnrDb(a, b); });

  m.def("semitone_factor", &SemitoneFactor);
  m.def("pitch_shift", [](std::vector<double> samples, int rate, int semitones) {
    return PitchShift(AudioClip(std::move(samples), rate), semitones).data();
  });
  m.def("dominant_frequency", [](std::vector<double> samples, int rate) {
    return DominantFrequency(AudioClip(std::move(samples), rate));
  });
  m.def("locate_max_energy", [](const std::vector<double>& x, std::size_t window) {
    return LocateMaxEnergy(x, window);
  });
  m.def(
      "apply_pbsm",
      [](std::vector<double> samples, int rate, int semitones, double segment_ms,
         double frequency_hz, double duration_ms, double amplitude_ratio,
         const std::string& insert_at) {
        const auto r = ApplyPbsmDetailed(
            AudioClip(std::move(samples), rate),
            MakePbsm(semitones, segment_ms, frequency_hz, duration_ms, amplitude_ratio, insert_at));
        py::dict d;
        d["audio"] = r.audio.data();
        d["segment_end"] = r.segment_end;
        d["insert_index"] = r.insert_index;
        d["host_rms"] = r.host_rms;
        d["tone_rms"] = r.tone_rms;
        d["peak_overage"] = r.peak_overage;
        return d;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("semitones") = 5,
      py::arg("segment_ms") = 100.0, py::arg("frequency_hz") = 6000.0,
      py::arg("duration_ms") = 100.0, py::arg("amplitude_ratio") = 0.5,
      py::arg("insert_at") = "segment_end");
  m.def(
      "apply_pitch_only",
      [](std::vector<double> samples, int rate, int semitones) {
        PbsmConfig cfg;
        cfg.semitones = semitones;
        return ApplyPitchOnly(AudioClip(std::move(samples), rate), cfg).data();
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("semitones") = 5);

  m.def(
      "greedy_select",
      [](std::vector<std::string> ids, std::vector<std::vector<double>> vectors, std::size_t count,
         const std::string& objective) {
        const auto sim = ComputeSimilarity(EmbeddingSet(std::move(ids), std::move(vectors)));
        return GreedySelectIds(sim, count, ParseSelectionObjective(objective));
      },
      py::arg("ids"), py::arg("vectors"), py::arg("count"), py::arg("objective") = "max_min");
  m.def(
      "convert_voice",
      [](std::vector<double> samples, int rate, double warp_alpha, int pitch_offset,
         const std::string& backend, const std::string& timbre_id) {
        const TimbreTransform t{timbre_id, warp_alpha, pitch_offset,
                                {backend == "builtin" ? std::string() : backend}};
        return ConvertVoice(AudioClip(std::move(samples), rate), t).data();
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("warp_alpha") = 1.0,
      py::arg("pitch_offset") = 0, py::arg("backend") = "builtin", py::arg("timbre_id") = "custom");

  m.def("subset_size", &SubsetSize);
  m.def(
      "poison_label",
      [](int label, const std::string& mode, int target, int num_classes) {
        AttackMode am = AttackMode::kAllToOne;
        if (mode == "all_to_all") {
          am = AttackMode::kAllToAll;
        } else if (mode == "clean_label") {
          am = AttackMode::kCleanLabel;
        } else if (mode != "all_to_one") {
          throw Error(ErrorKind::kConfig, "unknown mode '" + mode + "'");
        }
        return PoisonLabel(label, am, target, num_classes);
      },
      py::arg("label"), py::arg("mode"), py::arg("target") = -1, py::arg("num_classes"));
  m.def(
      "plan_digest",
      [](const std::string& json_text, const std::string& base_dir) {
        return PlanDigest(PlanFromPython(json_text, base_dir));
      },
      py::arg("plan_json"), py::arg("base_dir") = "");

  m.def(
      "build_poisoned_dataset",
      [](const std::filesystem::path& manifest, const std::filesystem::path& plan,
         const std::filesystem::path& out_dir, unsigned jobs, bool keep_going) {
        py::gil_scoped_release release;
        const auto r = BuildPoisonedDataset(LoadManifest(manifest), LoadPlan(plan), out_dir,
                                            {jobs, keep_going});
        return r.manifest.ToCsv();
      },
      py::arg("manifest"), py::arg("plan"), py::arg("out_dir"), py::arg("jobs") = 1,
      py::arg("keep_going") = false, "Writes the poisoned set; returns the manifest CSV text.");
  m.def(
      "build_attack_testset",
      [](const std::filesystem::path& manifest, const std::filesystem::path& plan,
         const std::filesystem::path& out_dir, const std::string& variant, unsigned jobs) {
        py::gil_scoped_release release;
        const auto r = BuildAttackTestset(LoadManifest(manifest), LoadPlan(plan),
                                          ParseTestsetVariant(variant), out_dir, {jobs, false});
        return r.manifest.ToCsv();
      },
      py::arg("manifest"), py::arg("plan"), py::arg("out_dir"), py::arg("variant") = "full",
      py::arg("jobs") = 1);
  m.def(
      "evaluate",
      [](const std::filesystem::path& preds, std::optional<std::filesystem::path> benign,
         std::optional<std::filesystem::path> attack, std::optional<std::filesystem::path> plan) {
        const auto p = LoadPredictions(preds);
        py::dict out;
        if (benign) out["benign_accuracy"] = ReportDict(BenignAccuracy(p, LoadManifest(*benign)));
        if (attack) {
          if (!plan) throw Error(ErrorKind::kConfig, "attack evaluation needs the plan");
          const auto a = AttackSuccessRate(p, LoadPoisonedManifest(*attack), LoadPlan(*plan));
          out["asr_overall"] = ReportDict(a.overall);
          py::dict per_class;
          for (const auto& [c, f] : a.per_class) per_class[py::int_(c)] = ReportDict(f);
          out["asr_per_class"] = per_class;
        }
        return out;
      },
      py::arg("preds"), py::arg("benign_manifest") = py::none(),
      py::arg("attack_manifest") = py::none(), py::arg("plan") = py::none());
}
