// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/vsvc.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "voxtrig/csv.hpp"
#include "voxtrig/error.hpp"
#include "voxtrig/pbsm.hpp"

namespace voxtrig {

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingSet::EmbeddingSet(std::vector<std::string> ids, std::vector<std::vector<double>> vectors)
    : ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (ids_.size() != vectors_.size())
    Fail(ErrorKind::kFormat, "embedding ids and vectors differ in count");
  if (ids_.size() < 2)
    Fail(ErrorKind::kFormat, "need at least two speaker embeddings, got " +
                                 std::to_string(ids_.size()));
  const std::size_t d = vectors_.front().size();
  if (d == 0) Fail(ErrorKind::kFormat, "embedding dimension must be >= 1");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!seen.insert(ids_[i]).second)
      Fail(ErrorKind::kFormat, "duplicate speaker id '" + ids_[i] + "'");
    if (vectors_[i].size() != d)
      Fail(ErrorKind::kFormat, "embedding '" + ids_[i] + "' has dimension " +
                                   std::to_string(vectors_[i].size()) + ", expected " +
                                   std::to_string(d));
    for (double v : vectors_[i]) {
      if (!std::isfinite(v))
        Fail(ErrorKind::kFormat, "embedding '" + ids_[i] + "' has a non-finite value");
    }
  }
}

EmbeddingSet ParseEmbeddings(std::string_view csv_text) {
  const auto rows = csv::Parse(csv_text);
  if (rows.empty()) Fail(ErrorKind::kFormat, "embedding file is empty");
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "id")
    Fail(ErrorKind::kFormat, "embedding header must be id,v0,...,v{d-1}");
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "v" + std::to_string(c - 1))
      Fail(ErrorKind::kFormat, "unexpected embedding column '" + header[c] + "'");
  }
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      Fail(ErrorKind::kFormat, "embedding row " + std::to_string(r) + " has " +
                                   std::to_string(row.size()) + " fields, expected " +
                                   std::to_string(header.size()));
    ids.push_back(row[0]);
    std::vector<double> v;
    v.reserve(row.size() - 1);
    for (std::size_t c = 1; c < row.size(); ++c) v.push_back(csv::ParseDouble(row[c], "embedding value"));
    vectors.push_back(std::move(v));
  }
  return EmbeddingSet(std::move(ids), std::move(vectors));
}

EmbeddingSet LoadEmbeddings(const std::filesystem::path& path) {
  const auto text = csv::ReadFile(path);
  try {
    return ParseEmbeddings(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Similarity and selection

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> ids, std::vector<double> entries)
    : ids_(std::move(ids)), entries_(std::move(entries)) {
  if (entries_.size() != ids_.size() * ids_.size())
    Fail(ErrorKind::kInvalidInput, "similarity matrix must be K x K");
}

std::string SimilarityMatrix::ToCsv() const {
  csv::Row header{"id"};
  header.insert(header.end(), ids_.begin(), ids_.end());
  std::string out = csv::FormatRow(header);
  for (std::size_t i = 0; i < size(); ++i) {
    csv::Row row{ids_[i]};
    for (std::size_t j = 0; j < size(); ++j) row.push_back(csv::FormatDouble(at(i, j)));
    out += csv::FormatRow(row);
  }
  return out;
}

SimilarityMatrix ComputeSimilarity(const EmbeddingSet& embeddings) {
  const std::size_t k = embeddings.size();
  const auto& v = embeddings.vectors();
  std::vector<double> entries(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < embeddings.dim(); ++d) {
        const double diff = v[i][d] - v[j][d];
        acc += diff * diff;
      }
      entries[i * k + j] = entries[j * k + i] = std::sqrt(acc);
    }
  }
  return SimilarityMatrix(embeddings.ids(), std::move(entries));
}

SelectionObjective ParseSelectionObjective(std::string_view name) {
  if (name == "max_min") return SelectionObjective::kMaxMin;
  if (name == "max_sum") return SelectionObjective::kMaxSum;
  Fail(ErrorKind::kConfig, "unknown selection objective '" + std::string(name) + "'");
}

std::vector<std::size_t> GreedySelect(const SimilarityMatrix& sim, std::size_t count,
                                      SelectionObjective objective) {
  const std::size_t k = sim.size();
  if (count < 2 || count > k)
    Fail(ErrorKind::kInvalidInput, "number of timbres must lie in [2, " + std::to_string(k) +
                                       "], got " + std::to_string(count));

  std::size_t a = 0, b = 1;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (sim.at(i, j) > sim.at(a, b)) {
        a = i;
        b = j;
      }
    }
  }
  std::vector<std::size_t> selected{a, b};
  std::vector<bool> taken(k, false);
  taken[a] = taken[b] = true;

  while (selected.size() < count) {
    std::size_t best = k;
    double best_score = -1.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (taken[c]) continue;
      double score = objective == SelectionObjective::kMaxMin
                         ? std::numeric_limits<double>::infinity()
                         : 0.0;
      for (std::size_t s : selected) {
        if (objective == SelectionObjective::kMaxMin) {
          score = std::min(score, sim.at(c, s));
        } else {
          score += sim.at(c, s);
        }
      }
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    selected.push_back(best);
    taken[best] = true;
  }
  return selected;
}

std::vector<std::string> GreedySelectIds(const SimilarityMatrix& sim, std::size_t count,
                                         SelectionObjective objective) {
  std::vector<std::string> ids;
  for (std::size_t i : GreedySelect(sim, count, objective)) ids.push_back(sim.ids()[i]);
  return ids;
}

// ---------------------------------------------------------------------------
// Transforms

std::vector<TransformSlot> DefaultTransformSlots(std::size_t count) {
  constexpr double kLo = 0.8, kHi = 1.25;
  std::vector<TransformSlot> slots;
  for (std::size_t i = 0; i < count; ++i) {
    const double alpha =
        count == 1 ? kLo
                   : kLo + (kHi - kLo) * static_cast<double>(i) / static_cast<double>(count - 1);
    slots.push_back({alpha, i % 2 == 0 ? -2 : 2});
  }
  return slots;
}

std::vector<TransformSlot> LoadTransformSlots(const std::filesystem::path& path) {
  const auto rows = csv::ReadFileRows(path);
  if (rows.empty()) Fail(ErrorKind::kConfig, path.string() + ": transform table is empty");
  const auto name = path.string();
  const std::size_t alpha_col = csv::RequireColumn(rows[0], "warp_alpha", name);
  const std::size_t pitch_col = csv::RequireColumn(rows[0], "pitch_offset_semitones", name);
  std::vector<TransformSlot> slots;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      Fail(ErrorKind::kFormat, name + ": row " + std::to_string(r) + " is ragged");
    slots.push_back({csv::ParseDouble(rows[r][alpha_col], "warp_alpha"),
                     static_cast<int>(csv::ParseInt(rows[r][pitch_col], "pitch_offset_semitones"))});
  }
  return slots;
}

std::vector<TimbreTransform> AssignTransforms(const std::vector<std::string>& selected,
                                              const std::vector<TransformSlot>& slots,
                                              const ConversionBackend& backend) {
  if (selected.empty()) Fail(ErrorKind::kInvalidInput, "no timbres selected");
  if (slots.size() < selected.size())
    Fail(ErrorKind::kConfig, "transform table has " + std::to_string(slots.size()) +
                                 " slots for " + std::to_string(selected.size()) + " timbres");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!(slots[i].warp_alpha >= kMinWarpAlpha && slots[i].warp_alpha <= kMaxWarpAlpha))
      Fail(ErrorKind::kConfig, "warp_alpha " + csv::FormatDouble(slots[i].warp_alpha) +
                                   " outside [0.7, 1.4]");
    for (std::size_t j = 0; j < i; ++j) {
      if (slots[i].warp_alpha == slots[j].warp_alpha &&
          slots[i].pitch_offset_semitones == slots[j].pitch_offset_semitones)
        Fail(ErrorKind::kConfig, "transform table repeats slot " + std::to_string(j + 1));
    }
  }
  std::vector<TimbreTransform> out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    out.push_back({selected[i], slots[i].warp_alpha, slots[i].pitch_offset_semitones, backend});
  }
  return out;
}

std::vector<TimbreTransform> AssignTransforms(const std::vector<std::string>& selected,
                                              const ConversionBackend& backend) {
  return AssignTransforms(selected, DefaultTransformSlots(selected.size()), backend);
}

// ---------------------------------------------------------------------------
// Conversion

namespace {

// Quefrency cutoff separating the spectral envelope from pitch harmonics.
constexpr std::size_t kEnvelopeLifter = 40;

std::vector<double> LogEnvelope(const Fft& fft, std::span<const Complex> bins) {
  const std::size_t n = fft.size();
  const std::size_t lifter = std::min(kEnvelopeLifter, n / 2 - 1);
  std::vector<Complex> buf(n);
  for (std::size_t k = 0; k < bins.size(); ++k) buf[k] = std::log(std::abs(bins[k]) + 1e-10);
  for (std::size_t k = 1; k < n / 2; ++k) buf[n - k] = buf[k];
  fft.Inverse(buf);
  for (std::size_t q = lifter + 1; q < n - lifter; ++q) buf[q] = 0.0;
  fft.Forward(buf);
  std::vector<double> env(bins.size());
  for (std::size_t k = 0; k < env.size(); ++k) env[k] = buf[k].real();
  return env;
}

double Interpolate(std::span<const double> v, double pos) {
  if (pos <= 0.0) return v.front();
  const double last = static_cast<double>(v.size() - 1);
  if (pos >= last) return v.back();
  const auto i = static_cast<std::size_t>(pos);
  const double a = pos - static_cast<double>(i);
  return (1.0 - a) * v[i] + a * v[i + 1];
}

std::vector<double> WarpEnvelope(const AudioClip& clip, double alpha, const StftParams& stft) {
  Spectrogram spec = Stft(clip, stft);
  const Fft fft(stft.frame_size);
  for (auto& frame : spec.frames) {
    const auto env = LogEnvelope(fft, frame);
    for (std::size_t k = 0; k < frame.size(); ++k) {
      const double warped = Interpolate(env, static_cast<double>(k) / alpha);
      frame[k] *= std::exp(warped - env[k]);
    }
  }
  return IstftSamples(spec);
}

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

class TempDir {
 public:
  TempDir() {
    auto pattern = (std::filesystem::temp_directory_path() / "voxtrig-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr)
      Fail(ErrorKind::kIo, "cannot create temporary directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

AudioClip ConvertExternal(const AudioClip& clip, const TimbreTransform& t) {
  TempDir dir;
  const auto in = dir.path() / "in.wav";
  const auto out = dir.path() / "out.wav";
  SaveWav(clip, in);
  const std::string cmd = t.backend.command + " --in " + ShellQuote(in.string()) + " --out " +
                          ShellQuote(out.string()) + " --timbre " + ShellQuote(t.timbre_id);
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    Fail(ErrorKind::kBackend, "voice conversion backend failed (status " +
                                  std::to_string(status) + "): " + t.backend.command);
  if (!std::filesystem::exists(out))
    Fail(ErrorKind::kBackend, "voice conversion backend produced no output file");
  AudioClip result = [&] {
    try {
      return LoadWav(out);
    } catch (const Error& e) {
      throw Error(ErrorKind::kBackend, std::string("unreadable backend output: ") + e.what());
    }
  }();
  if (result.sample_rate() != clip.sample_rate())
    Fail(ErrorKind::kBackend, "backend changed the sample rate from " +
                                  std::to_string(clip.sample_rate()) + " to " +
                                  std::to_string(result.sample_rate()));
  const double ratio = static_cast<double>(result.size()) / static_cast<double>(clip.size());
  if (ratio < 0.9 || ratio > 1.1)
    Fail(ErrorKind::kBackend, "backend output duration differs from input by more than 10%");
  return result;
}

}  // namespace

AudioClip ConvertVoice(const AudioClip& clip, const TimbreTransform& transform,
                       const StftParams& stft) {
  if (!(transform.warp_alpha >= kMinWarpAlpha && transform.warp_alpha <= kMaxWarpAlpha))
    Fail(ErrorKind::kInvalidInput, "warp_alpha " + csv::FormatDouble(transform.warp_alpha) +
                                       " outside [0.7, 1.4]");
  if (!transform.backend.builtin()) return ConvertExternal(clip, transform);

  stft.Validate();
  if (clip.size() < stft.frame_size)
    Fail(ErrorKind::kInvalidInput, "clip is shorter than one analysis frame");

  std::vector<double> warped =
      transform.warp_alpha == 1.0 ? clip.data() : WarpEnvelope(clip, transform.warp_alpha, stft);
  if (transform.pitch_offset_semitones != 0) {
    warped = ShiftPitchRaw(AudioClip(std::move(warped), clip.sample_rate()),
                           SemitoneFactor(transform.pitch_offset_semitones), stft);
  }
  HardClip(warped);
  return AudioClip(std::move(warped), clip.sample_rate());
}

}  // namespace voxtrig
