// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Voiceprint selection and voice conversion (VSVC) trigger.
//
// Speaker embeddings are compared by l2 distance, a maximally separated set
// of timbres is chosen greedily, and each chosen timbre is bound to a voice
// conversion transform.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxtrig/audio.hpp"
#include "voxtrig/spectral.hpp"

namespace voxtrig {

class EmbeddingSet {
 public:
  // Throws kFormat on duplicate ids, ragged or non-finite vectors, d < 1 or
  // fewer than two speakers.
  EmbeddingSet(std::vector<std::string> ids, std::vector<std::vector<double>> vectors);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return vectors_.front().size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::vector<double>>& vectors() const { return vectors_; }

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> vectors_;
};

// CSV with header `id,v0,...,v{d-1}`.
EmbeddingSet LoadEmbeddings(const std::filesystem::path& path);
EmbeddingSet ParseEmbeddings(std::string_view csv_text);

// Pairwise l2 distances. Symmetric with an exactly zero diagonal.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::vector<std::string> ids, std::vector<double> entries);

  std::size_t size() const { return ids_.size(); }
  double at(std::size_t i, std::size_t j) const { return entries_[i * ids_.size() + j]; }
  const std::vector<std::string>& ids() const { return ids_; }

  std::string ToCsv() const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> entries_;
};

SimilarityMatrix ComputeSimilarity(const EmbeddingSet& embeddings);

// Rule for "farthest from the selected set".
enum class SelectionObjective { kMaxMin, kMaxSum };

SelectionObjective ParseSelectionObjective(std::string_view name);

// Greedy timbre selection. Seeds with the farthest pair (i < j, first in
// row-major order on ties), then repeatedly adds the candidate whose minimum
// (or summed) distance to the selection is largest, lowest index on ties.
// Returns indices in selection order. Requires 2 <= count <= K.
std::vector<std::size_t> GreedySelect(const SimilarityMatrix& sim, std::size_t count,
                                      SelectionObjective objective = SelectionObjective::kMaxMin);

std::vector<std::string> GreedySelectIds(const SimilarityMatrix& sim, std::size_t count,
                                         SelectionObjective objective = SelectionObjective::kMaxMin);

inline constexpr double kMinWarpAlpha = 0.7;
inline constexpr double kMaxWarpAlpha = 1.4;

struct ConversionBackend {
  // Empty command means the built-in spectral-warp converter.
  std::string command;

  bool builtin() const { return command.empty(); }
};

struct TimbreTransform {
  std::string timbre_id;
  double warp_alpha = 1.0;
  int pitch_offset_semitones = 0;
  ConversionBackend backend;
};

struct TransformSlot {
  double warp_alpha;
  int pitch_offset_semitones;
};

// Builtin slots: warp_alpha evenly spread over [0.8, 1.25] (0.8 alone for a
// single timbre), pitch offsets alternating -2, +2.
std::vector<TransformSlot> DefaultTransformSlots(std::size_t count);

// CSV with header `warp_alpha,pitch_offset_semitones`; one slot per row.
std::vector<TransformSlot> LoadTransformSlots(const std::filesystem::path& path);

// Binds selected[i] to slots[i]. Throws kConfig if there are fewer slots than
// timbres, slots repeat, or warp_alpha is outside [0.7, 1.4].
std::vector<TimbreTransform> AssignTransforms(const std::vector<std::string>& selected,
                                              const std::vector<TransformSlot>& slots,
                                              const ConversionBackend& backend = {});
std::vector<TimbreTransform> AssignTransforms(const std::vector<std::string>& selected,
                                              const ConversionBackend& backend = {});

// Built-in converter: cepstral spectral-envelope warp by warp_alpha, then a
// duration-preserving pitch shift by pitch_offset_semitones. Deterministic.
// External backends are run as
//   <command> --in <wav> --out <wav> --timbre <id>
// and the result must exit 0, exist, match the input rate and be within 10%
// of its duration.
AudioClip ConvertVoice(const AudioClip& clip, const TimbreTransform& transform,
                       const StftParams& stft = {});

}  // namespace voxtrig
