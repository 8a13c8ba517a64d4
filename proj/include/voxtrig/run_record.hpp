// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "voxtrig/poisoner.hpp"

namespace voxtrig {

// 64-bit FNV-1a over the compact dump of the canonical plan tree, as 16 hex
// digits. Object keys are sorted, so equal plans digest equally.
std::string PlanDigest(const PoisonPlan& plan);

std::string Fnv1a64Hex(std::string_view bytes);

struct RunRecord {
  std::vector<std::string> command_line;
  std::string plan_digest;
  std::uint64_t seed = 0;
  std::string tool_version = VOXTRIG_VERSION;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  std::vector<FileError> errors;

  nlohmann::json ToJson() const;
  void Write(const std::filesystem::path& path) const;
};

std::string UtcNow();

}  // namespace voxtrig
