// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "voxtrig/run_record.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "voxtrig/error.hpp"

namespace voxtrig {

std::string Fnv1a64Hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string PlanDigest(const PoisonPlan& plan) { return Fnv1a64Hex(PlanToJson(plan).dump()); }

std::string UtcNow() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunRecord::ToJson() const {
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& e : errors) errs.push_back({{"path", e.path}, {"message", e.message}});
  return {{"command_line", command_line}, {"plan_digest", plan_digest},
          {"seed", seed},                 {"tool_version", tool_version},
          {"sampler", kSamplerId},        {"started_at", started_at},
          {"finished_at", finished_at},   {"errors", errs}};
}

void RunRecord::Write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << ToJson().dump(2) << '\n';
}

}  // namespace voxtrig
