#pragma once

// End-to-end run: ingest -> preprocess -> indices -> stats -> cluster ->
// spatial -> emit. Each stage persists its outputs under <out>/stages before
// the next starts, so a failed run keeps everything computed so far.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/config.hpp"

namespace vulnatlas::pipeline {

const std::vector<std::string>& stage_names();

enum class StageStatus { Ok, Failed, Skipped };

struct StageRecord {
  std::string name;
  StageStatus status = StageStatus::Skipped;
  double seconds = 0.0;
  nlohmann::json params = nlohmann::json::object();
  std::string error_code;
  std::string error_message;
};

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<StageRecord> stages;
  nlohmann::json manifest;
  bool ok() const;
  std::optional<std::string> failed_stage() const;
};

/// Stream indices for seeds derived from the master seed.
inline constexpr std::uint64_t kClusterStream = 1;
inline constexpr std::uint64_t kMoranStream = 2;
inline constexpr std::uint64_t kLisaStream = 3;

/// Runs every stage. Stage failures are recorded (manifest plus a FAILED
/// marker file), never thrown; configuration problems throw ConfigError.
RunResult run_pipeline(const PipelineConfig& config,
                       const std::optional<std::filesystem::path>& output_override = std::nullopt);

/// Process exit code for a result: 0 success, 3 stage failure.
int exit_code(const RunResult& result);

/// Manifest with wall-clock fields removed, for run-to-run comparison.
nlohmann::json strip_timing(nlohmann::json manifest);

}  // namespace vulnatlas::pipeline
