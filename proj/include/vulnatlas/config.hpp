#pragma once

// Pipeline configuration. TOML is the primary format; JSON with the same
// structure is accepted. Relative paths resolve against the config file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/frame.hpp"
#include "vulnatlas/geomesh.hpp"
#include "vulnatlas/indices.hpp"
#include "vulnatlas/spatial.hpp"

namespace vulnatlas::pipeline {

struct TableInput {
  std::string source;
  std::string path;
  std::string geoid_column = "GEOID";
};

struct PipelineConfig {
  std::filesystem::path base_dir;

  std::string boundaries;
  std::string geoid_property = "GEOID";
  std::vector<TableInput> tables;
  std::string flood;
  std::string city;  // optional
  std::string aqi;   // optional

  std::vector<IndicatorSpec> indicators;
  double max_missing_fraction = 0.2;
  double winsor_lower = 5.0;
  double winsor_upper = 95.0;

  indices::IndexConfig index;
  double flood_buffer_m = 1.0;

  std::vector<std::string> correlation_variables;
  std::vector<std::string> vif_variables;
  std::vector<std::string> ej_continuous;
  std::vector<std::string> ej_categorical;

  std::vector<std::string> cluster_features;
  std::size_t k_min = 2;
  std::size_t k_max = 10;
  std::size_t k_fixed = 0;  // 0 = silhouette selection
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  std::string profile_key = "poverty_pct";

  geo::ContiguityRule contiguity = geo::ContiguityRule::Queen;
  spatial::WeightMode weights = spatial::WeightMode::RowStandardized;
  std::size_t moran_permutations = 999;
  std::size_t lisa_permutations = 999;
  double alpha = 0.05;
  std::string spatial_variable = "composite";
  std::size_t jenks_classes = 5;

  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
  unsigned workers = 1;

  nlohmann::json fetch = nlohmann::json::object();  // optional [fetch] table, used only by `vulnatlas fetch`

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path output_path() const { return resolve(output_dir); }
};

inline constexpr std::string_view kFloodColumn = "flood_pct";
inline constexpr std::string_view kHealthColumn = "health_score";
inline constexpr std::string_view kSocioColumn = "socio_score";
inline constexpr std::string_view kCompositeColumn = "composite";
std::string normalized_name(std::string_view indicator);  // "<name>_norm"

/// Parses TOML (is_toml) or JSON text. Unknown keys are rejected; derived
/// lists left empty are filled from the indicator set.
PipelineConfig parse_config(std::string_view text, bool is_toml, const std::filesystem::path& base_dir);
/// Format chosen by extension (.json, otherwise TOML).
PipelineConfig load_config(const std::filesystem::path& path);

/// Full structural validation; with check_paths also requires every input file.
void validate(const PipelineConfig& config, bool check_paths = true);

/// Every setting including defaults, as echoed in the run manifest.
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace vulnatlas::pipeline
