#pragma once

// Stage output persistence and artifact emission. Every artifact can be
// rebuilt from a run directory's stored stage outputs alone.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/cluster.hpp"
#include "vulnatlas/frame.hpp"
#include "vulnatlas/spatial.hpp"
#include "vulnatlas/stats.hpp"

namespace vulnatlas::report {

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// `<stem>.csv` with GEOID plus every column and `<stem>.schema.json` with
/// column kinds and sources. Missing cells are empty.
void save_frame(const std::filesystem::path& dir, const std::string& stem, const TractFrame& frame);
TractFrame load_frame(const std::filesystem::path& dir, const std::string& stem);

/// GeoJSON of the frame geometry in geographic coordinates, GEOID only.
void save_geometry(const std::filesystem::path& path, const TractFrame& frame);
/// Features keyed by GEOID, coordinates kept geographic.
std::map<std::string, geo::MultiPolygon> load_geometry(const std::filesystem::path& path);

struct ScoredTract {
  std::string geoid;
  nlohmann::json properties;
};

struct LisaRow {
  std::optional<double> local_i;
  std::optional<double> pseudo_p;
  std::string quadrant;  // empty for islands
  bool significant = false;
  bool island = false;
};

struct ScoredInputs {
  const TractFrame* frame = nullptr;  // raw indicators, scores; geometry attached
  std::vector<std::string> raw_columns;
  std::vector<int> decile;
  std::vector<bool> top_decile;
  std::map<std::string, int> kmeans;  // geoid -> 1-based cluster
  std::map<std::string, int> ward;
  std::map<std::string, LisaRow> lisa;
  std::map<std::string, int> jenks;
};

/// Throws KeyMismatch when any tract lacks a cluster, LISA or class entry.
nlohmann::json scored_feature_collection(const ScoredInputs& in);
void write_scored_geojson(const std::filesystem::path& path, const ScoredInputs& in);

std::string profile_csv(const cluster::ClusterProfile& profile);
std::string correlation_csv(const stats::CorrelationMatrix& m);
std::string ej_csv(const std::vector<stats::EjOutcome>& outcomes);
std::string k_selection_csv(const cluster::KSelection& selection);
std::string vif_csv(const std::vector<stats::VifResult>& rows);

nlohmann::json to_json(const std::vector<stats::VifResult>& rows);
std::vector<stats::VifResult> vif_from_json(const nlohmann::json& j);

/// Names of the files emit writes, relative to the run directory.
struct EmitSummary {
  std::vector<std::string> tables;
  std::vector<std::string> plots;
  std::string scored_geojson;
};

/// Rebuilds scored GeoJSON, tables and plots from `<run_dir>/stages`.
EmitSummary emit_from_run_dir(const std::filesystem::path& run_dir);

}  // namespace vulnatlas::report
