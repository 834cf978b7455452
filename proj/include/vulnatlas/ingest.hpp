#pragma once

// Reading tract boundaries and attribute tables, GEOID standardization,
// multi-source joining and city subsetting.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vulnatlas/frame.hpp"
#include "vulnatlas/geomesh.hpp"

namespace vulnatlas::ingest {

std::string make_geoid(std::string_view state, std::string_view county, std::string_view tract);
std::string make_geoid(long state, long county, long tract);

struct GeoidParts {
  std::string state;
  std::string county;
  std::string tract;
};
GeoidParts split_geoid(std::string_view geoid);
bool is_valid_geoid(std::string_view geoid);

/// Restores leading zeros lost by spreadsheet round trips ("7081010600").
/// Throws MalformedComponent for anything that is not an 11-digit code after padding.
std::string normalize_geoid(std::string_view raw);

struct Feature {
  geo::MultiPolygon geometry;
  nlohmann::json properties;
};

/// Parses a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
/// Coordinates are WGS84 and are projected to Web Mercator when `project`.
std::vector<Feature> parse_feature_collection(std::string_view text, bool project = true);
std::vector<Feature> read_feature_collection(const std::filesystem::path& path,
                                             bool project = true);

/// GeoJSON geometry object for a polygon set, emitted in geographic coordinates.
nlohmann::json geometry_to_json(const geo::MultiPolygon& polygon);

using BoundarySet = std::map<std::string, geo::MultiPolygon>;

BoundarySet parse_tract_boundaries(std::string_view text,
                                   std::string_view geoid_property = "GEOID");
BoundarySet read_tract_boundaries(const std::filesystem::path& path,
                                  std::string_view geoid_property = "GEOID");

/// All features of a file merged into one polygon set (city limits, flood layer).
geo::MultiPolygon read_polygon_union(const std::filesystem::path& path);

struct AttributeTable {
  TractFrame frame;  // no geometry
  std::string source;
  std::size_t zero_denominator_cells = 0;
  std::size_t clamped_rate_cells = 0;
  std::vector<std::string> warnings;
};

AttributeTable parse_attribute_table(std::string_view text, std::span<const IndicatorSpec> specs,
                                     std::string source, std::string_view geoid_column = "GEOID");
AttributeTable read_attribute_table(const std::filesystem::path& path,
                                    std::span<const IndicatorSpec> specs, std::string source,
                                    std::string_view geoid_column = "GEOID");

struct JoinReport {
  /// (source tag, keys of that source absent from the joined frame)
  std::vector<std::pair<std::string, std::vector<std::string>>> unmatched;
  /// (original column name, disambiguated name)
  std::vector<std::pair<std::string, std::string>> renamed;
  std::size_t rows = 0;
};

struct JoinResult {
  TractFrame frame;
  JoinReport report;
};

inline constexpr std::string_view kBoundarySource = "boundaries";

/// Inner join on GEOID. Rows are ordered by GEOID; columns keep table order.
JoinResult join_sources(const BoundarySet& boundaries, std::vector<AttributeTable> tables);

/// Keeps tracts whose intersection with the city has positive area.
TractFrame subset_to_city(const TractFrame& frame, const geo::MultiPolygon& city_boundary);

inline constexpr std::string_view kAqiColumn = "county_aqi";

/// Attaches a county-level AQI scalar (CSV: county_fips,year,aqi) uniformly
/// to every tract of that county as a descriptive column.
void attach_county_aqi(TractFrame& frame, const std::filesystem::path& aqi_csv);

}  // namespace vulnatlas::ingest
