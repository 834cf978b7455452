#pragma once

// Synthetic 10 x 10 tract city with four planted neighbourhood typologies.
// Six corner cells fall outside the city limits, leaving 94 tracts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vulnatlas::synth {

struct CityOptions {
  std::uint64_t seed = 20240917;
  double cell_m = 1500.0;
  double noise = 0.12;  // per-variable sd as a fraction of the spread of typology means
  std::string state = "37";
  std::string county = "081";
};

struct Typology {
  std::string name;
  std::vector<double> means;  // aligned with variables()
};

/// Planted variables in file order: asthma, copd, chd, poor_health,
/// disability_pct, flood_pct, renter_pct, pre1980_pct, poverty_pct,
/// no_diploma_pct, age65_pct, limited_english_pct, no_vehicle_pct, median_rent.
const std::vector<std::string>& variables();
const std::vector<Typology>& typologies();

struct CityTruth {
  std::vector<std::string> geoids;  // all 100 cells, row-major
  std::vector<int> typology;        // 0..3
  std::vector<bool> in_city;
  std::vector<std::vector<double>> planted;  // [cell][variable]
};

CityTruth generate(const CityOptions& options = {});

/// Writes boundaries.geojson, city.geojson, acs.csv, places.csv,
/// flood.geojson, aqi.csv, truth.csv and config.toml into `dir`.
CityTruth write_city(const std::filesystem::path& dir, const CityOptions& options = {});

}  // namespace vulnatlas::synth
