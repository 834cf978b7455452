#include "vulnatlas/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "vulnatlas/csv.hpp"
#include "vulnatlas/geomesh.hpp"
#include "vulnatlas/ingest.hpp"
#include "vulnatlas/random.hpp"
#include "vulnatlas/report.hpp"

namespace vulnatlas::synth {

namespace {

using nlohmann::json;

constexpr int kGrid = 10;
constexpr double kOriginLon = -79.88;
constexpr double kOriginLat = 36.02;

enum Var {
  kAsthma, kCopd, kChd, kPoorHealth, kDisability, kFlood, kRenter, kPre1980,
  kPoverty, kNoDiploma, kAge65, kLimitedEnglish, kNoVehicle, kMedianRent, kVarCount
};

int typology_of(int row, int col) {
  const bool top = row < kGrid / 2;
  const bool left = col < kGrid / 2;
  if (top && left) return 0;
  if (!top && !left) return 1;
  if (!top && left) return 2;
  return 3;
}

bool outside_city(int row, int col) {
  return (row == 0 && (col == 0 || col == 8 || col == 9)) || (row == kGrid - 1 && (col == 0 || col == 1 || col == 9));
}

json ring_json(const std::vector<geo::Point>& pts) {
  json ring = json::array();
  for (const auto& p : pts) {
    const auto g = geo::unproject_point(p);
    ring.push_back({g.x, g.y});
  }
  ring.push_back(ring.front());
  return ring;
}

std::vector<geo::Point> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

json feature(json props, json rings) {
  return {{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}}};
}

std::string num(double v) { return csv::format_number(v); }

}  // namespace

const std::vector<std::string>& variables() {
  static const std::vector<std::string> v{"asthma",     "copd",        "chd",         "poor_health",     "disability_pct",
                                          "flood_pct",  "renter_pct",  "pre1980_pct", "poverty_pct",     "no_diploma_pct",
                                          "age65_pct",  "limited_english_pct",        "no_vehicle_pct",  "median_rent"};
  return v;
}

const std::vector<Typology>& typologies() {
  static const std::vector<Typology> t{
      {"high flood, high poverty", {12.1, 8.6, 7.6, 26.0, 32.5, 1.02, 72.3, 85.1, 48.2, 14.2, 8.7, 9.8, 28.3, 934}},
      {"stable low risk", {9.4, 4.8, 5.0, 11.5, 13.1, 0.21, 15.4, 31.2, 8.1, 1.5, 25.1, 1.2, 4.5, 1245}},
      {"high health burden", {13.5, 9.8, 8.9, 27.5, 25.4, 0.18, 38.1, 52.7, 22.3, 5.8, 15.3, 2.1, 10.2, 1080}},
      {"high socioeconomic stress", {10.4, 5.8, 6.1, 18.0, 26.8, 0.65, 58.9, 76.4, 35.7, 10.1, 12.4, 6.5, 19.7, 1012}},
  };
  return t;
}

CityTruth generate(const CityOptions& options) {
  Rng rng(options.seed);
  const auto& types = typologies();
  std::vector<double> spread(kVarCount);
  for (int v = 0; v < kVarCount; ++v) {
    double lo = types[0].means[v], hi = lo;
    for (const auto& t : types) {
      lo = std::min(lo, t.means[v]);
      hi = std::max(hi, t.means[v]);
    }
    spread[v] = hi - lo;
  }
  CityTruth truth;
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      const int t = typology_of(r, c);
      truth.geoids.push_back(ingest::make_geoid(options.state, options.county,
                                                std::to_string(10000 + (r + 1) * 100 + (c + 1)).insert(0, "0")));
      truth.typology.push_back(t);
      truth.in_city.push_back(!outside_city(r, c));
      std::vector<double> vals(kVarCount);
      for (int v = 0; v < kVarCount; ++v) {
        double x = types[t].means[v] + options.noise * spread[v] * rng.normal();
        if (v == kFlood) {
          x = std::max(types[t].means[v] * 0.1, x);
        } else if (v == kMedianRent) {
          x = std::round(x);
        } else {
          x = std::clamp(x, 0.5, 99.0);
        }
        vals[v] = x;
      }
      truth.planted.push_back(std::move(vals));
    }
  }
  return truth;
}

CityTruth write_city(const std::filesystem::path& dir, const CityOptions& options) {
  std::filesystem::create_directories(dir);
  CityTruth truth = generate(options);
  Rng rng(derive_seed(options.seed, 99));
  const auto origin = geo::project_point(kOriginLon, kOriginLat);
  const double s = options.cell_m;
  auto cell_x = [&](int c) { return origin.x + s * c; };
  auto cell_y = [&](int r) { return origin.y + s * (kGrid - r); };

  json tracts = json::array();
  json flood = json::array();
  json city = json::array();
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      const std::size_t i = static_cast<std::size_t>(r * kGrid + c);
      const double x0 = cell_x(c), x1 = cell_x(c + 1), y0 = cell_y(r + 1), y1 = cell_y(r);
      tracts.push_back(feature({{"GEOID", truth.geoids[i]}, {"NAMELSAD", "Census Tract " + truth.geoids[i].substr(5)}},
                               json::array({ring_json(rect(x0, y0, x1, y1))})));
      const double side = s * std::sqrt(truth.planted[i][kFlood] / 100.0);
      const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
      flood.push_back(feature({{"zone", truth.typology[i] == 0 ? "AE" : "A"}},
                              json::array({ring_json(rect(cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2))})));
    }
    int first = 0, last = kGrid - 1;
    while (outside_city(r, first)) ++first;
    while (outside_city(r, last)) --last;
    // Strips are inset by a metre so excluded cells only touch, never overlap.
    const double inset = 1.0;
    city.push_back(json::array({ring_json(rect(cell_x(first) + inset, cell_y(r + 1) + (r == kGrid - 1 ? inset : 0.0),
                                               cell_x(last + 1) - inset, cell_y(r) - (r == 0 ? inset : 0.0)))}));
  }
  const json boundaries{{"type", "FeatureCollection"}, {"features", tracts}};
  report::write_text(dir / "boundaries.geojson", boundaries.dump(1) + "\n");
  report::write_text(dir / "flood.geojson", json{{"type", "FeatureCollection"}, {"features", flood}}.dump(1) + "\n");
  const json city_fc{{"type", "FeatureCollection"},
                     {"features", json::array({{{"type", "Feature"},
                                                {"properties", {{"NAME", "Synthetic City"}}},
                                                {"geometry", {{"type", "MultiPolygon"}, {"coordinates", city}}}}})}};
  report::write_text(dir / "city.geojson", city_fc.dump(1) + "\n");

  std::string acs = csv::format_row({"GEOID", "NAME", "B01003_001E", "B17001_001E", "B17001_002E", "B25003_001E",
                                     "B25003_003E", "B25034_001E", "B25034_PRE1980", "B15003_001E",
                                     "B15003_NODIPLOMA", "B01001_65PLUS", "C16002_001E", "C16002_LIMITED",
                                     "B25044_001E", "B25044_NOVEH", "B25064_001E", "MAJORITY_MINORITY"});
  std::string places = csv::format_row({"TractFIPS", "CASTHMA_CrudePrev", "COPD_CrudePrev", "CHD_CrudePrev",
                                        "GHLTH_CrudePrev", "DISABILITY_CrudePrev"});
  std::string truth_csv = csv::format_row({"GEOID", "typology", "in_city", "planted_flood_pct"});
  for (std::size_t i = 0; i < truth.geoids.size(); ++i) {
    const auto& p = truth.planted[i];
    const double pop = std::round(3000.0 + 2000.0 * rng.uniform());
    const double pov_universe = pop - std::round(40.0 * rng.uniform());
    const double households = std::round(pop / (2.2 + 0.4 * rng.uniform()));
    const double units = households + std::round(households * 0.08 * rng.uniform());
    const double adults25 = std::round(pop * (0.6 + 0.1 * rng.uniform()));
    auto count = [](double rate, double base) { return std::round(rate / 100.0 * base); };
    const bool majority_minority = truth.typology[i] == 0 || truth.typology[i] == 3 ? rng.uniform() < 0.85
                                                                                     : rng.uniform() < 0.2;
    acs += csv::format_row({truth.geoids[i], "Census Tract " + truth.geoids[i].substr(5) + ", Synthetic County",
                            num(pop), num(pov_universe), num(count(p[kPoverty], pov_universe)), num(households),
                            num(count(p[kRenter], households)), num(units), num(count(p[kPre1980], units)),
                            num(adults25), num(count(p[kNoDiploma], adults25)), num(count(p[kAge65], pop)),
                            num(households), num(count(p[kLimitedEnglish], households)), num(households),
                            num(count(p[kNoVehicle], households)), num(p[kMedianRent]),
                            majority_minority ? "yes" : "no"});
    auto one = [](double v) { return csv::format_fixed(v, 1); };
    places += csv::format_row({truth.geoids[i], one(p[kAsthma]), one(p[kCopd]), one(p[kChd]), one(p[kPoorHealth]),
                               one(p[kDisability])});
    truth_csv += csv::format_row({truth.geoids[i], std::to_string(truth.typology[i] + 1), truth.in_city[i] ? "1" : "0",
                                  num(p[kFlood])});
  }
  report::write_text(dir / "acs.csv", acs);
  report::write_text(dir / "places.csv", places);
  report::write_text(dir / "truth.csv", truth_csv);
  report::write_text(dir / "aqi.csv", csv::format_row({"county_fips", "year", "aqi"}) +
                                          csv::format_row({options.state + options.county, "2023", "41"}));

  report::write_text(dir / "config.toml", R"(# Synthetic 94-tract city with four planted typologies.
seed = 20240917
output_dir = "out"

[inputs]
boundaries = "boundaries.geojson"
city = "city.geojson"
flood = "flood.geojson"
aqi = "aqi.csv"

[[inputs.tables]]
source = "acs"
path = "acs.csv"

[[inputs.tables]]
source = "places"
path = "places.csv"
geoid_column = "TractFIPS"

[[indicators]]
name = "asthma"
table = "places"
column = "CASTHMA_CrudePrev"

[[indicators]]
name = "copd"
table = "places"
column = "COPD_CrudePrev"

[[indicators]]
name = "chd"
table = "places"
column = "CHD_CrudePrev"

[[indicators]]
name = "poor_health"
table = "places"
column = "GHLTH_CrudePrev"

[[indicators]]
name = "disability_pct"
table = "places"
column = "DISABILITY_CrudePrev"

[[indicators]]
name = "poverty_pct"
table = "acs"
column = "B17001_002E"
denominator = "B17001_001E"
winsorize = true

[[indicators]]
name = "renter_pct"
table = "acs"
column = "B25003_003E"
denominator = "B25003_001E"

[[indicators]]
name = "pre1980_pct"
table = "acs"
column = "B25034_PRE1980"
denominator = "B25034_001E"

[[indicators]]
name = "no_diploma_pct"
table = "acs"
column = "B15003_NODIPLOMA"
denominator = "B15003_001E"
winsorize = true
log_if_skewed = true

[[indicators]]
name = "age65_pct"
table = "acs"
column = "B01001_65PLUS"
denominator = "B01003_001E"

[[indicators]]
name = "limited_english_pct"
table = "acs"
column = "C16002_LIMITED"
denominator = "C16002_001E"
winsorize = true

[[indicators]]
name = "no_vehicle_pct"
table = "acs"
column = "B25044_NOVEH"
denominator = "B25044_001E"

[[indicators]]
name = "median_rent"
table = "acs"
column = "B25064_001E"
kind = "currency_usd"
direction = "risk_decreases"

[[indicators]]
name = "majority_minority"
table = "acs"
column = "MAJORITY_MINORITY"
kind = "categorical"

[index]
health = ["asthma", "copd", "chd", "poor_health", "disability_pct"]
socio = ["poverty_pct", "renter_pct", "no_diploma_pct", "no_vehicle_pct"]
w_health = 0.6
w_socio = 0.4
flood_buffer_m = 1.0

[cluster]
k_min = 2
k_max = 10
n_init = 10
profile_key = "poverty_pct"

[spatial]
contiguity = "queen"
weights = "row_standardized"
moran_permutations = 999
lisa_permutations = 999
alpha = 0.05
jenks_classes = 5
)");
  return truth;
}

}  // namespace vulnatlas::synth
