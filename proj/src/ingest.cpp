#include "vulnatlas/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "vulnatlas/csv.hpp"
#include "vulnatlas/error.hpp"

namespace vulnatlas::ingest {

using nlohmann::json;

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string pad_component(std::string_view value, std::size_t width, std::string_view what) {
  if (!all_digits(value)) {
    throw Error(ErrorCode::MalformedComponent,
                std::string(what) + " '" + std::string(value) + "' is not digit-only");
  }
  if (value.size() > width) {
    throw Error(ErrorCode::MalformedComponent, std::string(what) + " '" + std::string(value) +
                                                   "' exceeds " + std::to_string(width) + " digits");
  }
  return std::string(width - value.size(), '0') + std::string(value);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

geo::Ring parse_ring(const json& coords, std::size_t feature) {
  if (!coords.is_array()) {
    throw Error(ErrorCode::ParseError, "feature " + std::to_string(feature) + ": ring is not an array");
  }
  geo::Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw Error(ErrorCode::ParseError,
                  "feature " + std::to_string(feature) + ": malformed coordinate position");
    }
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

geo::GeoPolygon parse_polygon(const json& rings, std::size_t feature) {
  if (!rings.is_array() || rings.empty()) {
    throw Error(ErrorCode::ParseError, "feature " + std::to_string(feature) + ": polygon has no rings");
  }
  std::vector<geo::Ring> holes;
  for (std::size_t r = 1; r < rings.size(); ++r) holes.push_back(parse_ring(rings[r], feature));
  try {
    return geo::GeoPolygon(parse_ring(rings[0], feature), std::move(holes),
                           geo::Crs::Geographic_WGS84);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, "feature " + std::to_string(feature) + ": " + e.detail());
  }
}

geo::MultiPolygon parse_geometry(const json& geometry, std::size_t feature) {
  if (!geometry.is_object() || !geometry.contains("type") || !geometry.contains("coordinates")) {
    throw Error(ErrorCode::ParseError, "feature " + std::to_string(feature) + ": missing geometry");
  }
  const std::string type = geometry["type"].get<std::string>();
  const json& coords = geometry["coordinates"];
  if (type == "Polygon") return geo::MultiPolygon(parse_polygon(coords, feature));
  if (type == "MultiPolygon") {
    std::vector<geo::GeoPolygon> parts;
    for (const auto& poly : coords) parts.push_back(parse_polygon(poly, feature));
    if (parts.empty()) {
      throw Error(ErrorCode::ParseError, "feature " + std::to_string(feature) + ": empty MultiPolygon");
    }
    return geo::MultiPolygon(std::move(parts));
  }
  throw Error(ErrorCode::ParseError,
              "feature " + std::to_string(feature) + ": unsupported geometry type " + type);
}

// ACS annotation values that stand for "estimate unavailable".
bool is_acs_sentinel(double v) {
  constexpr std::array<double, 6> kSentinels{-666666666.0, -999999999.0, -888888888.0,
                                             -222222222.0, -333333333.0, -555555555.0};
  return std::find(kSentinels.begin(), kSentinels.end(), v) != kSentinels.end();
}

std::optional<double> parse_cell(std::string_view raw, std::size_t row, std::string_view column) {
  const std::string_view s = trim(raw);
  if (s.empty() || s == "NA" || s == "null" || s == "NaN" || s == "nan") return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column '" +
                                               std::string(column) + "': '" + std::string(s) + "'");
  }
  if (is_acs_sentinel(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string make_geoid(std::string_view state, std::string_view county, std::string_view tract) {
  return pad_component(trim(state), 2, "state") + pad_component(trim(county), 3, "county") +
         pad_component(trim(tract), 6, "tract");
}

std::string make_geoid(long state, long county, long tract) {
  if (state < 0 || county < 0 || tract < 0) {
    throw Error(ErrorCode::MalformedComponent, "negative GEOID component");
  }
  return make_geoid(std::to_string(state), std::to_string(county), std::to_string(tract));
}

bool is_valid_geoid(std::string_view geoid) { return geoid.size() == 11 && all_digits(geoid); }

GeoidParts split_geoid(std::string_view geoid) {
  if (!is_valid_geoid(geoid)) {
    throw Error(ErrorCode::MalformedComponent, "'" + std::string(geoid) + "' is not an 11-digit GEOID");
  }
  return {std::string(geoid.substr(0, 2)), std::string(geoid.substr(2, 3)),
          std::string(geoid.substr(5, 6))};
}

std::string normalize_geoid(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.starts_with("1400000US")) s.remove_prefix(9);  // ACS "GEO_ID" form
  if (!all_digits(s) || s.size() > 11) {
    throw Error(ErrorCode::MalformedComponent, "'" + std::string(raw) + "' is not a GEOID");
  }
  return std::string(11 - s.size(), '0') + std::string(s);
}

std::vector<Feature> parse_feature_collection(std::string_view text, bool project) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(ErrorCode::ParseError, "not a GeoJSON FeatureCollection");
  }
  std::vector<Feature> out;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const json& f = features[i];
    if (!f.is_object() || !f.contains("geometry") || f["geometry"].is_null()) {
      throw Error(ErrorCode::ParseError, "feature " + std::to_string(i) + ": missing geometry");
    }
    geo::MultiPolygon g = parse_geometry(f["geometry"], i);
    if (project) {
      try {
        g = geo::project_to_mercator(g);
      } catch (const Error& e) {
        throw Error(e.code(), "feature " + std::to_string(i) + ": " + e.detail());
      }
    }
    json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
    out.push_back({std::move(g), std::move(props)});
  }
  return out;
}

std::vector<Feature> read_feature_collection(const std::filesystem::path& path, bool project) {
  return parse_feature_collection(read_text(path), project);
}

json geometry_to_json(const geo::MultiPolygon& polygon) {
  const geo::MultiPolygon geographic = polygon.crs() == geo::Crs::Projected_WebMercator
                                           ? geo::unproject_from_mercator(polygon)
                                           : polygon;
  auto ring_json = [](const geo::Ring& ring) {
    json arr = json::array();
    for (const auto& p : ring) arr.push_back(json::array({p.x, p.y}));
    return arr;
  };
  auto poly_json = [&](const geo::GeoPolygon& p) {
    json rings = json::array();
    rings.push_back(ring_json(p.exterior()));
    for (const auto& h : p.holes()) rings.push_back(ring_json(h));
    return rings;
  };
  if (geographic.size() == 1) {
    return json{{"type", "Polygon"}, {"coordinates", poly_json(geographic.parts().front())}};
  }
  json polys = json::array();
  for (const auto& p : geographic.parts()) polys.push_back(poly_json(p));
  return json{{"type", "MultiPolygon"}, {"coordinates", polys}};
}

BoundarySet parse_tract_boundaries(std::string_view text, std::string_view geoid_property) {
  BoundarySet out;
  auto features = parse_feature_collection(text, true);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const json& props = features[i].properties;
    auto it = props.find(std::string(geoid_property));
    if (it == props.end() || it->is_null()) {
      throw Error(ErrorCode::MissingGeoidProperty,
                  "feature " + std::to_string(i) + " lacks property '" + std::string(geoid_property) + "'");
    }
    const std::string raw = it->is_string() ? it->get<std::string>() : it->dump();
    std::string geoid = normalize_geoid(raw);
    if (out.contains(geoid)) throw Error(ErrorCode::DuplicateGeoid, geoid);
    out.emplace(std::move(geoid), std::move(features[i].geometry));
  }
  return out;
}

BoundarySet read_tract_boundaries(const std::filesystem::path& path, std::string_view geoid_property) {
  return parse_tract_boundaries(read_text(path), geoid_property);
}

geo::MultiPolygon read_polygon_union(const std::filesystem::path& path) {
  auto features = read_feature_collection(path, true);
  std::vector<geo::GeoPolygon> parts;
  for (auto& f : features) {
    for (const auto& p : f.geometry.parts()) parts.push_back(p);
  }
  if (parts.empty()) throw Error(ErrorCode::ParseError, path.string() + " contains no polygons");
  return geo::MultiPolygon(std::move(parts));
}

AttributeTable parse_attribute_table(std::string_view text, std::span<const IndicatorSpec> specs,
                                     std::string source, std::string_view geoid_column) {
  const csv::Table table = csv::parse(text);
  const auto geoid_idx = table.column_index(geoid_column);
  if (!geoid_idx) throw Error(ErrorCode::MissingColumn, std::string(geoid_column));

  struct Resolved {
    const IndicatorSpec* spec;
    std::size_t value_idx;
    std::optional<std::size_t> denom_idx;
  };
  std::vector<Resolved> resolved;
  for (const auto& spec : specs) {
    auto v = table.column_index(spec.source_column);
    if (!v) throw Error(ErrorCode::MissingColumn, spec.source_column);
    std::optional<std::size_t> d;
    if (spec.denominator_column) {
      d = table.column_index(*spec.denominator_column);
      if (!d) throw Error(ErrorCode::MissingColumn, *spec.denominator_column);
    }
    resolved.push_back({&spec, *v, d});
  }

  std::vector<std::string> geoids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    geoids.push_back(normalize_geoid(table.rows[r][*geoid_idx]));
  }
  AttributeTable out{TractFrame(std::move(geoids)), std::move(source), 0, 0, {}};

  for (const auto& res : resolved) {
    Column col{res.spec->name, res.spec->kind, out.source, {}, {}};
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::size_t line = r + 2;  // 1-based, header is line 1
      if (res.spec->kind == ColumnKind::Categorical) {
        std::string_view cell = trim(table.rows[r][res.value_idx]);
        col.labels.push_back(cell.empty() ? std::nullopt : std::optional<std::string>(cell));
        continue;
      }
      std::optional<double> value = parse_cell(table.rows[r][res.value_idx], line, res.spec->source_column);
      if (res.denom_idx) {
        const std::optional<double> denom =
            parse_cell(table.rows[r][*res.denom_idx], line, *res.spec->denominator_column);
        if (!denom || *denom == 0.0) {
          if (denom) ++out.zero_denominator_cells;
          value.reset();
        } else if (value) {
          value = *value / *denom * 100.0;
        }
      }
      if (value && res.spec->kind == ColumnKind::RatePercent && (*value < 0.0 || *value > 100.0)) {
        ++out.clamped_rate_cells;
        value = std::clamp(*value, 0.0, 100.0);
      }
      col.numbers.push_back(value);
    }
    out.frame.add_column(std::move(col));
  }
  if (out.zero_denominator_cells > 0) {
    out.warnings.push_back(std::to_string(out.zero_denominator_cells) +
                           " cells had a zero denominator and were set missing");
  }
  if (out.clamped_rate_cells > 0) {
    out.warnings.push_back(std::to_string(out.clamped_rate_cells) +
                           " rate cells fell outside [0, 100] and were clamped");
  }
  return out;
}

AttributeTable read_attribute_table(const std::filesystem::path& path,
                                    std::span<const IndicatorSpec> specs, std::string source,
                                    std::string_view geoid_column) {
  return parse_attribute_table(read_text(path), specs, std::move(source), geoid_column);
}

JoinResult join_sources(const BoundarySet& boundaries, std::vector<AttributeTable> tables) {
  std::set<std::string> keys;
  for (const auto& [k, _] : boundaries) keys.insert(k);
  for (const auto& t : tables) {
    std::set<std::string> next;
    for (const auto& g : t.frame.geoids()) {
      if (keys.contains(g)) next.insert(g);
    }
    keys = std::move(next);
  }
  if (keys.empty()) throw Error(ErrorCode::EmptyJoin, "no GEOID is present in every source");

  JoinResult result;
  auto unmatched_of = [&](const std::string& source, const std::vector<std::string>& ids) {
    std::vector<std::string> missing;
    for (const auto& g : ids) {
      if (!keys.contains(g)) missing.push_back(g);
    }
    std::sort(missing.begin(), missing.end());
    result.report.unmatched.emplace_back(source, std::move(missing));
  };
  {
    std::vector<std::string> ids;
    for (const auto& [k, _] : boundaries) ids.push_back(k);
    unmatched_of(std::string(kBoundarySource), ids);
  }
  for (const auto& t : tables) unmatched_of(t.source, t.frame.geoids());

  std::vector<std::string> ordered(keys.begin(), keys.end());
  TractFrame frame(ordered);
  std::vector<geo::MultiPolygon> geometry;
  for (const auto& k : ordered) geometry.push_back(boundaries.at(k));
  frame.set_geometry(std::move(geometry));

  std::map<std::string, int> name_count;
  for (const auto& t : tables) {
    for (const auto& c : t.frame.columns()) ++name_count[c.name];
  }
  for (const auto& t : tables) {
    for (const auto& c : t.frame.columns()) {
      Column joined{c.name, c.kind, t.source, {}, {}};
      if (name_count[c.name] > 1) {
        joined.name = c.name + "__" + t.source;
        result.report.renamed.emplace_back(c.name, joined.name);
      }
      for (const auto& k : ordered) {
        const std::size_t r = *t.frame.row_of(k);
        if (c.is_categorical()) {
          joined.labels.push_back(c.labels[r]);
        } else {
          joined.numbers.push_back(c.numbers[r]);
        }
      }
      frame.add_column(std::move(joined));
    }
  }
  result.report.rows = frame.rows();
  result.frame = std::move(frame);
  return result;
}

TractFrame subset_to_city(const TractFrame& frame, const geo::MultiPolygon& city_boundary) {
  if (!frame.has_geometry()) throw Error(ErrorCode::InvalidArgument, "frame has no geometry");
  const geo::Region city = geo::Region::dissolve(std::span(&city_boundary, 1));
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (city.intersection_area(frame.geometry()[r]) > 0.0) keep.push_back(r);
  }
  return frame.select_rows(keep);
}

void attach_county_aqi(TractFrame& frame, const std::filesystem::path& aqi_csv) {
  const csv::Table table = csv::read_file(aqi_csv);
  const auto fips = table.column_index("county_fips");
  const auto aqi = table.column_index("aqi");
  if (!fips) throw Error(ErrorCode::MissingColumn, "county_fips");
  if (!aqi) throw Error(ErrorCode::MissingColumn, "aqi");
  std::map<std::string, double> by_county;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string key(trim(table.rows[r][*fips]));
    if (key.size() < 5 && all_digits(key)) key = std::string(5 - key.size(), '0') + key;
    if (auto v = parse_cell(table.rows[r][*aqi], r + 2, "aqi")) by_county[key] = *v;
  }
  Column col{std::string(kAqiColumn), ColumnKind::IndexScore, "aqi", {}, {}};
  for (const auto& g : frame.geoids()) {
    auto it = by_county.find(g.substr(0, 5));
    col.numbers.push_back(it == by_county.end() ? std::nullopt : std::optional<double>(it->second));
  }
  frame.replace_column(std::move(col));
}

}  // namespace vulnatlas::ingest
