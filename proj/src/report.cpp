#include "vulnatlas/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "vulnatlas/csv.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/ingest.hpp"
#include "vulnatlas/svg.hpp"

namespace vulnatlas::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cell(const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); }

std::optional<double> parse_double(std::string_view s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::NonNumericCell, where + ": '" + std::string(s) + "'");
  }
  return v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const std::vector<std::string>& qualitative() {
  static const std::vector<std::string> colors{"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
                                               "#a65628", "#f781bf", "#999999", "#66c2a5", "#ffd92f"};
  return colors;
}

std::vector<double> column_values(const TractFrame& f, std::string_view name) { return f.complete_values(name); }

}  // namespace

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void save_frame(const fs::path& dir, const std::string& stem, const TractFrame& frame) {
  std::vector<std::string> header{"GEOID"};
  json schema = json::array();
  for (const auto& c : frame.columns()) {
    header.push_back(c.name);
    schema.push_back({{"name", c.name}, {"kind", to_string(c.kind)}, {"source", c.source}});
  }
  std::string text = csv::format_row(header);
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    std::vector<std::string> row{frame.geoids()[r]};
    for (const auto& c : frame.columns()) {
      row.push_back(c.is_categorical() ? c.labels[r].value_or("") : cell(c.numbers[r]));
    }
    text += csv::format_row(row);
  }
  write_text(dir / (stem + ".csv"), text);
  write_json(dir / (stem + ".schema.json"), schema);
}

TractFrame load_frame(const fs::path& dir, const std::string& stem) {
  const json schema = read_json(dir / (stem + ".schema.json"));
  const csv::Table table = csv::read_file(dir / (stem + ".csv"));
  const auto g = table.column_index("GEOID");
  if (!g) throw Error(ErrorCode::MissingColumn, "GEOID");
  std::vector<std::string> geoids;
  for (const auto& row : table.rows) geoids.push_back(row[*g]);
  TractFrame frame(std::move(geoids));
  for (const auto& s : schema) {
    Column c{s.at("name").get<std::string>(), parse_column_kind(s.at("kind").get<std::string>()),
             s.at("source").get<std::string>(), {}, {}};
    const auto idx = table.column_index(c.name);
    if (!idx) throw Error(ErrorCode::MissingColumn, c.name);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string& v = table.rows[r][*idx];
      if (c.is_categorical()) {
        c.labels.push_back(v.empty() ? std::nullopt : std::optional<std::string>(v));
      } else {
        c.numbers.push_back(parse_double(v, stem + " row " + std::to_string(r + 2) + " column " + c.name));
      }
    }
    frame.add_column(std::move(c));
  }
  return frame;
}

void save_geometry(const fs::path& path, const TractFrame& frame) {
  json features = json::array();
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"GEOID", frame.geoids()[r]}}},
                        {"geometry", ingest::geometry_to_json(frame.geometry()[r])}});
  }
  write_text(path, json{{"type", "FeatureCollection"}, {"features", features}}.dump() + "\n");
}

std::map<std::string, geo::MultiPolygon> load_geometry(const fs::path& path) {
  std::map<std::string, geo::MultiPolygon> out;
  for (auto& f : ingest::parse_feature_collection(read_text(path), false)) {
    out.emplace(f.properties.at("GEOID").get<std::string>(), std::move(f.geometry));
  }
  return out;
}

json scored_feature_collection(const ScoredInputs& in) {
  const TractFrame& f = *in.frame;
  if (!f.has_geometry()) throw Error(ErrorCode::KeyMismatch, "frame has no geometry");
  const auto& composite = f.column("composite");
  json features = json::array();
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const std::string& g = f.geoids()[r];
    auto need = [&](const auto& map, const char* what) -> const auto& {
      auto it = map.find(g);
      if (it == map.end()) throw Error(ErrorCode::KeyMismatch, std::string(what) + " has no entry for " + g);
      return it->second;
    };
    json p = json::object();
    p["GEOID"] = g;
    for (const auto& name : in.raw_columns) {
      const Column& c = f.column(name);
      if (c.is_categorical()) {
        p[name] = c.labels[r] ? json(*c.labels[r]) : json(nullptr);
      } else {
        p[name] = c.numbers[r] ? number_or_null(*c.numbers[r]) : json(nullptr);
      }
    }
    for (const char* name : {"flood_pct", "health_score", "socio_score"}) {
      p[name] = number_or_null(*f.column(name).numbers[r]);
    }
    p["composite"] = number_or_null(*composite.numbers[r]);
    p["v_decile"] = in.decile.at(r);
    p["v_top_decile"] = static_cast<bool>(in.top_decile.at(r));
    p["kmeans_cluster"] = need(in.kmeans, "k-means");
    p["ward_cluster"] = need(in.ward, "ward");
    const LisaRow& l = need(in.lisa, "LISA");
    p["island"] = l.island;
    p["lisa_quadrant"] = l.quadrant.empty() ? json(nullptr) : json(l.quadrant);
    p["lisa_i"] = l.local_i ? json(*l.local_i) : json(nullptr);
    p["lisa_p"] = l.pseudo_p ? json(*l.pseudo_p) : json(nullptr);
    p["lisa_significant"] = l.island ? json(nullptr) : json(l.significant);
    p["v_jenks_class"] = need(in.jenks, "jenks");
    features.push_back({{"type", "Feature"}, {"properties", p}, {"geometry", ingest::geometry_to_json(f.geometry()[r])}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

void write_scored_geojson(const fs::path& path, const ScoredInputs& in) {
  write_text(path, scored_feature_collection(in).dump() + "\n");
}

std::string profile_csv(const cluster::ClusterProfile& profile) {
  std::vector<std::string> header{"variable"};
  for (std::size_t c = 0; c < profile.sizes.size(); ++c) header.push_back("cluster_" + std::to_string(c + 1));
  std::string text = csv::format_row(header);
  for (std::size_t v = 0; v < profile.variables.size(); ++v) {
    std::vector<std::string> row{profile.variables[v]};
    for (const auto& m : profile.means) row.push_back(std::isfinite(m[v]) ? csv::format_number(m[v]) : "");
    text += csv::format_row(row);
  }
  std::vector<std::string> sizes{"size"};
  for (auto s : profile.sizes) sizes.push_back(std::to_string(s));
  return text + csv::format_row(sizes);
}

std::string correlation_csv(const stats::CorrelationMatrix& m) {
  std::vector<std::string> header{"variable"};
  header.insert(header.end(), m.labels.begin(), m.labels.end());
  std::string text = csv::format_row(header);
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    std::vector<std::string> row{m.labels[i]};
    for (std::size_t j = 0; j < m.labels.size(); ++j) row.push_back(cell(m.values[i][j]));
    text += csv::format_row(row);
  }
  return text;
}

std::string ej_csv(const std::vector<stats::EjOutcome>& outcomes) {
  std::string text = csv::format_row(
      {"variable", "test", "mean_high", "mean_rest", "n_high", "n_rest", "statistic", "df", "p_value", "note"});
  for (const auto& o : outcomes) {
    if (!o.comparison) {
      text += csv::format_row({o.variable, "", "", "", "", "", "", "", "", "skipped: " + o.skipped_reason});
      continue;
    }
    const auto& c = *o.comparison;
    text += csv::format_row({o.variable, c.kind == stats::TestKind::WelchT ? "welch_t" : "chi_square",
                             cell(c.mean_high), cell(c.mean_rest), std::to_string(c.n_high),
                             std::to_string(c.n_rest), csv::format_number(c.statistic), csv::format_number(c.df),
                             csv::format_number(c.p_value), ""});
  }
  return text;
}

std::string k_selection_csv(const cluster::KSelection& selection) {
  std::string text = csv::format_row({"k", "wcss", "silhouette", "selected"});
  for (const auto& r : selection.table) {
    text += csv::format_row({std::to_string(r.k), csv::format_number(r.wcss), csv::format_number(r.silhouette),
                             r.k == selection.k_best ? "1" : "0"});
  }
  return text;
}

std::string vif_csv(const std::vector<stats::VifResult>& rows) {
  std::string text = csv::format_row({"predictor", "vif"});
  for (const auto& r : rows) text += csv::format_row({r.predictor, r.infinite ? "inf" : csv::format_number(r.value)});
  return text;
}

json to_json(const std::vector<stats::VifResult>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"predictor", r.predictor}, {"vif", r.infinite ? json(nullptr) : json(r.value)}});
  return out;
}

std::vector<stats::VifResult> vif_from_json(const json& j) {
  std::vector<stats::VifResult> out;
  for (const auto& r : j) {
    stats::VifResult v;
    v.predictor = r.at("predictor").get<std::string>();
    if (r.at("vif").is_null()) {
      v.infinite = true;
      v.value = std::numeric_limits<double>::infinity();
    } else {
      v.value = r.at("vif").get<double>();
    }
    out.push_back(v);
  }
  return out;
}

EmitSummary emit_from_run_dir(const fs::path& run_dir) {
  const fs::path st = run_dir / "stages";
  const json ctx = read_json(st / "context.json");
  TractFrame frame = load_frame(st / "preprocess", "frame");
  const TractFrame scores = load_frame(st / "indices", "scores");
  if (scores.geoids() != frame.geoids()) throw Error(ErrorCode::KeyMismatch, "scores and preprocessed rows differ");
  for (const auto& c : scores.columns()) {
    if (!frame.has_column(c.name)) frame.add_column(c);
  }
  const auto shapes = load_geometry(st / "ingest" / "tracts.geojson");
  std::vector<geo::MultiPolygon> geometry;
  for (const auto& g : frame.geoids()) {
    auto it = shapes.find(g);
    if (it == shapes.end()) throw Error(ErrorCode::KeyMismatch, "no geometry for " + g);
    geometry.push_back(it->second);
  }
  frame.set_geometry(geometry);

  const auto kmeans = cluster::model_from_json(read_json(st / "cluster" / "kmeans.json"));
  const auto ward = cluster::model_from_json(read_json(st / "cluster" / "ward.json"));
  const json kmeans_j = read_json(st / "cluster" / "kmeans.json");
  const json ward_j = read_json(st / "cluster" / "ward.json");
  const auto selection = cluster::selection_from_json(read_json(st / "cluster" / "selection.json"));
  const auto profile = cluster::profile_from_json(read_json(st / "cluster" / "profile.json"));
  const json lisa_j = read_json(st / "spatial" / "lisa.json");
  const json jenks_j = read_json(st / "spatial" / "jenks.json");

  ScoredInputs in;
  in.frame = &frame;
  in.raw_columns = ctx.at("raw_columns").get<std::vector<std::string>>();
  for (const auto& v : frame.column("v_decile").numbers) in.decile.push_back(static_cast<int>(v.value_or(0)));
  for (const auto& v : frame.column("top_decile").numbers) in.top_decile.push_back(v.value_or(0) > 0.5);
  for (const auto& [g, a] : kmeans_j.at("assignments").items()) in.kmeans[g] = a.get<int>() + 1;
  for (const auto& [g, a] : ward_j.at("assignments").items()) in.ward[g] = a.get<int>() + 1;
  for (const auto& [g, row] : lisa_j.items()) {
    LisaRow l;
    l.island = row.at("island").get<bool>();
    if (!l.island) {
      l.local_i = row.at("local_i").get<double>();
      if (!row.at("pseudo_p").is_null()) l.pseudo_p = row.at("pseudo_p").get<double>();
      l.quadrant = row.at("quadrant").get<std::string>();
      l.significant = row.at("significant").get<bool>();
    }
    in.lisa[g] = l;
  }
  for (const auto& [g, c] : jenks_j.at("classes").items()) in.jenks[g] = c.get<int>();

  EmitSummary out;
  out.scored_geojson = "scored.geojson";
  write_scored_geojson(run_dir / out.scored_geojson, in);

  auto table = [&](const std::string& name, const std::string& text) {
    write_text(run_dir / "tables" / name, text);
    out.tables.push_back("tables/" + name);
  };
  table("cluster_profile.csv", profile_csv(profile));
  table("correlation.csv", correlation_csv(stats::correlation_from_json(read_json(st / "stats" / "correlation.json"))));
  table("ej_comparison.csv", ej_csv(stats::ej_from_json(read_json(st / "stats" / "ej.json"))));
  table("k_selection.csv", k_selection_csv(selection));
  table("vif.csv", vif_csv(vif_from_json(read_json(st / "stats" / "vif.json"))));
  {
    const json q = read_json(st / "stats" / "quartiles.json");
    std::string text = csv::format_row({"quartile", "n", "mean_composite", "mean_health", "mean_socio", "mean_flood"});
    for (const auto& r : q.at("rows")) {
      text += csv::format_row({"Q" + std::to_string(r.at("quartile").get<int>()), std::to_string(r.at("n").get<std::size_t>()),
                               csv::format_number(r.at("composite").get<double>()),
                               csv::format_number(r.at("health").get<double>()),
                               csv::format_number(r.at("socio").get<double>()),
                               csv::format_number(r.at("flood").get<double>())});
    }
    table("poverty_quartiles.csv", text);
  }

  auto plot = [&](const std::string& name, const std::string& svg) {
    write_text(run_dir / "plots" / name, svg);
    out.plots.push_back("plots/" + name);
  };
  const std::size_t classes = ctx.at("config").at("spatial").at("jenks_classes").get<std::size_t>();
  svg::ChoroplethOptions co;
  co.k_classes = classes;
  co.title = "Composite vulnerability index (natural breaks)";
  plot("choropleth_composite.svg", svg::render_choropleth(frame, "composite", co));
  co.title = "Flood hazard exposure, % of tract area";
  plot("choropleth_flood.svg", svg::render_choropleth(frame, "flood_pct", co));

  std::vector<svg::Category> cats;
  for (std::size_t c = 0; c < kmeans.k; ++c) {
    cats.push_back({"Cluster " + std::to_string(c + 1) + " (n=" + std::to_string(profile.sizes.at(c)) + ")",
                    qualitative()[c % qualitative().size()]});
  }
  plot("clusters_kmeans.svg", svg::render_categorical(frame.geometry(), frame.geoids(), kmeans.assignments, cats,
                                                      "K-means typologies"));
  std::vector<svg::Category> wcats;
  for (std::size_t c = 0; c < ward.k; ++c) {
    wcats.push_back({"Cluster " + std::to_string(c + 1), qualitative()[c % qualitative().size()]});
  }
  plot("clusters_ward.svg", svg::render_categorical(frame.geometry(), frame.geoids(), ward.assignments, wcats,
                                                    "Ward hierarchical clusters"));

  const std::vector<svg::Category> lisa_cats{{"High-High", "#d7191c"},
                                             {"Low-Low", "#2c7bb6"},
                                             {"High-Low", "#fdae61"},
                                             {"Low-High", "#abd9e9"},
                                             {"Not significant", "#f0f0f0"}};
  std::vector<int> lisa_codes;
  for (const auto& g : frame.geoids()) {
    const LisaRow& l = in.lisa.at(g);
    int code = -1;
    if (!l.island) {
      code = 4;
      if (l.significant) {
        if (l.quadrant == "HH") code = 0;
        if (l.quadrant == "LL") code = 1;
        if (l.quadrant == "HL") code = 2;
        if (l.quadrant == "LH") code = 3;
      }
    }
    lisa_codes.push_back(code);
  }
  plot("lisa_clusters.svg", svg::render_categorical(frame.geometry(), frame.geoids(), lisa_codes, lisa_cats,
                                                    "Local Moran clusters of the composite index"));

  svg::ScatterOptions so;
  so.title = "Health burden against socioeconomic stress";
  so.x_label = "Socioeconomic score S";
  so.y_label = "Health score H";
  plot("scatter_health_socio.svg",
       svg::render_scatter(column_values(frame, "socio_score"), column_values(frame, "health_score"), so));
  const auto flood = column_values(frame, "flood_pct");
  if (std::set<double>(flood.begin(), flood.end()).size() < 2) return out;
  so.title = "Composite index against flood exposure";
  so.x_label = "Flood exposure, %";
  so.y_label = "Composite index V";
  plot("scatter_flood_composite.svg",
       svg::render_scatter(flood, column_values(frame, "composite"), so));
  return out;
}

}  // namespace vulnatlas::report
