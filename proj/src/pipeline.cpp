#include "vulnatlas/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>

#include "vulnatlas/cluster.hpp"
#include "vulnatlas/csv.hpp"
#include "vulnatlas/digest.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/indices.hpp"
#include "vulnatlas/ingest.hpp"
#include "vulnatlas/preprocess.hpp"
#include "vulnatlas/random.hpp"
#include "vulnatlas/report.hpp"
#include "vulnatlas/spatial.hpp"
#include "vulnatlas/stats.hpp"

#ifndef VULNATLAS_VERSION
#define VULNATLAS_VERSION "0.0.0"
#endif

namespace vulnatlas::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Ok: return "ok";
    case StageStatus::Failed: return "failed";
    case StageStatus::Skipped: return "skipped";
  }
  return "skipped";
}

struct State {
  TractFrame frame;
  std::vector<bool> top_decile;
};

std::vector<const IndicatorSpec*> numeric_specs(const PipelineConfig& c) {
  std::vector<const IndicatorSpec*> out;
  for (const auto& s : c.indicators) {
    if (s.kind != ColumnKind::Categorical) out.push_back(&s);
  }
  return out;
}

void add_numeric(TractFrame& f, const std::string& name, ColumnKind kind, const std::string& source,
                 const std::vector<double>& values) {
  Column c{name, kind, source, {}, {}};
  for (double v : values) c.numbers.emplace_back(v);
  if (f.has_column(name)) {
    f.replace_column(std::move(c));
  } else {
    f.add_column(std::move(c));
  }
}

json stage_ingest(const PipelineConfig& c, const fs::path& dir, State& s) {
  const auto boundaries = ingest::read_tract_boundaries(c.resolve(c.boundaries), c.geoid_property);
  std::vector<ingest::AttributeTable> tables;
  json warnings = json::object();
  for (const auto& t : c.tables) {
    std::vector<IndicatorSpec> specs;
    for (const auto& spec : c.indicators) {
      if (spec.table == t.source) specs.push_back(spec);
    }
    tables.push_back(ingest::read_attribute_table(c.resolve(t.path), specs, t.source, t.geoid_column));
    warnings[t.source] = tables.back().warnings;
  }
  auto joined = ingest::join_sources(boundaries, std::move(tables));
  const std::size_t joined_rows = joined.frame.rows();
  s.frame = std::move(joined.frame);
  if (!c.city.empty()) {
    s.frame = ingest::subset_to_city(s.frame, ingest::read_polygon_union(c.resolve(c.city)));
  }
  if (!c.aqi.empty()) ingest::attach_county_aqi(s.frame, c.resolve(c.aqi));

  json unmatched = json::object();
  for (const auto& [src, keys] : joined.report.unmatched) unmatched[src] = keys;
  json renamed = json::array();
  for (const auto& [from, to] : joined.report.renamed) renamed.push_back({from, to});
  const json report{{"joined_rows", joined_rows}, {"city_rows", s.frame.rows()}, {"unmatched", unmatched},
                    {"renamed", renamed}, {"warnings", warnings}};
  report::save_frame(dir, "frame", s.frame);
  report::save_geometry(dir / "tracts.geojson", s.frame);
  report::write_json(dir / "join_report.json", report);
  return report;
}

json stage_preprocess(const PipelineConfig& c, const fs::path& dir, State& s) {
  const auto specs = numeric_specs(c);
  json missing = json::object();
  for (const auto* spec : specs) {
    const Column& col = s.frame.column(spec->name);
    const double frac = col.missing_fraction();
    missing[spec->name] = frac;
    if (frac > c.max_missing_fraction) {
      throw Error(ErrorCode::MissingValues, spec->name + " is " + csv::format_fixed(frac * 100.0, 1) +
                                                "% missing, above the " +
                                                csv::format_fixed(c.max_missing_fraction * 100.0, 1) + "% limit");
    }
  }
  std::vector<std::size_t> keep;
  std::vector<std::string> dropped;
  for (std::size_t r = 0; r < s.frame.rows(); ++r) {
    bool complete = true;
    for (const auto* spec : specs) complete = complete && s.frame.column(spec->name).numbers[r].has_value();
    if (complete) {
      keep.push_back(r);
    } else {
      dropped.push_back(s.frame.geoids()[r]);
    }
  }
  s.frame = s.frame.select_rows(keep);

  json records = json::array();
  std::string desc = csv::format_row({"variable", "n", "mean", "sd", "min", "q1", "q3", "max", "skewness",
                                      "shapiro_w", "shapiro_p", "tukey_flags", "transform"});
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); };
  for (const auto* spec : specs) {
    const Column& col = s.frame.column(spec->name);
    prep::FitOptions o;
    o.winsorize_outliers = spec->winsorize;
    o.log_if_skewed = spec->log_if_skewed;
    o.minmax = true;
    o.reflect = spec->direction == Direction::RiskDecreases;
    o.lower_pct = c.winsor_lower;
    o.upper_pct = c.winsor_upper;
    auto fit = prep::fit_column(spec->name, col.numbers, o);
    const auto stats_row = prep::describe(prep::present(col.numbers), true);
    std::string steps;
    for (const auto& st : fit.record.steps) {
      steps += (steps.empty() ? "" : "+") + std::string(prep::to_string(st.kind));
    }
    desc += csv::format_row({spec->name, std::to_string(stats_row.n), csv::format_number(stats_row.mean),
                             csv::format_number(stats_row.sd_population), csv::format_number(stats_row.min),
                             csv::format_number(stats_row.q1), csv::format_number(stats_row.q3),
                             csv::format_number(stats_row.max), opt(stats_row.skewness), opt(stats_row.shapiro_w),
                             opt(stats_row.shapiro_p), std::to_string(fit.record.tukey_flags), steps});
    records.push_back(prep::to_json(fit.record));
    s.frame.add_column(Column{normalized_name(spec->name), ColumnKind::IndexScore, "preprocess", std::move(fit.values), {}});
  }
  report::save_frame(dir, "frame", s.frame);
  report::write_json(dir / "transforms.json", records);
  report::write_text(dir / "descriptives.csv", desc);
  report::write_json(dir / "dropped.json", dropped);
  return {{"rows", s.frame.rows()}, {"dropped_tracts", dropped}, {"missing_fraction", missing},
          {"transforms", records}};
}

json stage_indices(const PipelineConfig& c, const fs::path& dir, State& s) {
  if (c.flood.empty()) throw Error(ErrorCode::IoError, "no flood layer configured");
  const fs::path flood_path = c.resolve(c.flood);
  if (!fs::is_regular_file(flood_path)) throw Error(ErrorCode::IoError, "flood layer not found: " + c.flood);
  std::vector<geo::MultiPolygon> layers;
  for (auto& f : ingest::read_feature_collection(flood_path, true)) layers.push_back(std::move(f.geometry));
  const geo::Region region = geo::Region::buffered(layers, c.flood_buffer_m);
  const auto flood = indices::flood_exposure_all(s.frame.geometry(), region, c.workers);
  add_numeric(s.frame, std::string(kFloodColumn), ColumnKind::RatePercent, "flood", flood);

  std::vector<std::string> health;
  std::vector<std::string> socio;
  for (const auto& n : c.index.health) health.push_back(normalized_name(n));
  for (const auto& n : c.index.socio) socio.push_back(normalized_name(n));
  const auto h = indices::domain_score(s.frame, health);
  const auto so = indices::domain_score(s.frame, socio);
  const auto v = indices::composite_index(h, so, c.index.weights);
  add_numeric(s.frame, std::string(kHealthColumn), ColumnKind::IndexScore, "indices", h);
  add_numeric(s.frame, std::string(kSocioColumn), ColumnKind::IndexScore, "indices", so);
  add_numeric(s.frame, std::string(kCompositeColumn), ColumnKind::IndexScore, "indices", v);
  s.top_decile = indices::top_decile(v);
  const auto dec = indices::deciles(v);

  TractFrame scores(s.frame.geoids());
  for (const auto name : {kFloodColumn, kHealthColumn, kSocioColumn, kCompositeColumn}) {
    scores.add_column(s.frame.column(name));
  }
  std::vector<double> dec_d(dec.begin(), dec.end());
  std::vector<double> top_d;
  for (bool b : s.top_decile) top_d.push_back(b ? 1.0 : 0.0);
  add_numeric(scores, "v_decile", ColumnKind::IndexScore, "indices", dec_d);
  add_numeric(scores, "top_decile", ColumnKind::Count, "indices", top_d);
  report::save_frame(dir, "scores", scores);
  return {{"flood_features", layers.size()},
          {"flood_area_m2", region.area()},
          {"buffer_m", c.flood_buffer_m},
          {"weights", {{"health", c.index.weights.health}, {"socio", c.index.weights.socio}}},
          {"top_decile_count", std::count(s.top_decile.begin(), s.top_decile.end(), true)}};
}

json stage_stats(const PipelineConfig& c, const fs::path& dir, State& s) {
  const auto corr = stats::correlation_matrix(s.frame, c.correlation_variables);
  report::write_json(dir / "correlation.json", stats::to_json(corr));
  const auto v = stats::vif(s.frame, c.vif_variables);
  report::write_json(dir / "vif.json", report::to_json(v));
  const auto ej = stats::ej_compare(s.frame, s.top_decile, c.ej_continuous, c.ej_categorical);
  report::write_json(dir / "ej.json", stats::to_json(ej));

  json quart{{"variable", c.profile_key}, {"rows", json::array()}};
  if (s.frame.has_column(c.profile_key)) {
    const auto bins = prep::quartile_bins(s.frame.complete_values(c.profile_key));
    const auto comp = s.frame.complete_values(kCompositeColumn);
    const auto hh = s.frame.complete_values(kHealthColumn);
    const auto ss = s.frame.complete_values(kSocioColumn);
    const auto fl = s.frame.complete_values(kFloodColumn);
    for (int q = 1; q <= 4; ++q) {
      double n = 0, a = 0, b = 0, d = 0, e = 0;
      for (std::size_t r = 0; r < bins.size(); ++r) {
        if (static_cast<int>(bins[r]) != q) continue;
        n += 1;
        a += comp[r];
        b += hh[r];
        d += ss[r];
        e += fl[r];
      }
      if (n == 0) continue;
      quart["rows"].push_back({{"quartile", q}, {"n", static_cast<std::size_t>(n)}, {"composite", a / n},
                               {"health", b / n}, {"socio", d / n}, {"flood", e / n}});
    }
  }
  report::write_json(dir / "quartiles.json", quart);
  std::size_t skipped = 0;
  for (const auto& o : ej) skipped += o.comparison ? 0 : 1;
  return {{"correlation_variables", c.correlation_variables}, {"vif", report::to_json(v)},
          {"ej_tests", ej.size()}, {"ej_skipped", skipped}};
}

json stage_cluster(const PipelineConfig& c, const fs::path& dir, State& s) {
  const auto m = cluster::standardize(s.frame, c.cluster_features);
  const std::uint64_t seed = derive_seed(*c.seed, kClusterStream);
  cluster::KMeansOptions o;
  o.n_init = c.n_init;
  o.max_iter = c.max_iter;
  o.tol = c.tol;
  o.workers = c.workers;
  const std::size_t k_max = std::min(c.k_max, m.rows() - 1);
  auto sel = cluster::select_k(m, c.k_min, k_max, seed, o);
  const std::size_t k = c.k_fixed ? c.k_fixed : sel.k_best;
  cluster::ClusterModel km = k >= c.k_min && k <= k_max ? sel.models[k - c.k_min] : cluster::kmeans_fit(m, k, seed, o);
  km.seed = seed;
  km.silhouette = cluster::silhouette(m, km.assignments).mean;

  cluster::ClusterModel wd;
  wd.method = cluster::Method::Ward;
  wd.k = k;
  wd.seed = seed;
  wd.tree = cluster::ward_linkage(m);
  wd.assignments = cluster::cut_tree(wd.tree, k);
  wd.silhouette = cluster::silhouette(m, wd.assignments).mean;
  {
    std::vector<std::vector<double>> cents(k, std::vector<double>(m.cols(), 0.0));
    std::vector<double> sizes(k, 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto a = static_cast<std::size_t>(wd.assignments[r]);
      sizes[a] += 1;
      for (std::size_t j = 0; j < m.cols(); ++j) cents[a][j] += m.at(r, j);
    }
    for (std::size_t a = 0; a < k; ++a) {
      for (double& x : cents[a]) x /= sizes[a];
    }
    wd.wcss = cluster::wcss(m, wd.assignments, cents);
  }

  if (s.frame.has_column(c.profile_key)) {
    const auto key = s.frame.complete_values(c.profile_key);
    cluster::relabel(km, cluster::canonical_order(km.assignments, key));
    const auto ward_map = cluster::canonical_order(wd.assignments, key);
    for (int& a : wd.assignments) a = ward_map[static_cast<std::size_t>(a)];
  }
  const auto agree = cluster::agreement(km.assignments, wd.assignments);
  const auto profile = cluster::cluster_profile(s.frame, km.assignments, c.cluster_features);

  report::write_json(dir / "kmeans.json", cluster::to_json(km, s.frame.geoids()));
  report::write_json(dir / "ward.json", cluster::to_json(wd, s.frame.geoids()));
  report::write_json(dir / "selection.json", cluster::to_json(sel));
  report::write_json(dir / "profile.json", cluster::to_json(profile));
  report::write_json(dir / "agreement.json", {{"contingency", agree.contingency}, {"adjusted_rand", agree.adjusted_rand}});
  return {{"seed", seed},       {"k", k},
          {"k_selected_by", c.k_fixed ? "config" : "silhouette"},
          {"k_best", sel.k_best}, {"k_range", {c.k_min, k_max}},
          {"kmeans_wcss", km.wcss}, {"kmeans_silhouette", *km.silhouette},
          {"ward_silhouette", *wd.silhouette}, {"adjusted_rand", agree.adjusted_rand},
          {"cluster_sizes", profile.sizes}};
}

json stage_spatial(const PipelineConfig& c, const fs::path& dir, State& s) {
  const auto graph = geo::build_contiguity(s.frame.geoids(), s.frame.geometry(), c.contiguity);
  const spatial::SpatialWeights w(graph, c.weights);
  const spatial::SpatialWeights rw(graph, spatial::WeightMode::RowStandardized);
  const auto values = s.frame.complete_values(c.spatial_variable);
  const std::uint64_t moran_seed = derive_seed(*c.seed, kMoranStream);
  const std::uint64_t lisa_seed = derive_seed(*c.seed, kLisaStream);
  const auto moran = spatial::morans_i_test(values, w, c.moran_permutations, moran_seed, c.workers);
  const auto lisa = spatial::local_moran(values, rw, c.lisa_permutations, lisa_seed, c.alpha, c.workers);
  const std::size_t distinct = std::set<double>(values.begin(), values.end()).size();
  const auto jenks = spatial::fisher_jenks(values, std::min(c.jenks_classes, distinct));

  json lisa_j = json::object();
  std::size_t significant = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string& g = s.frame.geoids()[i];
    if (!lisa.evaluated[i]) {
      lisa_j[g] = {{"island", true}};
      continue;
    }
    significant += lisa.significant[i] ? 1 : 0;
    lisa_j[g] = {{"island", false},
                 {"local_i", lisa.local_i[i]},
                 {"lag", lisa.lag[i]},
                 {"quadrant", spatial::to_string(lisa.quadrant[i])},
                 {"pseudo_p", std::isfinite(lisa.pseudo_p[i]) ? json(lisa.pseudo_p[i]) : json(nullptr)},
                 {"significant", static_cast<bool>(lisa.significant[i])}};
  }
  json classes = json::object();
  for (std::size_t i = 0; i < values.size(); ++i) classes[s.frame.geoids()[i]] = jenks.labels[i];
  json islands = json::array();
  for (auto i : graph.islands()) islands.push_back(graph.node_ids[i]);

  report::write_json(dir / "moran.json", spatial::to_json(moran));
  report::write_json(dir / "lisa.json", lisa_j);
  report::write_json(dir / "jenks.json", {{"variable", c.spatial_variable}, {"breaks", jenks.breaks}, {"classes", classes}});
  report::write_json(dir / "weights.json", {{"rule", c.contiguity == geo::ContiguityRule::Queen ? "queen" : "rook"},
                                            {"s0", w.s0()},
                                            {"islands", islands}});
  return {{"variable", c.spatial_variable}, {"moran", spatial::to_json(moran)},
          {"lisa_seed", lisa_seed},         {"lisa_permutations", c.lisa_permutations},
          {"alpha", c.alpha},               {"lisa_significant", significant},
          {"islands", islands},             {"jenks_breaks", jenks.breaks}};
}

json input_digests(const PipelineConfig& c) {
  json out = json::array();
  auto add = [&](const std::string& role, const std::string& path) {
    if (path.empty()) return;
    const fs::path p = c.resolve(path);
    out.push_back({{"role", role}, {"path", path}, {"sha256", fs::is_regular_file(p) ? json(sha256_file(p)) : json(nullptr)}});
  };
  add("boundaries", c.boundaries);
  for (const auto& t : c.tables) add("table:" + t.source, t.path);
  add("flood", c.flood);
  add("city", c.city);
  add("aqi", c.aqi);
  return out;
}

void clear_outputs(const fs::path& out) {
  for (const char* name : {"stages", "tables", "plots", "scored.geojson", "manifest.json", "FAILED"}) {
    std::error_code ec;
    fs::remove_all(out / name, ec);
  }
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"ingest", "preprocess", "indices", "stats", "cluster", "spatial", "emit"};
  return names;
}

bool RunResult::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == StageStatus::Ok; });
}

std::optional<std::string> RunResult::failed_stage() const {
  for (const auto& s : stages) {
    if (s.status == StageStatus::Failed) return s.name;
  }
  return std::nullopt;
}

int exit_code(const RunResult& result) { return result.ok() ? 0 : 3; }

json strip_timing(json manifest) {
  if (manifest.contains("stages")) {
    for (auto& s : manifest["stages"]) s.erase("seconds");
  }
  manifest.erase("total_seconds");
  return manifest;
}

RunResult run_pipeline(const PipelineConfig& config, const std::optional<fs::path>& output_override) {
  validate(config, false);
  RunResult result;
  result.output_dir = output_override ? *output_override : config.output_path();
  const fs::path out = result.output_dir;
  fs::create_directories(out);
  clear_outputs(out);
  const fs::path stages_dir = out / "stages";
  fs::create_directories(stages_dir);

  const json config_json = to_json(config);
  std::vector<std::string> raw_columns;
  for (const auto& s : config.indicators) raw_columns.push_back(s.name);
  if (!config.aqi.empty()) raw_columns.emplace_back(ingest::kAqiColumn);
  report::write_json(stages_dir / "context.json", {{"config", config_json}, {"raw_columns", raw_columns}});

  State state;
  using StageFn = std::function<json(const PipelineConfig&, const fs::path&, State&)>;
  const std::vector<StageFn> fns{
      stage_ingest, stage_preprocess, stage_indices, stage_stats, stage_cluster, stage_spatial,
      [&](const PipelineConfig&, const fs::path&, State&) {
        const auto summary = report::emit_from_run_dir(out);
        return json{{"scored_geojson", summary.scored_geojson}, {"tables", summary.tables}, {"plots", summary.plots}};
      }};

  const auto run_start = std::chrono::steady_clock::now();
  bool failed = false;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    StageRecord rec;
    rec.name = stage_names()[i];
    if (failed) {
      result.stages.push_back(std::move(rec));
      continue;
    }
    const fs::path dir = stages_dir / rec.name;
    fs::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.params = fns[i](config, dir, state);
      rec.status = StageStatus::Ok;
    } catch (const Error& e) {
      rec.status = StageStatus::Failed;
      rec.error_code = std::string(to_string(e.code()));
      rec.error_message = e.detail();
    } catch (const std::exception& e) {
      rec.status = StageStatus::Failed;
      rec.error_code = "Internal";
      rec.error_message = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rec.status == StageStatus::Failed) {
      failed = true;
      report::write_text(out / "FAILED", "stage: " + rec.name + "\ncode: " + rec.error_code +
                                             "\nmessage: " + rec.error_message + "\n");
    }
    result.stages.push_back(std::move(rec));
  }

  json stages = json::array();
  for (const auto& r : result.stages) {
    json s{{"name", r.name}, {"status", to_string(r.status)}, {"seconds", r.seconds}, {"params", r.params}};
    if (r.status == StageStatus::Failed) s["error"] = {{"code", r.error_code}, {"message", r.error_message}};
    stages.push_back(std::move(s));
  }
  result.manifest = {
      {"software", {{"name", "vulnatlas"}, {"version", VULNATLAS_VERSION}}},
      {"config_digest", sha256_hex(config_json.dump())},
      {"config", config_json},
      {"inputs", input_digests(config)},
      {"seeds",
       {{"master", *config.seed},
        {"cluster", derive_seed(*config.seed, kClusterStream)},
        {"moran", derive_seed(*config.seed, kMoranStream)},
        {"lisa", derive_seed(*config.seed, kLisaStream)}}},
      {"stages", stages},
      {"status", failed ? "failed" : "ok"},
      {"failed_stage", result.failed_stage() ? json(*result.failed_stage()) : json(nullptr)},
      {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count()},
  };
  report::write_json(out / "manifest.json", result.manifest);
  return result;
}

}  // namespace vulnatlas::pipeline
