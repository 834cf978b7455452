#include "vulnatlas/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "vulnatlas/cluster.hpp"
#include "vulnatlas/error.hpp"

namespace vulnatlas::pipeline {

namespace {

using nlohmann::json;

// Reads keys from one table and rejects anything it did not consume.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::ConfigError, where("") + " must be a table");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, where(key) + ": " + e.what());
    }
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!j_.contains(key)) throw Error(ErrorCode::ConfigError, where(key) + " is required");
    get(key, out);
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.contains(k)) throw Error(ErrorCode::ConfigError, "unknown key " + where(k));
    }
  }

  std::string where(std::string_view key) const {
    if (path_.empty()) return std::string(key);
    return key.empty() ? path_ : path_ + "." + std::string(key);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json toml_to_json(std::string_view text) {
  try {
    const toml::table tbl = toml::parse(text);
    std::ostringstream ss;
    ss << toml::json_formatter{tbl};
    return json::parse(ss.str());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML line " << e.source().begin.line << ": " << e.description();
    throw Error(ErrorCode::ConfigError, msg.str());
  }
}

void fill_default(std::vector<std::string>& list, const std::vector<std::string>& fallback) {
  if (list.empty()) list = fallback;
}

}  // namespace

std::filesystem::path PipelineConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::string normalized_name(std::string_view indicator) { return std::string(indicator) + "_norm"; }

PipelineConfig parse_config(std::string_view text, bool is_toml, const std::filesystem::path& base_dir) {
  json root;
  if (is_toml) {
    root = toml_to_json(text);
  } else {
    try {
      root = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("JSON: ") + e.what());
    }
  }
  PipelineConfig c;
  c.base_dir = base_dir;
  Section top(root, "");
  if (top.has("seed")) {
    std::int64_t seed = 0;
    top.get("seed", seed);
    if (seed < 0) throw Error(ErrorCode::ConfigError, "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  top.get("output_dir", c.output_dir);
  top.get("workers", c.workers);
  if (top.has("fetch")) c.fetch = top.raw("fetch");

  Section in = top.sub("inputs");
  in.require("boundaries", c.boundaries);
  in.get("geoid_property", c.geoid_property);
  in.get("flood", c.flood);
  in.get("city", c.city);
  in.get("aqi", c.aqi);
  if (in.has("tables")) {
    const json& tables = in.raw("tables");
    if (!tables.is_array()) throw Error(ErrorCode::ConfigError, "inputs.tables must be an array of tables");
    for (std::size_t i = 0; i < tables.size(); ++i) {
      Section t(tables[i], "inputs.tables[" + std::to_string(i) + "]");
      TableInput ti;
      t.require("source", ti.source);
      t.require("path", ti.path);
      t.get("geoid_column", ti.geoid_column);
      t.finish();
      c.tables.push_back(std::move(ti));
    }
  }
  in.finish();

  if (top.has("indicators")) {
    const json& inds = top.raw("indicators");
    if (!inds.is_array()) throw Error(ErrorCode::ConfigError, "indicators must be an array of tables");
    for (std::size_t i = 0; i < inds.size(); ++i) {
      Section s(inds[i], "indicators[" + std::to_string(i) + "]");
      IndicatorSpec spec;
      std::string kind = "rate_percent";
      std::string direction = "risk_increases";
      std::string denominator;
      s.require("name", spec.name);
      s.require("table", spec.table);
      s.require("column", spec.source_column);
      s.get("denominator", denominator);
      s.get("kind", kind);
      s.get("direction", direction);
      s.get("winsorize", spec.winsorize);
      s.get("log_if_skewed", spec.log_if_skewed);
      s.finish();
      if (!denominator.empty()) spec.denominator_column = denominator;
      spec.kind = parse_column_kind(kind);
      spec.direction = parse_direction(direction);
      c.indicators.push_back(std::move(spec));
    }
  }

  Section pre = top.sub("preprocess");
  pre.get("max_missing_fraction", c.max_missing_fraction);
  pre.get("winsor_lower", c.winsor_lower);
  pre.get("winsor_upper", c.winsor_upper);
  pre.finish();

  Section idx = top.sub("index");
  idx.get("health", c.index.health);
  idx.get("socio", c.index.socio);
  idx.get("w_health", c.index.weights.health);
  idx.get("w_socio", c.index.weights.socio);
  idx.get("flood_buffer_m", c.flood_buffer_m);
  idx.finish();

  Section st = top.sub("stats");
  st.get("correlation", c.correlation_variables);
  st.get("vif", c.vif_variables);
  st.get("ej_continuous", c.ej_continuous);
  st.get("ej_categorical", c.ej_categorical);
  st.finish();

  Section cl = top.sub("cluster");
  cl.get("features", c.cluster_features);
  cl.get("k_min", c.k_min);
  cl.get("k_max", c.k_max);
  cl.get("k", c.k_fixed);
  cl.get("n_init", c.n_init);
  cl.get("max_iter", c.max_iter);
  cl.get("tol", c.tol);
  cl.get("profile_key", c.profile_key);
  cl.finish();

  Section sp = top.sub("spatial");
  std::string rule = "queen";
  std::string weights = "row_standardized";
  sp.get("contiguity", rule);
  sp.get("weights", weights);
  sp.get("moran_permutations", c.moran_permutations);
  sp.get("lisa_permutations", c.lisa_permutations);
  sp.get("alpha", c.alpha);
  sp.get("variable", c.spatial_variable);
  sp.get("jenks_classes", c.jenks_classes);
  sp.finish();
  if (rule == "queen") {
    c.contiguity = geo::ContiguityRule::Queen;
  } else if (rule == "rook") {
    c.contiguity = geo::ContiguityRule::Rook;
  } else {
    throw Error(ErrorCode::ConfigError, "spatial.contiguity must be queen or rook");
  }
  if (weights == "row_standardized") {
    c.weights = spatial::WeightMode::RowStandardized;
  } else if (weights == "binary") {
    c.weights = spatial::WeightMode::Binary;
  } else {
    throw Error(ErrorCode::ConfigError, "spatial.weights must be row_standardized or binary");
  }
  top.finish();

  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
  for (const auto& s : c.indicators) (s.kind == ColumnKind::Categorical ? categorical : numeric).push_back(s.name);
  std::vector<std::string> corr = c.index.health;
  corr.insert(corr.end(), c.index.socio.begin(), c.index.socio.end());
  corr.push_back(std::string(kFloodColumn));
  corr.push_back(std::string(kHealthColumn));
  corr.push_back(std::string(kSocioColumn));
  corr.push_back(std::string(kCompositeColumn));
  fill_default(c.correlation_variables, corr);
  std::vector<std::string> vif = c.index.socio;
  vif.push_back(std::string(kFloodColumn));
  fill_default(c.vif_variables, vif);
  std::vector<std::string> ej = numeric;
  ej.push_back(std::string(kFloodColumn));
  fill_default(c.ej_continuous, ej);
  fill_default(c.ej_categorical, categorical);
  fill_default(c.cluster_features, cluster::default_features());
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const bool is_json = path.extension() == ".json";
  auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(text, !is_json, base);
}

void validate(const PipelineConfig& c, bool check_paths) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (!c.seed) fail("seed is required");
  if (c.boundaries.empty()) fail("inputs.boundaries is required");
  if (c.flood.empty()) fail("inputs.flood is required");
  if (c.tables.empty()) fail("at least one inputs.tables entry is required");
  if (c.indicators.empty()) fail("at least one indicator is required");
  std::set<std::string> sources;
  for (const auto& t : c.tables) {
    if (!sources.insert(t.source).second) fail("duplicate table source '" + t.source + "'");
  }
  std::set<std::string> names;
  for (const auto& s : c.indicators) {
    if (!sources.contains(s.table)) fail("indicator '" + s.name + "' names unknown table '" + s.table + "'");
    if (!names.insert(s.name).second) fail("duplicate indicator '" + s.name + "'");
  }
  try {
    indices::validate(c.index);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::WeightSumInvalid) throw Error(ErrorCode::ConfigError, e.what());
    throw;
  }
  for (const auto& group : {c.index.health, c.index.socio}) {
    for (const auto& n : group) {
      auto it = std::find_if(c.indicators.begin(), c.indicators.end(), [&](const auto& s) { return s.name == n; });
      if (it == c.indicators.end()) fail("index variable '" + n + "' is not an indicator");
      if (it->kind == ColumnKind::Categorical) fail("index variable '" + n + "' is categorical");
    }
  }
  if (!(c.max_missing_fraction >= 0.0 && c.max_missing_fraction < 1.0)) fail("max_missing_fraction must be in [0, 1)");
  if (!(c.winsor_lower >= 0.0 && c.winsor_lower < c.winsor_upper && c.winsor_upper <= 100.0)) {
    fail("winsor percentiles must satisfy 0 <= lower < upper <= 100");
  }
  if (!(c.flood_buffer_m >= 0.0)) fail("flood_buffer_m must be non-negative");
  if (c.k_min < 2 || c.k_max < c.k_min) fail("cluster k range must satisfy 2 <= k_min <= k_max");
  if (c.k_fixed == 1) fail("cluster.k must be 0 (select) or at least 2");
  if (c.n_init == 0 || c.max_iter == 0) fail("n_init and max_iter must be positive");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("spatial.alpha must be in (0, 1)");
  if (c.jenks_classes == 0 || c.jenks_classes > 9) fail("spatial.jenks_classes must be 1..9");
  if (c.cluster_features.empty()) fail("cluster.features is empty");
  if (c.workers == 0) fail("workers must be at least 1");
  if (!check_paths) return;
  auto exists = [&](const std::string& key, const std::string& p) {
    if (!p.empty() && !std::filesystem::is_regular_file(c.resolve(p))) fail(key + " not found: " + c.resolve(p).string());
  };
  exists("inputs.boundaries", c.boundaries);
  exists("inputs.flood", c.flood);
  exists("inputs.city", c.city);
  exists("inputs.aqi", c.aqi);
  for (const auto& t : c.tables) exists("table " + t.source, t.path);
}

nlohmann::json to_json(const PipelineConfig& c) {
  json inds = json::array();
  for (const auto& s : c.indicators) {
    inds.push_back({{"name", s.name},
                    {"table", s.table},
                    {"column", s.source_column},
                    {"denominator", s.denominator_column ? json(*s.denominator_column) : json(nullptr)},
                    {"kind", to_string(s.kind)},
                    {"direction", to_string(s.direction)},
                    {"winsorize", s.winsorize},
                    {"log_if_skewed", s.log_if_skewed}});
  }
  json tables = json::array();
  for (const auto& t : c.tables) tables.push_back({{"source", t.source}, {"path", t.path}, {"geoid_column", t.geoid_column}});
  return {
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
      {"inputs",
       {{"boundaries", c.boundaries},
        {"geoid_property", c.geoid_property},
        {"flood", c.flood},
        {"city", c.city},
        {"aqi", c.aqi},
        {"tables", tables}}},
      {"indicators", inds},
      {"preprocess",
       {{"max_missing_fraction", c.max_missing_fraction},
        {"winsor_lower", c.winsor_lower},
        {"winsor_upper", c.winsor_upper}}},
      {"index",
       {{"health", c.index.health},
        {"socio", c.index.socio},
        {"w_health", c.index.weights.health},
        {"w_socio", c.index.weights.socio},
        {"flood_buffer_m", c.flood_buffer_m}}},
      {"stats",
       {{"correlation", c.correlation_variables},
        {"vif", c.vif_variables},
        {"ej_continuous", c.ej_continuous},
        {"ej_categorical", c.ej_categorical}}},
      {"cluster",
       {{"features", c.cluster_features},
        {"k_min", c.k_min},
        {"k_max", c.k_max},
        {"k", c.k_fixed},
        {"n_init", c.n_init},
        {"max_iter", c.max_iter},
        {"tol", c.tol},
        {"profile_key", c.profile_key}}},
      {"spatial",
       {{"contiguity", c.contiguity == geo::ContiguityRule::Queen ? "queen" : "rook"},
        {"weights", c.weights == spatial::WeightMode::Binary ? "binary" : "row_standardized"},
        {"moran_permutations", c.moran_permutations},
        {"lisa_permutations", c.lisa_permutations},
        {"alpha", c.alpha},
        {"variable", c.spatial_variable},
        {"jenks_classes", c.jenks_classes}}},
  };
}

}  // namespace vulnatlas::pipeline
