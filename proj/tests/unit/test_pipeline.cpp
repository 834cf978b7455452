#include <fstream>

#include "helpers.hpp"
#include "vulnatlas/config.hpp"
#include "vulnatlas/csv.hpp"
#include "vulnatlas/ingest.hpp"
#include "vulnatlas/pipeline.hpp"
#include "vulnatlas/report.hpp"
#include "vulnatlas/synth.hpp"

using namespace vulnatlas;
namespace fs = std::filesystem;

namespace {

fs::path city_dir() {
  static const fs::path dir = [] {
    auto d = testutil::scratch("city");
    synth::write_city(d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  auto cfg = pipeline::load_config(city_dir() / "config.toml");
  CHECK(cfg.seed.has_value());
  CHECK(cfg.k_min == 2);
  CHECK(cfg.k_max == 10);
  CHECK(cfg.cluster_features.size() == 12);
  CHECK_NOTHROW(pipeline::validate(cfg));

  const std::string bad = "seed = 1\n[cluster]\nk_mn = 2\n";
  CHECK_CODE(pipeline::parse_config(bad, true, city_dir()), ErrorCode::ConfigError);
  const std::string weights = report::read_text(city_dir() / "config.toml") + "";
  auto broken = pipeline::parse_config(weights, true, city_dir());
  broken.index.weights = {0.5, 0.6};
  CHECK_CODE(pipeline::validate(broken), ErrorCode::ConfigError);
}

TEST_CASE("full run on the synthetic city") {
  auto cfg = pipeline::load_config(city_dir() / "config.toml");
  auto out = testutil::scratch("run");
  auto result = pipeline::run_pipeline(cfg, out);
  REQUIRE(result.ok());
  CHECK(pipeline::exit_code(result) == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "scored.geojson"));
  std::size_t tables = 0, plots = 0;
  for (const auto& e : fs::directory_iterator(out / "tables")) tables += e.path().extension() == ".csv";
  for (const auto& e : fs::directory_iterator(out / "plots")) plots += e.path().extension() == ".svg";
  CHECK(tables >= 4);
  CHECK(plots >= 3);

  auto manifest = report::read_json(out / "manifest.json");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["stages"].size() == pipeline::stage_names().size());

  auto scored = report::read_json(out / "scored.geojson");
  REQUIRE(scored["features"].size() == 94);
  auto scores = report::load_frame(out / "stages" / "indices", "scores");
  for (const auto& f : scored["features"]) {
    const auto& p = f["properties"];
    for (const char* key : {"GEOID", "flood_pct", "health_score", "socio_score", "composite", "v_decile",
                            "v_top_decile", "kmeans_cluster", "ward_cluster", "island", "lisa_quadrant", "lisa_i",
                            "lisa_p", "lisa_significant", "v_jenks_class"})
      CHECK_MESSAGE(p.contains(key), key);
    auto row = scores.row_of(p["GEOID"].get<std::string>());
    REQUIRE(row);
    CHECK(std::abs(p["composite"].get<double>() - *scores.column("composite").numbers[*row]) < 1e-9);
  }

  // report --from rebuilds identical artifacts
  const auto before = report::read_text(out / "scored.geojson");
  const auto plot = report::read_text(out / "plots" / "choropleth_composite.svg");
  fs::remove(out / "scored.geojson");
  report::emit_from_run_dir(out);
  CHECK(report::read_text(out / "scored.geojson") == before);
  CHECK(report::read_text(out / "plots" / "choropleth_composite.svg") == plot);
}

TEST_CASE("missing flood layer fails at indices") {
  auto dir = testutil::scratch("city_noflood");
  for (const auto& e : fs::directory_iterator(city_dir())) fs::copy(e.path(), dir / e.path().filename());
  fs::remove(dir / "flood.geojson");
  auto cfg = pipeline::load_config(dir / "config.toml");
  auto out = testutil::scratch("run_noflood");
  auto result = pipeline::run_pipeline(cfg, out);
  CHECK_FALSE(result.ok());
  CHECK(pipeline::exit_code(result) == 3);
  REQUIRE(result.failed_stage());
  CHECK(*result.failed_stage() == "indices");
  CHECK(fs::exists(out / "stages" / "ingest" / "frame.csv"));
  CHECK(fs::exists(out / "FAILED"));
  auto manifest = report::read_json(out / "manifest.json");
  CHECK(manifest["failed_stage"] == "indices");
  bool skipped = false;
  for (const auto& s : manifest["stages"]) skipped |= s["name"] == "emit" && s["status"] == "skipped";
  CHECK(skipped);
}

TEST_CASE("island tracts carry null LISA") {
  auto dir = testutil::scratch("city_island");
  for (const auto& e : fs::directory_iterator(city_dir())) fs::copy(e.path(), dir / e.path().filename());
  // move one tract far away from the rest
  auto fc = report::read_json(dir / "boundaries.geojson");
  auto& ring = fc["features"][55]["geometry"]["coordinates"][0];
  for (auto& pt : ring) pt[0] = pt[0].get<double>() + 0.5;
  const std::string moved = fc["features"][55]["properties"]["GEOID"];
  report::write_json(dir / "boundaries.geojson", fc);
  // keep it inside the city so it is analysed
  auto city = report::read_json(dir / "city.geojson");
  nlohmann::json extra = fc["features"][55];
  extra["properties"] = nlohmann::json::object();
  city["features"].push_back(extra);
  report::write_json(dir / "city.geojson", city);

  auto cfg = pipeline::load_config(dir / "config.toml");
  auto out = testutil::scratch("run_island");
  auto result = pipeline::run_pipeline(cfg, out);
  REQUIRE(result.ok());
  auto scored = report::read_json(out / "scored.geojson");
  bool found = false;
  for (const auto& f : scored["features"]) {
    if (f["properties"]["GEOID"] != moved) continue;
    found = true;
    CHECK(f["properties"]["island"] == true);
    CHECK(f["properties"]["lisa_p"].is_null());
    CHECK(f["properties"]["lisa_quadrant"].is_null());
  }
  CHECK(found);
}
