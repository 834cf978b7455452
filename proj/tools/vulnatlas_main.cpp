// vulnatlas command line: run, validate, fetch, report.

#include <CLI11.hpp>

#include <iostream>

#include "vulnatlas/acquire.hpp"
#include "vulnatlas/config.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/pipeline.hpp"
#include "vulnatlas/report.hpp"

namespace fs = std::filesystem;
using namespace vulnatlas;

namespace {

constexpr int kConfigError = 2;
constexpr int kStageFailure = 3;

pipeline::PipelineConfig load(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::ConfigError, "config not found: " + path);
  return pipeline::load_config(path);
}

acquire::FetchJob make_job(const pipeline::PipelineConfig& cfg, acquire::Source source, const std::string& out) {
  const auto& f = cfg.fetch;
  acquire::FetchJob job;
  job.source = source;
  try {
    job.state = f.value("state", "");
    job.county = f.value("county", "");
    job.year = f.value("year", source == acquire::Source::CountyAQI ? 2023 : 2022);
    job.variables = f.value("variables", std::vector<std::string>{});
    job.dataset = f.value("dataset", job.dataset);
    job.state_name = f.value("state_name", "");
    job.county_name = f.value("county_name", "");
    job.page_size = f.value("page_size", job.page_size);
    if (f.contains("bbox")) {
      const auto b = f.at("bbox").get<std::vector<double>>();
      if (b.size() != 4) throw Error(ErrorCode::ConfigError, "fetch.bbox needs 4 numbers");
      job.bbox = geo::BBox{b[0], b[1], b[2], b[3]};
    }
    const std::string url_key = std::string(acquire::to_string(source)) + "_url";
    job.base_url = f.value(url_key, "");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("fetch: ") + e.what());
  }
  const fs::path dir = out.empty() ? cfg.resolve(f.value("output_dir", std::string("raw"))) : fs::path(out);
  job.output = acquire::fixture_path(dir, source);
  return job;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tract-level climate vulnerability assessment"};
  app.set_version_flag("--version", std::string(VULNATLAS_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned workers = 0;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  run->add_option("--config", config_path, "TOML or JSON config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--workers", workers, "Worker threads (overrides workers)");

  auto* validate = app.add_subcommand("validate", "Check a config and its inputs without running");
  validate->add_option("--config", config_path, "TOML or JSON config")->required();

  std::string source;
  std::string fixtures;
  std::string fetch_out;
  auto* fetch = app.add_subcommand("fetch", "Download one raw input");
  fetch->add_option("--source", source, "acs | nfhl | aqi")->required()->check(CLI::IsMember({"acs", "nfhl", "aqi"}));
  fetch->add_option("--config", config_path, "Config with a [fetch] table")->required();
  fetch->add_option("--offline-fixtures", fixtures, "Copy from a fixture directory instead of the network");
  fetch->add_option("--out", fetch_out, "Output directory (acs.csv, flood.geojson or aqi.csv)");

  std::string from;
  auto* rep = app.add_subcommand("report", "Re-render tables and plots from a run directory");
  rep->add_option("--from", from, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      auto cfg = load(config_path);
      if (workers) cfg.workers = workers;
      pipeline::validate(cfg, false);
      const auto result = pipeline::run_pipeline(cfg, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir));
      for (const auto& s : result.stages) {
        const char* status = s.status == pipeline::StageStatus::Ok       ? "ok"
                             : s.status == pipeline::StageStatus::Failed ? "FAILED"
                                                                         : "skipped";
        std::cout << s.name << ": " << status;
        if (s.status == pipeline::StageStatus::Failed) std::cout << " (" << s.error_code << ": " << s.error_message << ")";
        std::cout << "\n";
      }
      std::cout << "outputs: " << result.output_dir.string() << "\n";
      return pipeline::exit_code(result);
    }
    if (*validate) {
      const auto cfg = load(config_path);
      pipeline::validate(cfg, true);
      std::cout << "config ok: " << cfg.indicators.size() << " indicators, " << cfg.tables.size() << " tables\n";
      return 0;
    }
    if (*fetch) {
      const auto cfg = load(config_path);
      const auto src = acquire::parse_source(source);
      const auto job = make_job(cfg, src, fetch_out);
      if (!fixtures.empty()) {
        acquire::fetch_offline(job, fixtures);
      } else {
        acquire::validate(job);
        acquire::fetch(job, acquire::http_transport());
      }
      std::cout << "wrote " << job.output.string() << "\n";
      return 0;
    }
    if (*rep) {
      const auto summary = report::emit_from_run_dir(from);
      std::cout << "wrote " << summary.scored_geojson << ", " << summary.tables.size() << " tables, "
                << summary.plots.size() << " plots\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? kConfigError : kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
  return 0;
}
