#pragma once

// Optional network clients for the raw inputs. Every fetcher writes the exact
// file format ingest reads, and every fetcher can be replaced by a fixture
// directory (acs.csv, flood.geojson, aqi.csv).

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vulnatlas/geomesh.hpp"

namespace vulnatlas::acquire {

enum class Source { CensusACS, FloodLayerREST, CountyAQI };
std::string_view to_string(Source s);
Source parse_source(std::string_view text);  // acs | nfhl | aqi

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double factor = 2.0;
};

struct FetchJob {
  Source source = Source::CensusACS;
  std::vector<std::string> variables;  // ACS variable codes
  std::string state;                   // 2-digit FIPS
  std::string county;                  // 3-digit FIPS
  int year = 2022;
  std::optional<geo::BBox> bbox;  // lon/lat, flood layer only
  std::string base_url;           // empty selects the public endpoint for the source
  std::string dataset = "acs/acs5";
  std::string state_name;   // AQI files key counties by name
  std::string county_name;
  std::size_t page_size = 1000;
  std::filesystem::path output;
  RetryPolicy retry;
};

/// Throws unless the job can be run (variables present for ACS, output
/// directory writable, bbox present for the flood layer).
void validate(const FetchJob& job);

struct HttpResponse {
  int status = 0;  // 0 signals a transport failure
  std::string body;
};

using Transport = std::function<HttpResponse(const std::string& url)>;

/// cpp-httplib client (http and https).
Transport http_transport(std::chrono::seconds timeout = std::chrono::seconds(60));

/// GET with retries on transport failures and 5xx. 429 raises QuotaExceeded,
/// other statuses raise HttpError carrying the server message.
HttpResponse get_with_retry(const Transport& transport, const std::string& url, const RetryPolicy& retry);

/// Writes GEOID plus the requested variables, one row per tract, sorted by GEOID.
/// The key comes from CENSUS_API_KEY unless given.
void fetch_acs(const FetchJob& job, const Transport& transport,
               std::optional<std::string> api_key = std::nullopt);

/// Zone codes treated as Special Flood Hazard Areas.
const std::vector<std::string>& sfha_zones();
bool is_sfha(std::string_view zone);

/// Queries the feature count, pages through the layer and keeps SFHA polygons.
void fetch_flood_layer(const FetchJob& job, const Transport& transport);

/// Downloads the annual county AQI archive and writes county_fips,year,aqi
/// (median AQI) for the job's county.
void fetch_aqi(const FetchJob& job, const Transport& transport);

/// First .csv member of a zip archive (stored or deflated).
std::string unzip_first_csv(std::string_view archive);

/// Runs the job against the network.
void fetch(const FetchJob& job, const Transport& transport);

std::filesystem::path fixture_path(const std::filesystem::path& dir, Source source);
/// Raw bytes of the fixture for `source`, after checking it parses.
/// Throws MissingFixture("acs"|"flood"|"aqi") or the ingest parse error.
std::string load_fixture(const std::filesystem::path& dir, Source source);
/// Offline counterpart of fetch: copies the fixture bytes to job.output.
void fetch_offline(const FetchJob& job, const std::filesystem::path& fixture_dir);

}  // namespace vulnatlas::acquire
