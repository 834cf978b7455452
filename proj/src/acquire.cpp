#include "vulnatlas/acquire.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vulnatlas/csv.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/ingest.hpp"

namespace vulnatlas::acquire {

namespace {

using nlohmann::json;

constexpr const char* kCensusBase = "https://api.census.gov/data";
constexpr const char* kNfhlLayer = "https://hazards.fema.gov/arcgis/rest/services/public/NFHL/MapServer/28";
constexpr const char* kAqiBase = "https://aqs.epa.gov/aqsweb/airdata";

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == ',' || c == ':' || c == '*') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim_message(std::string_view body) {
  std::string s(body.substr(0, 500));
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::uint32_t le32(std::string_view b, std::size_t at) {
  if (at + 4 > b.size()) throw Error(ErrorCode::ParseError, "truncated zip archive");
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) throw Error(ErrorCode::ParseError, "truncated zip archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

std::string inflate_raw(std::string_view data, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error(ErrorCode::ParseError, "zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) throw Error(ErrorCode::ParseError, "corrupt deflate stream");
  return out;
}

}  // namespace

std::string_view to_string(Source s) {
  switch (s) {
    case Source::CensusACS: return "acs";
    case Source::FloodLayerREST: return "nfhl";
    case Source::CountyAQI: return "aqi";
  }
  return "acs";
}

Source parse_source(std::string_view text) {
  if (text == "acs") return Source::CensusACS;
  if (text == "nfhl" || text == "flood") return Source::FloodLayerREST;
  if (text == "aqi") return Source::CountyAQI;
  throw Error(ErrorCode::ConfigError, "unknown source '" + std::string(text) + "'");
}

void validate(const FetchJob& job) {
  if (job.output.empty()) throw Error(ErrorCode::ConfigError, "fetch job has no output path");
  const auto parent = job.output.has_parent_path() ? job.output.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  if (std::filesystem::exists(parent, ec) && !std::filesystem::is_directory(parent, ec)) {
    throw Error(ErrorCode::ConfigError, "output parent is not a directory: " + parent.string());
  }
  if (job.retry.max_attempts < 1) throw Error(ErrorCode::ConfigError, "retry needs at least one attempt");
  switch (job.source) {
    case Source::CensusACS:
      if (job.variables.empty()) throw Error(ErrorCode::ConfigError, "ACS job has no variables");
      if (job.state.size() != 2 || job.county.size() != 3) {
        throw Error(ErrorCode::ConfigError, "ACS job needs 2-digit state and 3-digit county codes");
      }
      break;
    case Source::FloodLayerREST:
      if (!job.bbox) throw Error(ErrorCode::ConfigError, "flood layer job has no bounding box");
      if (job.page_size == 0) throw Error(ErrorCode::ConfigError, "page size must be positive");
      break;
    case Source::CountyAQI:
      if (job.state_name.empty() || job.county_name.empty()) {
        throw Error(ErrorCode::ConfigError, "AQI job needs state_name and county_name");
      }
      break;
  }
}

Transport http_transport(std::chrono::seconds timeout) {
  return [timeout](const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) return HttpResponse{0, "malformed url: " + url};
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto res = client.Get(path);
    if (!res) return HttpResponse{0, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body};
  };
}

HttpResponse get_with_retry(const Transport& transport, const std::string& url, const RetryPolicy& retry) {
  auto wait = retry.initial_backoff;
  HttpResponse last;
  for (int attempt = 1; attempt <= std::max(1, retry.max_attempts); ++attempt) {
    last = transport(url);
    if (last.status == 429) throw Error(ErrorCode::QuotaExceeded, trim_message(last.body));
    const bool retryable = last.status == 0 || last.status >= 500;
    if (!retryable) break;
    if (attempt < retry.max_attempts && wait.count() > 0) {
      std::this_thread::sleep_for(wait);
      wait = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(wait.count()) * retry.factor));
    }
  }
  if (last.status == 0) throw Error(ErrorCode::HttpError, "transport failure: " + trim_message(last.body));
  if (last.status < 200 || last.status >= 300) {
    throw Error(ErrorCode::HttpError, "status " + std::to_string(last.status) + ": " + trim_message(last.body));
  }
  return last;
}

void fetch_acs(const FetchJob& job, const Transport& transport, std::optional<std::string> api_key) {
  validate(job);
  if (!api_key) {
    if (const char* env = std::getenv("CENSUS_API_KEY"); env && *env) api_key = env;
  }
  if (!api_key) throw Error(ErrorCode::MissingApiKey, "CENSUS_API_KEY is not set");
  const std::string base = job.base_url.empty() ? kCensusBase : job.base_url;
  std::string get;
  for (const auto& v : job.variables) get += (get.empty() ? "" : ",") + v;
  const std::string url = base + "/" + std::to_string(job.year) + "/" + job.dataset + "?get=" + url_encode(get) +
                          "&for=tract:*&in=" + url_encode("state:" + job.state + " county:" + job.county) +
                          "&key=" + url_encode(*api_key);
  const HttpResponse res = get_with_retry(transport, url, job.retry);

  json body;
  try {
    body = json::parse(res.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaDrift, std::string("response is not JSON: ") + e.what());
  }
  if (!body.is_array() || body.empty() || !body[0].is_array()) {
    throw Error(ErrorCode::SchemaDrift, "response is not a table");
  }
  std::vector<std::string> header;
  for (const auto& h : body[0]) header.push_back(h.get<std::string>());
  std::set<std::string> expected(job.variables.begin(), job.variables.end());
  expected.insert({"state", "county", "tract"});
  const std::set<std::string> got(header.begin(), header.end());
  if (got != expected || header.size() != expected.size()) {
    std::string cols;
    for (const auto& h : header) cols += (cols.empty() ? "" : ",") + h;
    throw Error(ErrorCode::SchemaDrift, "response columns [" + cols + "] differ from the request");
  }
  auto pos = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  std::map<std::string, std::vector<std::string>> rows;
  for (std::size_t r = 1; r < body.size(); ++r) {
    const auto& row = body[r];
    if (!row.is_array() || row.size() != header.size()) {
      throw Error(ErrorCode::SchemaDrift, "row " + std::to_string(r) + " has the wrong width");
    }
    auto cell = [&](std::size_t c) { return row[c].is_null() ? std::string() : row[c].get<std::string>(); };
    const std::string geoid = ingest::make_geoid(cell(pos("state")), cell(pos("county")), cell(pos("tract")));
    std::vector<std::string> out{geoid};
    for (const auto& v : job.variables) out.push_back(cell(pos(v)));
    rows[geoid] = std::move(out);
  }
  std::string text;
  std::vector<std::string> out_header{"GEOID"};
  out_header.insert(out_header.end(), job.variables.begin(), job.variables.end());
  text += csv::format_row(out_header);
  for (const auto& [geoid, row] : rows) text += csv::format_row(row);
  write_file(job.output, text);
}

const std::vector<std::string>& sfha_zones() {
  static const std::vector<std::string> zones{"A", "AE", "AH", "AO", "AR", "A99", "V", "VE"};
  return zones;
}

bool is_sfha(std::string_view zone) {
  const auto& z = sfha_zones();
  return std::find(z.begin(), z.end(), zone) != z.end();
}

void fetch_flood_layer(const FetchJob& job, const Transport& transport) {
  validate(job);
  const std::string layer = job.base_url.empty() ? kNfhlLayer : job.base_url;
  const auto& b = *job.bbox;
  std::ostringstream env;
  env.precision(17);
  env << b.min_x << ',' << b.min_y << ',' << b.max_x << ',' << b.max_y;
  const std::string common = layer + "/query?where=" + url_encode("1=1") + "&geometry=" + url_encode(env.str()) +
                             "&geometryType=esriGeometryEnvelope&inSR=4326&spatialRel=esriSpatialRelIntersects";

  const HttpResponse count_res = get_with_retry(transport, common + "&returnCountOnly=true&f=json", job.retry);
  std::size_t total = 0;
  try {
    total = json::parse(count_res.body).at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaDrift, std::string("count response: ") + e.what());
  }

  json kept = json::array();
  std::size_t received = 0;
  const std::size_t pages = (total + job.page_size - 1) / job.page_size;
  for (std::size_t page = 0; page < pages; ++page) {
    const std::string url = common + "&outFields=FLD_ZONE&returnGeometry=true&outSR=4326&orderByFields=OBJECTID" +
                            "&resultOffset=" + std::to_string(page * job.page_size) +
                            "&resultRecordCount=" + std::to_string(job.page_size) + "&f=geojson";
    const HttpResponse res = get_with_retry(transport, url, job.retry);
    json fc;
    try {
      fc = json::parse(res.body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaDrift, "page " + std::to_string(page) + ": " + e.what());
    }
    if (!fc.contains("features") || !fc["features"].is_array()) {
      throw Error(ErrorCode::SchemaDrift, "page " + std::to_string(page) + " has no features array");
    }
    if (fc["features"].empty()) break;
    for (auto& f : fc["features"]) {
      ++received;
      const auto& props = f.value("properties", json::object());
      const std::string zone = props.contains("FLD_ZONE") && props["FLD_ZONE"].is_string()
                                   ? props["FLD_ZONE"].get<std::string>()
                                   : std::string();
      if (!is_sfha(zone)) continue;
      kept.push_back({{"type", "Feature"}, {"properties", {{"zone", zone}}}, {"geometry", f.at("geometry")}});
    }
  }
  if (received < total) {
    throw Error(ErrorCode::PaginationIncomplete,
                "received " + std::to_string(received) + " of " + std::to_string(total) + " advertised features");
  }
  const json out{{"type", "FeatureCollection"}, {"features", kept}};
  const std::string text = out.dump(1) + "\n";
  ingest::parse_feature_collection(text, false);
  write_file(job.output, text);
}

std::string unzip_first_csv(std::string_view zip) {
  if (zip.size() < 22) throw Error(ErrorCode::ParseError, "not a zip archive");
  std::size_t eocd = std::string_view::npos;
  for (std::size_t i = zip.size() - 22 + 1; i-- > 0;) {
    if (le32(zip, i) == 0x06054b50) {
      eocd = i;
      break;
    }
    if (zip.size() - i > 22 + 65535) break;
  }
  if (eocd == std::string_view::npos) throw Error(ErrorCode::ParseError, "zip end record not found");
  const std::size_t entries = le16(zip, eocd + 10);
  std::size_t at = le32(zip, eocd + 16);
  for (std::size_t e = 0; e < entries; ++e) {
    if (le32(zip, at) != 0x02014b50) throw Error(ErrorCode::ParseError, "bad zip directory entry");
    const std::uint16_t method = le16(zip, at + 10);
    const std::uint32_t csize = le32(zip, at + 20);
    const std::uint32_t usize = le32(zip, at + 24);
    const std::uint16_t name_len = le16(zip, at + 28);
    const std::uint16_t extra_len = le16(zip, at + 30);
    const std::uint16_t comment_len = le16(zip, at + 32);
    const std::uint32_t local = le32(zip, at + 42);
    if (at + 46 + name_len > zip.size()) throw Error(ErrorCode::ParseError, "truncated zip directory");
    const std::string name(zip.substr(at + 46, name_len));
    at += 46u + name_len + extra_len + comment_len;
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    if (le32(zip, local) != 0x04034b50) throw Error(ErrorCode::ParseError, "bad zip local header");
    const std::size_t data = local + 30u + le16(zip, local + 26) + le16(zip, local + 28);
    if (data + csize > zip.size()) throw Error(ErrorCode::ParseError, "truncated zip member");
    const auto payload = zip.substr(data, csize);
    if (method == 0) return std::string(payload);
    if (method == 8) return inflate_raw(payload, usize);
    throw Error(ErrorCode::ParseError, "unsupported zip compression method " + std::to_string(method));
  }
  throw Error(ErrorCode::ParseError, "zip archive has no csv member");
}

void fetch_aqi(const FetchJob& job, const Transport& transport) {
  validate(job);
  const std::string base = job.base_url.empty() ? kAqiBase : job.base_url;
  const std::string url = base + "/annual_aqi_by_county_" + std::to_string(job.year) + ".zip";
  const HttpResponse res = get_with_retry(transport, url, job.retry);
  const csv::Table table = csv::parse(unzip_first_csv(res.body));
  const auto state = table.column_index("State");
  const auto county = table.column_index("County");
  const auto median = table.column_index("Median AQI");
  if (!state || !county || !median) throw Error(ErrorCode::SchemaDrift, "AQI file lacks State/County/Median AQI");
  for (const auto& row : table.rows) {
    if (row[*state] == job.state_name && row[*county] == job.county_name) {
      std::string text = csv::format_row({"county_fips", "year", "aqi"});
      text += csv::format_row({job.state + job.county, std::to_string(job.year), row[*median]});
      write_file(job.output, text);
      return;
    }
  }
  throw Error(ErrorCode::SchemaDrift, "no AQI row for " + job.county_name + ", " + job.state_name);
}

void fetch(const FetchJob& job, const Transport& transport) {
  switch (job.source) {
    case Source::CensusACS: return fetch_acs(job, transport);
    case Source::FloodLayerREST: return fetch_flood_layer(job, transport);
    case Source::CountyAQI: return fetch_aqi(job, transport);
  }
}

std::filesystem::path fixture_path(const std::filesystem::path& dir, Source source) {
  switch (source) {
    case Source::CensusACS: return dir / "acs.csv";
    case Source::FloodLayerREST: return dir / "flood.geojson";
    case Source::CountyAQI: return dir / "aqi.csv";
  }
  return dir;
}

std::string load_fixture(const std::filesystem::path& dir, Source source) {
  const auto path = fixture_path(dir, source);
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::MissingFixture, source == Source::FloodLayerREST ? "flood" : std::string(to_string(source)));
  }
  std::string bytes = read_bytes(path);
  if (source == Source::FloodLayerREST) {
    ingest::parse_feature_collection(bytes, false);
  } else {
    csv::parse(bytes);
  }
  return bytes;
}

void fetch_offline(const FetchJob& job, const std::filesystem::path& fixture_dir) {
  if (job.output.empty()) throw Error(ErrorCode::ConfigError, "fetch job has no output path");
  write_file(job.output, load_fixture(fixture_dir, job.source));
}

}  // namespace vulnatlas::acquire
