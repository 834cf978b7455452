#include <fstream>

#include "helpers.hpp"
#include "vulnatlas/csv.hpp"
#include "vulnatlas/ingest.hpp"

using namespace vulnatlas;
using namespace vulnatlas::ingest;

namespace {

std::string square_feature(const std::string& geoid, double lon, double lat, double d = 0.01) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                R"({"type":"Feature","properties":{"GEOID":"%s"},"geometry":{"type":"Polygon",)"
                R"("coordinates":[[[%.6f,%.6f],[%.6f,%.6f],[%.6f,%.6f],[%.6f,%.6f],[%.6f,%.6f]]]}})",
                geoid.c_str(), lon, lat, lon + d, lat, lon + d, lat + d, lon, lat + d, lon, lat);
  return buf;
}

std::string collection(const std::vector<std::string>& features) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) out += (i ? "," : "") + features[i];
  return out + "]}";
}

IndicatorSpec rate(std::string name, std::string col, std::optional<std::string> denom = std::nullopt) {
  IndicatorSpec s;
  s.name = std::move(name);
  s.source_column = std::move(col);
  s.denominator_column = std::move(denom);
  return s;
}

}  // namespace

TEST_CASE("geoid construction") {
  CHECK(make_geoid("37", "081", "010600") == "37081010600");
  CHECK(make_geoid(37, 81, 10600) == "37081010600");
  CHECK_CODE(make_geoid("37", "81A", "010600"), ErrorCode::MalformedComponent);
  CHECK_CODE(make_geoid("370", "081", "010600"), ErrorCode::MalformedComponent);
  CHECK(normalize_geoid("7081010600") == "07081010600");
  CHECK(normalize_geoid("37081010600") == "37081010600");
  CHECK_CODE(normalize_geoid("12ab"), ErrorCode::MalformedComponent);
  auto parts = split_geoid("37081010600");
  CHECK(parts.state == "37");
  CHECK(parts.county == "081");
  CHECK(parts.tract == "010600");
}

TEST_CASE("tract boundaries") {
  auto text = collection({square_feature("37081000100", -79.8, 36.0), square_feature("37081000200", -79.79, 36.0),
                          square_feature("37081000300", -79.78, 36.0)});
  auto b = parse_tract_boundaries(text);
  REQUIRE(b.size() == 3);
  for (const auto& [id, poly] : b) CHECK(poly.crs() == geo::Crs::Projected_WebMercator);

  auto dup = collection({square_feature("37081000100", -79.8, 36.0), square_feature("37081000100", -79.79, 36.0)});
  try {
    parse_tract_boundaries(dup);
    FAIL("expected DuplicateGeoid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateGeoid);
    CHECK(e.detail().find("37081000100") != std::string::npos);
  }

  auto no_geom = collection({square_feature("37081000100", -79.8, 36.0),
                             R"({"type":"Feature","properties":{"GEOID":"37081000200"}})"});
  try {
    parse_tract_boundaries(no_geom);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(e.detail().find("feature 1") != std::string::npos);
  }

  auto no_id = collection({R"({"type":"Feature","properties":{"NAME":"x"},"geometry":{"type":"Polygon",)"
                           R"("coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}})"});
  CHECK_CODE(parse_tract_boundaries(no_id), ErrorCode::MissingGeoidProperty);
  CHECK_CODE(parse_tract_boundaries("{not json"), ErrorCode::ParseError);
}

TEST_CASE("attribute table") {
  std::vector<IndicatorSpec> specs{rate("poverty_pct", "POV", "UNIV")};
  auto t = parse_attribute_table("GEOID,POV,UNIV\n37081000100,150,600\n37081000200,5,0\n", specs, "acs");
  auto& col = t.frame.column("poverty_pct");
  CHECK(*col.numbers[0] == doctest::Approx(25.0));
  CHECK_FALSE(col.numbers[1].has_value());
  CHECK(t.zero_denominator_cells == 1);
  CHECK_FALSE(t.warnings.empty());

  try {
    parse_attribute_table("TRACT,POV,UNIV\n1,2,3\n", specs, "acs");
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
    CHECK(e.detail() == "GEOID");
  }
  CHECK_CODE(parse_attribute_table("GEOID,POV\n37081000100,1\n", specs, "acs"), ErrorCode::MissingColumn);
  CHECK_CODE(parse_attribute_table("GEOID,POV,UNIV\n37081000100,abc,10\n", specs, "acs"),
             ErrorCode::NonNumericCell);

  // leading zeros lost by a spreadsheet
  auto z = parse_attribute_table("GEOID,POV,UNIV\n7081000100,1,10\n", specs, "acs");
  CHECK(z.frame.geoids()[0] == "07081000100");
}

TEST_CASE("join") {
  auto text = collection({square_feature("37081000100", -79.8, 36.0), square_feature("37081000200", -79.79, 36.0),
                          square_feature("37081000300", -79.78, 36.0)});
  auto b = parse_tract_boundaries(text);
  std::vector<IndicatorSpec> s1{rate("poverty_rate", "P")};
  auto t1 = parse_attribute_table("GEOID,P\n37081000100,10\n37081000200,20\n", s1, "src1");
  auto t2 = parse_attribute_table("GEOID,P\n37081000100,11\n37081000200,21\n", s1, "src2");

  auto single = join_sources(b, {t1});
  CHECK(single.frame.rows() == 2);
  REQUIRE(single.report.unmatched.size() >= 1);
  bool found = false;
  for (const auto& [src, keys] : single.report.unmatched)
    for (const auto& k : keys) found |= k == "37081000300";
  CHECK(found);

  auto both = join_sources(b, {t1, t2});
  CHECK(both.frame.has_column("poverty_rate__src1"));
  CHECK(both.frame.has_column("poverty_rate__src2"));

  auto t3 = parse_attribute_table("GEOID,P\n37081999999,10\n", s1, "src3");
  CHECK_CODE(join_sources(b, {t3}), ErrorCode::EmptyJoin);
}

TEST_CASE("city subset") {
  using geo::rectangle;
  TractFrame frame({"inside", "corner", "straddle"});
  frame.set_geometry({rectangle(1, 1, 2, 2), rectangle(10, 10, 11, 11), rectangle(9, 5, 11, 6)});
  auto city = rectangle(0, 0, 10, 10);
  auto kept = subset_to_city(frame, city);
  REQUIRE(kept.rows() == 2);
  CHECK(kept.geoids()[0] == "inside");
  CHECK(kept.geoids()[1] == "straddle");
}

TEST_CASE("csv round trip") {
  auto t = csv::parse("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\r\n");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "he said \"hi\"");
  CHECK(csv::format_row({"x,1", "plain"}) == "\"x,1\",plain\n");
  CHECK(csv::format_number(0.1) == "0.1");
  CHECK(std::stod(csv::format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
