#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "vulnatlas/geomesh.hpp"

using namespace vulnatlas;
using namespace vulnatlas::geo;

namespace {

GeoPolygon square(double x0, double y0, double side) {
  return GeoPolygon({{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}}, {},
                    Crs::Projected_WebMercator);
}

}  // namespace

TEST_CASE("mercator projection") {
  auto origin = project_point(0.0, 0.0);
  CHECK(origin.x == doctest::Approx(0.0));
  CHECK(origin.y == doctest::Approx(0.0));

  auto east = project_point(180.0, 0.0);
  CHECK(std::abs(east.x - 20037508.3428) < 1e-3);
  CHECK(std::abs(east.y) < 1e-6);

  // mpmath, 30 digits: R * ln(tan(pi/4 + phi/2)) at phi = 85.051129 deg
  auto north = project_point(0.0, 85.051129);
  CHECK(std::abs(north.y - 20037508.62692909848) < 1e-3);
  CHECK(std::abs(north.y - 20037508.34) <= 1.0);

  auto back = unproject_point(project_point(-79.79, 36.07));
  CHECK(back.x == doctest::Approx(-79.79).epsilon(1e-12));
  CHECK(back.y == doctest::Approx(36.07).epsilon(1e-12));
}

TEST_CASE("projection errors") {
  GeoPolygon polar({{0, 80}, {1, 80}, {1, 86}, {0, 86}}, {}, Crs::Geographic_WGS84);
  CHECK_CODE(project_to_mercator(polar), ErrorCode::LatitudeOutOfRange);
  CHECK_CODE(project_to_mercator(square(0, 0, 1)), ErrorCode::AlreadyProjected);
  GeoPolygon geographic({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {}, Crs::Geographic_WGS84);
  CHECK_CODE(polygon_area(MultiPolygon(geographic)), ErrorCode::NotProjected);
}

TEST_CASE("polygon area") {
  CHECK(polygon_area(MultiPolygon(square(0, 0, 1))) == doctest::Approx(1.0));
  GeoPolygon holed({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}}},
                   Crs::Projected_WebMercator);
  CHECK(polygon_area(MultiPolygon(holed)) == doctest::Approx(0.75));
  GeoPolygon reversed({{0, 1}, {1, 1}, {1, 0}, {0, 0}}, {}, Crs::Projected_WebMercator);
  CHECK(polygon_area(MultiPolygon(reversed)) == doctest::Approx(1.0));
}

TEST_CASE("buffer") {
  MultiPolygon sq(square(0, 0, 1));
  CHECK(buffer(sq, 0.0) == sq);
  double analytic = 1.0 + 4.0 + std::numbers::pi;
  double area = polygon_area(buffer(sq, 1.0));
  CHECK(std::abs(area - analytic) / analytic < 0.005);
  CHECK_CODE(buffer(sq, -1.0), ErrorCode::NegativeRadius);

  MultiPolygon pair(std::vector<GeoPolygon>{square(0, 0, 1), square(1.5, 0, 1)});
  auto merged = buffer(pair, 1.0);
  CHECK(merged.size() == 1);
  for (double x = 0.0; x <= 2.5; x += 0.05) CHECK(covers(merged, {x, 0.5}));
}

TEST_CASE("intersection area") {
  MultiPolygon a(square(0, 0, 1));
  CHECK(intersection_area(a, MultiPolygon(square(0.5, 0.5, 1))) == doctest::Approx(0.25));
  CHECK(intersection_area(a, MultiPolygon(square(5, 5, 1))) == 0.0);
  CHECK(intersection_area(a, a) == doctest::Approx(1.0));
  GeoPolygon geographic({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {}, Crs::Geographic_WGS84);
  CHECK_CODE(intersection_area(a, MultiPolygon(geographic)), ErrorCode::CrsMismatch);
}

TEST_CASE("region dissolves overlapping parts") {
  std::vector<MultiPolygon> layers{MultiPolygon(square(0, 0, 2)), MultiPolygon(square(1, 0, 2))};
  auto region = Region::dissolve(layers);
  CHECK(region.area() == doctest::Approx(6.0));
  CHECK(region.intersection_area(MultiPolygon(square(0, 0, 3))) == doctest::Approx(6.0));
  CHECK(Region().empty());
}

TEST_CASE("contiguity") {
  SUBCASE("2x2 queen") {
    std::map<std::string, MultiPolygon> grid{{"a", square(0, 0, 1)}, {"b", square(1, 0, 1)},
                                             {"c", square(0, 1, 1)}, {"d", square(1, 1, 1)}};
    auto g = build_contiguity(grid, ContiguityRule::Queen);
    for (const auto& row : g.adjacency) CHECK(row.size() == 3);
    CHECK(g.is_symmetric());
    auto rook = build_contiguity(grid, ContiguityRule::Rook);
    for (const auto& row : rook.adjacency) CHECK(row.size() == 2);
  }
  SUBCASE("1x3 rook strip") {
    std::map<std::string, MultiPolygon> strip{
        {"1", square(0, 0, 1)}, {"2", square(1, 0, 1)}, {"3", square(2, 0, 1)}};
    auto g = build_contiguity(strip, ContiguityRule::Rook);
    CHECK(g.adjacency[0].size() == 1);
    CHECK(g.adjacency[1].size() == 2);
    CHECK(g.adjacency[2].size() == 1);
  }
  SUBCASE("island") {
    std::map<std::string, MultiPolygon> two{{"a", square(0, 0, 1)}, {"b", square(10, 10, 1)}};
    auto g = build_contiguity(two, ContiguityRule::Queen);
    CHECK(g.adjacency[1].empty());
    CHECK(g.has_islands());
    CHECK(g.islands().size() == 2);
  }
  SUBCASE("shared edge split by an extra vertex") {
    GeoPolygon left({{0, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0, 1}}, {}, Crs::Projected_WebMercator);
    std::map<std::string, MultiPolygon> two{{"a", left}, {"b", square(1, 0, 1)}};
    auto g = build_contiguity(two, ContiguityRule::Rook);
    CHECK(g.adjacency[0].size() == 1);
  }
}
