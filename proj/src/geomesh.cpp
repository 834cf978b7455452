#include "vulnatlas/geomesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "vulnatlas/error.hpp"

namespace vulnatlas::geo {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, /*ClockWise=*/false, /*Closed=*/true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

namespace {

double signed_ring_area(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return 0.5 * twice;
}

void close_ring(Ring& ring) {
  if (!ring.empty() && ring.front() != ring.back()) ring.push_back(ring.front());
}

void check_finite(const Ring& ring) {
  for (const auto& p : ring) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::InvalidGeometry, "non-finite coordinate in ring");
    }
  }
}

BBox ring_bounds(const Ring& ring) {
  BBox b{ring.front().x, ring.front().y, ring.front().x, ring.front().y};
  for (const auto& p : ring) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

void require_projected(const MultiPolygon& p) {
  if (p.crs() != Crs::Projected_WebMercator) {
    throw Error(ErrorCode::NotProjected, "operation requires Web Mercator coordinates");
  }
}

BPolygon to_boost(const GeoPolygon& p) {
  BPolygon out;
  for (const auto& q : p.exterior()) out.outer().emplace_back(q.x, q.y);
  for (const auto& hole : p.holes()) {
    out.inners().emplace_back();
    for (const auto& q : hole) out.inners().back().emplace_back(q.x, q.y);
  }
  return out;
}

Ring from_boost_ring(const auto& ring) {
  Ring out;
  out.reserve(ring.size());
  for (const auto& q : ring) out.push_back({q.x(), q.y()});
  return out;
}

bool has_area(const GeoPolygon& p) { return std::abs(signed_ring_area(p.exterior())) > 0.0; }

// Union of all positive-area parts. Zero-area slivers contribute nothing.
BMulti dissolve_parts(std::span<const MultiPolygon> layers) {
  BMulti acc;
  for (const auto& layer : layers) {
    for (const auto& part : layer.parts()) {
      if (!has_area(part)) continue;
      BPolygon poly = to_boost(part);
      bg::correct(poly);
      if (acc.empty()) {
        acc.push_back(std::move(poly));
        continue;
      }
      BMulti merged;
      bg::union_(acc, poly, merged);
      acc = std::move(merged);
    }
  }
  return acc;
}

BMulti dissolve_one(const MultiPolygon& p) { return dissolve_parts(std::span(&p, 1)); }

BMulti buffer_multi(const BMulti& in, double radius) {
  namespace sb = bg::strategy::buffer;
  constexpr int kPointsPerCircle = 64;  // 16 per quadrant
  sb::distance_symmetric<double> distance(radius);
  sb::join_round join(kPointsPerCircle);
  sb::end_round end(kPointsPerCircle);
  sb::point_circle circle(kPointsPerCircle);
  sb::side_straight side;
  BMulti out;
  bg::buffer(in, out, distance, side, join, end, circle);
  return out;
}

MultiPolygon to_multipolygon(const BMulti& m) {
  std::vector<GeoPolygon> parts;
  for (const auto& poly : m) {
    std::vector<Ring> holes;
    for (const auto& inner : poly.inners()) holes.push_back(from_boost_ring(inner));
    parts.emplace_back(from_boost_ring(poly.outer()), std::move(holes),
                       Crs::Projected_WebMercator);
  }
  if (parts.empty()) throw Error(ErrorCode::InvalidGeometry, "empty polygon set");
  return MultiPolygon(std::move(parts));
}

// Deterministic total order used to make overlay symmetric bit-for-bit.
bool canonical_less(const MultiPolygon& a, const MultiPolygon& b) {
  auto flatten = [](const MultiPolygon& m) {
    std::vector<double> out;
    for (const auto& part : m.parts()) {
      out.push_back(static_cast<double>(part.exterior().size()));
      for (const auto& q : part.exterior()) {
        out.push_back(q.x);
        out.push_back(q.y);
      }
      for (const auto& hole : part.holes()) {
        out.push_back(static_cast<double>(hole.size()));
        for (const auto& q : hole) {
          out.push_back(q.x);
          out.push_back(q.y);
        }
      }
    }
    return out;
  };
  return flatten(a) < flatten(b);
}

}  // namespace

GeoPolygon::GeoPolygon(Ring exterior, std::vector<Ring> holes, Crs crs)
    : exterior_(std::move(exterior)), holes_(std::move(holes)), crs_(crs) {
  check_finite(exterior_);
  close_ring(exterior_);
  if (exterior_.size() < 4) {
    throw Error(ErrorCode::InvalidGeometry, "exterior ring needs at least 4 points");
  }
  if (signed_ring_area(exterior_) < 0.0) std::reverse(exterior_.begin(), exterior_.end());
  const BBox outer = ring_bounds(exterior_);
  for (auto& hole : holes_) {
    check_finite(hole);
    close_ring(hole);
    if (hole.size() < 4) throw Error(ErrorCode::InvalidGeometry, "hole needs at least 4 points");
    const BBox hb = ring_bounds(hole);
    if (hb.min_x < outer.min_x || hb.min_y < outer.min_y || hb.max_x > outer.max_x ||
        hb.max_y > outer.max_y) {
      throw Error(ErrorCode::InvalidGeometry, "hole extends outside the exterior bounding box");
    }
    if (signed_ring_area(hole) > 0.0) std::reverse(hole.begin(), hole.end());
  }
}

BBox GeoPolygon::bounds() const { return ring_bounds(exterior_); }

std::size_t GeoPolygon::vertex_count() const {
  std::size_t n = exterior_.size();
  for (const auto& h : holes_) n += h.size();
  return n;
}

MultiPolygon::MultiPolygon(std::vector<GeoPolygon> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error(ErrorCode::InvalidGeometry, "multipolygon has no parts");
  for (const auto& p : parts_) {
    if (p.crs() != parts_.front().crs()) {
      throw Error(ErrorCode::CrsMismatch, "multipolygon parts use different CRS tags");
    }
  }
}

MultiPolygon::MultiPolygon(GeoPolygon part) : MultiPolygon(std::vector<GeoPolygon>{std::move(part)}) {}

BBox MultiPolygon::bounds() const {
  BBox b = parts_.front().bounds();
  for (const auto& p : parts_) {
    const BBox pb = p.bounds();
    b.min_x = std::min(b.min_x, pb.min_x);
    b.min_y = std::min(b.min_y, pb.min_y);
    b.max_x = std::max(b.max_x, pb.max_x);
    b.max_y = std::max(b.max_y, pb.max_y);
  }
  return b;
}

std::size_t MultiPolygon::vertex_count() const {
  std::size_t n = 0;
  for (const auto& p : parts_) n += p.vertex_count();
  return n;
}

MultiPolygon rectangle(double min_x, double min_y, double max_x, double max_y, Crs crs) {
  return MultiPolygon(GeoPolygon(
      {{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}, {min_x, min_y}}, {},
      crs));
}

Point project_point(double lon_deg, double lat_deg) {
  if (!(std::abs(lat_deg) < kMaxLatitude)) {
    throw Error(ErrorCode::LatitudeOutOfRange,
                "latitude " + std::to_string(lat_deg) + " outside (-85.06, 85.06)");
  }
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double lambda = lon_deg * kDeg;
  const double phi = lat_deg * kDeg;
  return {kEarthRadius * lambda, kEarthRadius * std::log(std::tan(std::numbers::pi / 4.0 + phi / 2.0))};
}

Point unproject_point(const Point& projected) {
  constexpr double kRad = 180.0 / std::numbers::pi;
  const double lambda = projected.x / kEarthRadius;
  const double phi = 2.0 * std::atan(std::exp(projected.y / kEarthRadius)) - std::numbers::pi / 2.0;
  return {lambda * kRad, phi * kRad};
}

namespace {

template <typename F>
GeoPolygon map_polygon(const GeoPolygon& p, Crs target, F&& f) {
  auto map_ring = [&](const Ring& ring) {
    Ring out;
    out.reserve(ring.size());
    for (const auto& q : ring) out.push_back(f(q));
    return out;
  };
  std::vector<Ring> holes;
  for (const auto& h : p.holes()) holes.push_back(map_ring(h));
  return GeoPolygon(map_ring(p.exterior()), std::move(holes), target);
}

}  // namespace

GeoPolygon project_to_mercator(const GeoPolygon& p) {
  if (p.crs() != Crs::Geographic_WGS84) {
    throw Error(ErrorCode::AlreadyProjected, "polygon is already in Web Mercator");
  }
  return map_polygon(p, Crs::Projected_WebMercator,
                     [](const Point& q) { return project_point(q.x, q.y); });
}

MultiPolygon project_to_mercator(const MultiPolygon& p) {
  std::vector<GeoPolygon> parts;
  for (const auto& part : p.parts()) parts.push_back(project_to_mercator(part));
  return MultiPolygon(std::move(parts));
}

GeoPolygon unproject_from_mercator(const GeoPolygon& p) {
  if (p.crs() != Crs::Projected_WebMercator) {
    throw Error(ErrorCode::NotProjected, "polygon is not in Web Mercator");
  }
  return map_polygon(p, Crs::Geographic_WGS84, unproject_point);
}

MultiPolygon unproject_from_mercator(const MultiPolygon& p) {
  std::vector<GeoPolygon> parts;
  for (const auto& part : p.parts()) parts.push_back(unproject_from_mercator(part));
  return MultiPolygon(std::move(parts));
}

double polygon_area(const MultiPolygon& p) {
  require_projected(p);
  double total = 0.0;
  for (const auto& part : p.parts()) {
    double a = std::abs(signed_ring_area(part.exterior()));
    for (const auto& hole : part.holes()) a -= std::abs(signed_ring_area(hole));
    total += std::max(a, 0.0);
  }
  return total;
}

MultiPolygon buffer(const MultiPolygon& p, double radius) {
  require_projected(p);
  if (radius < 0.0 || !std::isfinite(radius)) {
    throw Error(ErrorCode::NegativeRadius, "buffer radius must be >= 0");
  }
  if (radius == 0.0) return p;
  BMulti dissolved = dissolve_one(p);
  if (dissolved.empty()) return p;  // only slivers; nothing to dilate
  return to_multipolygon(buffer_multi(dissolved, radius));
}

double intersection_area(const MultiPolygon& a, const MultiPolygon& b) {
  if (a.crs() != b.crs()) throw Error(ErrorCode::CrsMismatch, "operands use different CRS tags");
  require_projected(a);
  const MultiPolygon* lhs = &a;
  const MultiPolygon* rhs = &b;
  if (canonical_less(b, a)) std::swap(lhs, rhs);
  const BBox ba = lhs->bounds();
  const BBox bb = rhs->bounds();
  if (!ba.intersects(bb)) return 0.0;
  BMulti da = dissolve_one(*lhs);
  BMulti db = dissolve_one(*rhs);
  if (da.empty() || db.empty()) return 0.0;
  BMulti out;
  bg::intersection(da, db, out);
  return std::max(0.0, bg::area(out));
}

bool covers(const MultiPolygon& p, const Point& q) {
  BMulti m;
  for (const auto& part : p.parts()) m.push_back(to_boost(part));
  return bg::covered_by(BPoint(q.x, q.y), m);
}

struct Region::Impl {
  BMulti geometry;
  double area = 0.0;
  BBox bounds{0, 0, 0, 0};
};

namespace {

std::shared_ptr<const Region::Impl> make_impl(BMulti geometry) {
  auto impl = std::make_shared<Region::Impl>();
  impl->area = bg::area(geometry);
  if (!geometry.empty()) {
    auto env = bg::return_envelope<bg::model::box<BPoint>>(geometry);
    impl->bounds = {env.min_corner().x(), env.min_corner().y(), env.max_corner().x(),
                    env.max_corner().y()};
  }
  impl->geometry = std::move(geometry);
  return impl;
}

}  // namespace

Region::Region() : impl_(make_impl(BMulti{})) {}

Region Region::dissolve(std::span<const MultiPolygon> layers) {
  for (const auto& l : layers) require_projected(l);
  return Region(make_impl(dissolve_parts(layers)));
}

Region Region::buffered(std::span<const MultiPolygon> layers, double radius) {
  if (radius < 0.0 || !std::isfinite(radius)) {
    throw Error(ErrorCode::NegativeRadius, "buffer radius must be >= 0");
  }
  for (const auto& l : layers) require_projected(l);
  BMulti dissolved = dissolve_parts(layers);
  if (radius == 0.0 || dissolved.empty()) return Region(make_impl(std::move(dissolved)));
  return Region(make_impl(buffer_multi(dissolved, radius)));
}

double Region::area() const { return impl_->area; }
bool Region::empty() const { return impl_->geometry.empty(); }
std::size_t Region::part_count() const { return impl_->geometry.size(); }

double Region::intersection_area(const MultiPolygon& other) const {
  require_projected(other);
  if (empty() || !other.bounds().intersects(impl_->bounds)) return 0.0;
  BMulti d = dissolve_one(other);
  if (d.empty()) return 0.0;
  BMulti out;
  bg::intersection(d, impl_->geometry, out);
  return std::max(0.0, bg::area(out));
}

MultiPolygon Region::to_multipolygon() const { return geo::to_multipolygon(impl_->geometry); }

}  // namespace vulnatlas::geo
