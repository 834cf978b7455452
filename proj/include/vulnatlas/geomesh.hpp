#pragma once

// Planar geometry kernel: Web Mercator projection, areas, buffering,
// polygon overlay and contiguity detection over tract polygons.

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vulnatlas::geo {

enum class Crs { Geographic_WGS84, Projected_WebMercator };

inline constexpr double kEarthRadius = 6378137.0;
inline constexpr double kMaxLatitude = 85.06;

struct Point {
  double x = 0.0;
  double y = 0.0;
  auto operator<=>(const Point&) const = default;
};

using Ring = std::vector<Point>;

struct BBox {
  double min_x, min_y, max_x, max_y;
  bool intersects(const BBox& other) const {
    return min_x <= other.max_x && other.min_x <= max_x && min_y <= other.max_y &&
           other.min_y <= max_y;
  }
};

/// Polygon with optional holes. Rings are closed on construction and
/// reoriented so the exterior runs counter-clockwise and holes clockwise.
class GeoPolygon {
 public:
  GeoPolygon(Ring exterior, std::vector<Ring> holes, Crs crs);

  const Ring& exterior() const { return exterior_; }
  const std::vector<Ring>& holes() const { return holes_; }
  Crs crs() const { return crs_; }
  BBox bounds() const;
  std::size_t vertex_count() const;

  bool operator==(const GeoPolygon&) const = default;

 private:
  Ring exterior_;
  std::vector<Ring> holes_;
  Crs crs_;
};

class MultiPolygon {
 public:
  explicit MultiPolygon(std::vector<GeoPolygon> parts);
  MultiPolygon(GeoPolygon part);  // NOLINT(google-explicit-constructor)

  const std::vector<GeoPolygon>& parts() const { return parts_; }
  Crs crs() const { return parts_.front().crs(); }
  std::size_t size() const { return parts_.size(); }
  BBox bounds() const;
  std::size_t vertex_count() const;

  bool operator==(const MultiPolygon&) const = default;

 private:
  std::vector<GeoPolygon> parts_;
};

/// Axis-aligned rectangle as a single-part polygon.
MultiPolygon rectangle(double min_x, double min_y, double max_x, double max_y,
                       Crs crs = Crs::Projected_WebMercator);

Point project_point(double lon_deg, double lat_deg);
Point unproject_point(const Point& projected);

GeoPolygon project_to_mercator(const GeoPolygon& p);
MultiPolygon project_to_mercator(const MultiPolygon& p);
GeoPolygon unproject_from_mercator(const GeoPolygon& p);
MultiPolygon unproject_from_mercator(const MultiPolygon& p);

/// Shoelace area of exteriors minus holes, summed over parts.
double polygon_area(const MultiPolygon& p);

/// Minkowski dilation with round joins (16 segments per quarter circle).
MultiPolygon buffer(const MultiPolygon& p, double radius);

/// Area of a ∩ b. Overlapping parts inside one operand are dissolved first.
double intersection_area(const MultiPolygon& a, const MultiPolygon& b);

bool covers(const MultiPolygon& p, const Point& q);

/// Dissolved (union of all parts) polygon set prepared for repeated
/// overlays, e.g. a flood layer intersected with every tract.
class Region {
 public:
  Region();
  static Region dissolve(std::span<const MultiPolygon> layers);
  static Region buffered(std::span<const MultiPolygon> layers, double radius);

  double area() const;
  bool empty() const;
  std::size_t part_count() const;
  double intersection_area(const MultiPolygon& other) const;
  MultiPolygon to_multipolygon() const;  // throws InvalidGeometry when empty

  struct Impl;

 private:
  explicit Region(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

enum class ContiguityRule { Queen, Rook };

inline constexpr double kSnapTolerance = 1e-6;

struct NeighborGraph {
  std::vector<std::string> node_ids;
  std::vector<std::vector<std::size_t>> adjacency;  // sorted, no self loops
  ContiguityRule rule = ContiguityRule::Queen;

  std::size_t size() const { return node_ids.size(); }
  std::vector<std::size_t> islands() const;
  bool has_islands() const { return !islands().empty(); }
  bool is_symmetric() const;
};

NeighborGraph build_contiguity(std::span<const std::string> ids,
                               std::span<const MultiPolygon> geometries, ContiguityRule rule);
NeighborGraph build_contiguity(const std::map<std::string, MultiPolygon>& tracts,
                               ContiguityRule rule);

}  // namespace vulnatlas::geo
