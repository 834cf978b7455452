#include <algorithm>
#include <cmath>
#include <cstdint>

#include "vulnatlas/error.hpp"
#include "vulnatlas/geomesh.hpp"

namespace vulnatlas::geo {

namespace {

using i128 = __int128;

struct QPoint {
  std::int64_t x, y;
  bool operator==(const QPoint&) const = default;
};

struct QEdge {
  QPoint a, b;
  std::int64_t min_x, min_y, max_x, max_y;
};

struct QBox {
  std::int64_t min_x, min_y, max_x, max_y;
  bool touches(const QBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
};

QPoint quantize(const Point& p) {
  return {std::llround(p.x / kSnapTolerance), std::llround(p.y / kSnapTolerance)};
}

struct TractEdges {
  std::vector<QEdge> edges;
  QBox box{0, 0, 0, 0};
};

TractEdges collect_edges(const MultiPolygon& m) {
  TractEdges out;
  bool first = true;
  auto add_ring = [&](const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      QPoint a = quantize(ring[i]);
      QPoint b = quantize(ring[i + 1]);
      if (a == b) continue;
      QEdge e{a, b, std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
      if (first) {
        out.box = {e.min_x, e.min_y, e.max_x, e.max_y};
        first = false;
      } else {
        out.box.min_x = std::min(out.box.min_x, e.min_x);
        out.box.min_y = std::min(out.box.min_y, e.min_y);
        out.box.max_x = std::max(out.box.max_x, e.max_x);
        out.box.max_y = std::max(out.box.max_y, e.max_y);
      }
      out.edges.push_back(e);
    }
  };
  for (const auto& part : m.parts()) {
    add_ring(part.exterior());
    for (const auto& h : part.holes()) add_ring(h);
  }
  return out;
}

int orientation(const QPoint& a, const QPoint& b, const QPoint& c) {
  const i128 v = static_cast<i128>(b.x - a.x) * (c.y - a.y) - static_cast<i128>(b.y - a.y) * (c.x - a.x);
  return (v > 0) - (v < 0);
}

bool on_segment(const QEdge& e, const QPoint& p) {
  return p.x >= e.min_x && p.x <= e.max_x && p.y >= e.min_y && p.y <= e.max_y;
}

enum class Contact { None, Point, Segment };

Contact edge_contact(const QEdge& e, const QEdge& f) {
  if (e.max_x < f.min_x || f.max_x < e.min_x || e.max_y < f.min_y || f.max_y < e.min_y) {
    return Contact::None;
  }
  const int o1 = orientation(e.a, e.b, f.a);
  const int o2 = orientation(e.a, e.b, f.b);
  if (o1 == 0 && o2 == 0) {
    // Collinear: measure the overlap along the dominant axis.
    const bool use_x = (e.max_x - e.min_x) >= (e.max_y - e.min_y);
    const std::int64_t lo = use_x ? std::max(e.min_x, f.min_x) : std::max(e.min_y, f.min_y);
    const std::int64_t hi = use_x ? std::min(e.max_x, f.max_x) : std::min(e.max_y, f.max_y);
    if (hi > lo) return Contact::Segment;
    if (hi == lo) return Contact::Point;
    return Contact::None;
  }
  const int o3 = orientation(f.a, f.b, e.a);
  const int o4 = orientation(f.a, f.b, e.b);
  if (o1 != o2 && o3 != o4) return Contact::Point;
  if (o1 == 0 && on_segment(e, f.a)) return Contact::Point;
  if (o2 == 0 && on_segment(e, f.b)) return Contact::Point;
  if (o3 == 0 && on_segment(f, e.a)) return Contact::Point;
  if (o4 == 0 && on_segment(f, e.b)) return Contact::Point;
  return Contact::None;
}

std::vector<const QEdge*> edges_near(const TractEdges& t, const QBox& box) {
  std::vector<const QEdge*> out;
  for (const auto& e : t.edges) {
    if (QBox{e.min_x, e.min_y, e.max_x, e.max_y}.touches(box)) out.push_back(&e);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> NeighborGraph::islands() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    if (adjacency[i].empty()) out.push_back(i);
  }
  return out;
}

bool NeighborGraph::is_symmetric() const {
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    for (std::size_t j : adjacency[i]) {
      if (j == i) return false;
      if (!std::binary_search(adjacency[j].begin(), adjacency[j].end(), i)) return false;
    }
  }
  return true;
}

NeighborGraph build_contiguity(std::span<const std::string> ids,
                               std::span<const MultiPolygon> geometries, ContiguityRule rule) {
  if (ids.size() != geometries.size()) {
    throw Error(ErrorCode::InvalidArgument, "ids and geometries differ in length");
  }
  if (ids.size() < 2) throw Error(ErrorCode::InvalidArgument, "contiguity needs at least 2 tracts");
  std::vector<TractEdges> tracts;
  tracts.reserve(geometries.size());
  for (const auto& g : geometries) {
    if (g.crs() != Crs::Projected_WebMercator) {
      throw Error(ErrorCode::NotProjected, "contiguity requires projected geometries");
    }
    tracts.push_back(collect_edges(g));
  }

  NeighborGraph graph;
  graph.node_ids.assign(ids.begin(), ids.end());
  graph.adjacency.resize(ids.size());
  graph.rule = rule;

  for (std::size_t i = 0; i < tracts.size(); ++i) {
    for (std::size_t j = i + 1; j < tracts.size(); ++j) {
      if (tracts[i].edges.empty() || tracts[j].edges.empty()) continue;
      if (!tracts[i].box.touches(tracts[j].box)) continue;
      const auto ei = edges_near(tracts[i], tracts[j].box);
      const auto ej = edges_near(tracts[j], tracts[i].box);
      bool linked = false;
      for (const QEdge* e : ei) {
        for (const QEdge* f : ej) {
          const Contact c = edge_contact(*e, *f);
          if (c == Contact::Segment || (c == Contact::Point && rule == ContiguityRule::Queen)) {
            linked = true;
            break;
          }
        }
        if (linked) break;
      }
      if (linked) {
        graph.adjacency[i].push_back(j);
        graph.adjacency[j].push_back(i);
      }
    }
  }
  for (auto& adj : graph.adjacency) std::sort(adj.begin(), adj.end());
  return graph;
}

NeighborGraph build_contiguity(const std::map<std::string, MultiPolygon>& tracts,
                               ContiguityRule rule) {
  std::vector<std::string> ids;
  std::vector<MultiPolygon> geoms;
  for (const auto& [id, g] : tracts) {
    ids.push_back(id);
    geoms.push_back(g);
  }
  return build_contiguity(ids, geoms, rule);
}

}  // namespace vulnatlas::geo
