#include "vulnatlas/svg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "vulnatlas/csv.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/spatial.hpp"
#include "vulnatlas/stats.hpp"

namespace vulnatlas::svg {

namespace {

std::string num(double v) { return csv::format_fixed(v, 2); }

struct Frame2D {
  double min_x, min_y, scale, width, height, margin_top;
  double px(double x) const { return (x - min_x) * scale; }
  double py(double y) const { return margin_top + height - (y - min_y) * scale; }
};

std::vector<geo::MultiPolygon> planar(std::span<const geo::MultiPolygon> shapes) {
  std::vector<geo::MultiPolygon> out;
  out.reserve(shapes.size());
  for (const auto& s : shapes) {
    out.push_back(s.crs() == geo::Crs::Geographic_WGS84 ? geo::project_to_mercator(s) : s);
  }
  return out;
}

Frame2D fit_frame(const std::vector<geo::MultiPolygon>& shapes, double width, double margin_top) {
  if (shapes.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to draw");
  geo::BBox box = shapes.front().bounds();
  for (const auto& s : shapes) {
    const auto b = s.bounds();
    box.min_x = std::min(box.min_x, b.min_x);
    box.min_y = std::min(box.min_y, b.min_y);
    box.max_x = std::max(box.max_x, b.max_x);
    box.max_y = std::max(box.max_y, b.max_y);
  }
  const double span_x = std::max(box.max_x - box.min_x, 1e-9);
  const double scale = width / span_x;
  return {box.min_x, box.min_y, scale, width, (box.max_y - box.min_y) * scale, margin_top};
}

std::string path_data(const geo::MultiPolygon& shape, const Frame2D& f) {
  std::string d;
  auto ring = [&](const geo::Ring& r) {
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      d += (i == 0 ? "M" : "L") + num(f.px(r[i].x)) + " " + num(f.py(r[i].y));
    }
    d += "Z";
  };
  for (const auto& part : shape.parts()) {
    ring(part.exterior());
    for (const auto& h : part.holes()) ring(h);
  }
  return d;
}

void open_svg(std::ostringstream& out, double width, double height, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\" font-family=\"sans-serif\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) out << "<text x=\"10\" y=\"24\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
}

constexpr double kMapTop = 40.0;
constexpr double kLegendWidth = 220.0;

std::string map_with_legend(const std::vector<geo::MultiPolygon>& shapes, std::span<const std::string> ids,
                            const std::vector<std::string>& fills, const std::vector<Category>& legend,
                            const std::string& title, const std::string& notice, double width) {
  const Frame2D f = fit_frame(shapes, width, kMapTop);
  const double total_w = width + kLegendWidth;
  const double total_h = std::max(kMapTop + f.height + 20.0, kMapTop + 30.0 + 22.0 * static_cast<double>(legend.size()));
  std::ostringstream out;
  open_svg(out, total_w, total_h, title);
  out << "<g stroke=\"#555555\" stroke-width=\"0.5\" fill-rule=\"evenodd\">\n";
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    out << "<path id=\"t" << xml_escape(ids[i]) << "\" fill=\"" << fills[i] << "\" d=\"" << path_data(shapes[i], f)
        << "\"/>\n";
  }
  out << "</g>\n<g font-size=\"12\">\n";
  const double lx = width + 20.0;
  for (std::size_t c = 0; c < legend.size(); ++c) {
    const double y = kMapTop + 22.0 * static_cast<double>(c);
    out << "<rect class=\"legend\" x=\"" << num(lx) << "\" y=\"" << num(y) << "\" width=\"16\" height=\"16\" fill=\""
        << legend[c].color << "\" stroke=\"#555555\"/>";
    out << "<text x=\"" << num(lx + 24.0) << "\" y=\"" << num(y + 13.0) << "\">" << xml_escape(legend[c].label)
        << "</text>\n";
  }
  if (!notice.empty()) {
    out << "<text class=\"notice\" x=\"" << num(lx) << "\" y=\""
        << num(kMapTop + 22.0 * static_cast<double>(legend.size()) + 16.0) << "\">" << xml_escape(notice)
        << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> sequential_palette(std::size_t k) {
  static const std::vector<std::string> ylorrd{"#ffffcc", "#ffeda0", "#fed976", "#feb24c", "#fd8d3c",
                                               "#fc4e2a", "#e31a1c", "#bd0026", "#800026"};
  if (k == 0 || k > ylorrd.size()) throw Error(ErrorCode::InvalidArgument, "palette supports 1 to 9 classes");
  if (k == 1) return {ylorrd[4]};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(ylorrd[static_cast<std::size_t>(std::lround(static_cast<double>(i) * 8.0 / static_cast<double>(k - 1)))]);
  }
  return out;
}

std::string render_choropleth(std::span<const geo::MultiPolygon> shapes, std::span<const std::string> ids,
                              std::span<const double> values, const ChoroplethOptions& options) {
  if (shapes.size() != values.size() || ids.size() != values.size()) {
    throw Error(ErrorCode::RowMismatch, "shapes, ids and values differ in length");
  }
  const std::set<double> distinct(values.begin(), values.end());
  const std::size_t k = std::min(options.k_classes, distinct.size());
  std::string notice;
  if (distinct.size() == 1) {
    notice = "constant value, single class";
  } else if (k < options.k_classes) {
    notice = "only " + std::to_string(k) + " distinct values";
  }
  const auto jenks = spatial::fisher_jenks(values, k);
  const auto palette = sequential_palette(k);
  std::vector<std::string> fills;
  for (int l : jenks.labels) fills.push_back(palette[static_cast<std::size_t>(l)]);
  std::vector<Category> legend;
  for (std::size_t c = 0; c < k; ++c) {
    const double lo = c == 0 ? jenks.breaks[0] : jenks.breaks[c];
    legend.push_back({num(lo) + " to " + num(jenks.breaks[c + 1]), palette[c]});
  }
  return map_with_legend(planar(shapes), ids, fills, legend, options.title, notice, options.width);
}

std::string render_choropleth(const TractFrame& frame, std::string_view column, const ChoroplethOptions& options) {
  if (!frame.has_geometry()) throw Error(ErrorCode::InvalidGeometry, "frame has no geometry");
  const auto values = frame.complete_values(column);
  ChoroplethOptions o = options;
  if (o.title.empty()) o.title = std::string(column);
  return render_choropleth(frame.geometry(), frame.geoids(), values, o);
}

std::string render_categorical(std::span<const geo::MultiPolygon> shapes, std::span<const std::string> ids,
                               std::span<const int> assignment, std::span<const Category> categories,
                               const std::string& title, double width) {
  if (shapes.size() != assignment.size() || ids.size() != assignment.size()) {
    throw Error(ErrorCode::RowMismatch, "shapes, ids and assignments differ in length");
  }
  std::vector<std::string> fills;
  bool any_missing = false;
  for (int a : assignment) {
    if (a < 0) {
      fills.emplace_back("#d9d9d9");
      any_missing = true;
    } else if (static_cast<std::size_t>(a) >= categories.size()) {
      throw Error(ErrorCode::InvalidArgument, "assignment outside the category list");
    } else {
      fills.push_back(categories[static_cast<std::size_t>(a)].color);
    }
  }
  std::vector<Category> legend(categories.begin(), categories.end());
  if (any_missing) legend.push_back({"no data", "#d9d9d9"});
  return map_with_legend(planar(shapes), ids, fills, legend, title, "", width);
}

std::string render_scatter(std::span<const double> x, std::span<const double> y, const ScatterOptions& options) {
  if (x.size() != y.size()) throw Error(ErrorCode::RowMismatch, "x and y differ in length");
  const double r = stats::pearson_r(x, y);
  std::vector<double> fitted;
  if (options.lowess_overlay) fitted = stats::lowess(x, y, options.lowess_frac);

  const double left = 60.0, right = 20.0, top = 40.0, bottom = 50.0;
  const double pw = options.width - left - right;
  const double ph = options.height - top - bottom;
  auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  double x0 = *xmin_it, x1 = *xmax_it, y0 = *ymin_it, y1 = *ymax_it;
  for (double v : fitted) {
    y0 = std::min(y0, v);
    y1 = std::max(y1, v);
  }
  const double padx = (x1 - x0) * 0.05, pady = (y1 - y0) * 0.05;
  x0 -= padx; x1 += padx; y0 -= pady; y1 += pady;
  auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream out;
  open_svg(out, options.width, options.height, options.title);
  out << "<g stroke=\"#333333\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(top + ph) << "\"/>\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(top + ph) << "\"/>\n</g>\n<g font-size=\"11\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    const double yv = y0 + (y1 - y0) * t / 4.0;
    out << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 16.0) << "\" text-anchor=\"middle\">"
        << num(xv) << "</text>";
    out << "<text x=\"" << num(left - 6.0) << "\" y=\"" << num(sy(yv) + 4.0) << "\" text-anchor=\"end\">"
        << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << num(left + pw / 2.0) << "\" y=\"" << num(options.height - 10.0)
      << "\" text-anchor=\"middle\">" << xml_escape(options.x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << num(top + ph / 2.0) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num(top + ph / 2.0) << ")\">" << xml_escape(options.y_label) << "</text>\n";
  out << "<text class=\"annotation\" x=\"" << num(left + pw - 4.0) << "\" y=\"" << num(top + 14.0)
      << "\" text-anchor=\"end\" font-size=\"13\">r = " << num(r) << "</text>\n</g>\n";
  out << "<g fill=\"#2b6cb0\" fill-opacity=\"0.7\">\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << "<circle cx=\"" << num(sx(x[i])) << "\" cy=\"" << num(sy(y[i])) << "\" r=\"3\"/>\n";
  }
  out << "</g>\n";
  if (!fitted.empty()) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::string d;
    for (std::size_t i = 0; i < order.size(); ++i) {
      d += (i == 0 ? "M" : "L") + num(sx(x[order[i]])) + " " + num(sy(fitted[order[i]]));
    }
    out << "<path class=\"lowess\" fill=\"none\" stroke=\"#c53030\" stroke-width=\"2\" d=\"" << d << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace vulnatlas::svg
