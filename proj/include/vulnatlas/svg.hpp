#pragma once

// Deterministic SVG plots: choropleth maps classed by natural breaks,
// categorical maps and scatter plots with an optional LOWESS curve.

#include <span>
#include <string>
#include <vector>

#include "vulnatlas/frame.hpp"
#include "vulnatlas/geomesh.hpp"

namespace vulnatlas::svg {

struct ChoroplethOptions {
  std::size_t k_classes = 5;
  std::string title;
  double width = 800.0;
};

/// One <path> per tract; fills from Fisher-Jenks classes. A column with fewer
/// distinct values than classes is drawn with fewer classes and a notice.
std::string render_choropleth(std::span<const geo::MultiPolygon> shapes, std::span<const std::string> ids,
                              std::span<const double> values, const ChoroplethOptions& options = {});
std::string render_choropleth(const TractFrame& frame, std::string_view column,
                              const ChoroplethOptions& options = {});

struct Category {
  std::string label;
  std::string color;
};

/// `assignment[i]` indexes `categories`; -1 draws the tract as no data.
std::string render_categorical(std::span<const geo::MultiPolygon> shapes, std::span<const std::string> ids,
                               std::span<const int> assignment, std::span<const Category> categories,
                               const std::string& title, double width = 800.0);

struct ScatterOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool lowess_overlay = true;
  double lowess_frac = 0.3;
  double width = 640.0;
  double height = 480.0;
};

/// Points, an annotated Pearson r and, when enabled, the LOWESS curve as a
/// single <path class="lowess">.
std::string render_scatter(std::span<const double> x, std::span<const double> y, const ScatterOptions& options = {});

/// Sequential palette of `k` colours from light to dark.
std::vector<std::string> sequential_palette(std::size_t k);

std::string xml_escape(std::string_view text);

}  // namespace vulnatlas::svg
