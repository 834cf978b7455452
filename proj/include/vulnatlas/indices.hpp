#pragma once

// Flood exposure overlay and the composite vulnerability index:
//   flood_i = 100 * area(tract_i ∩ buffered flood) / area(tract_i)
//   H_i = mean of health indicators, S_i = mean of socioeconomic indicators
//   V_i = w_H * H_i + w_S * S_i

#include <span>
#include <string>
#include <vector>

#include "vulnatlas/frame.hpp"
#include "vulnatlas/geomesh.hpp"

namespace vulnatlas::indices {

struct Weights {
  double health = 0.6;
  double socio = 0.4;
};

/// Throws WeightSumInvalid unless both weights are positive and sum to 1 (1e-12).
void validate(const Weights& w);

struct IndexConfig {
  std::vector<std::string> health;
  std::vector<std::string> socio;
  Weights weights;
};

void validate(const IndexConfig& config);

/// Percent of the tract covered by an already buffered and dissolved flood region.
double flood_exposure(const geo::MultiPolygon& tract, const geo::Region& flood);
double flood_exposure(const geo::MultiPolygon& tract, const geo::MultiPolygon& flood_layer,
                      double buffer_m = 1.0);

/// Per-tract exposure, evaluated on up to `workers` threads. Each tract is
/// computed independently so the result does not depend on the worker count.
std::vector<double> flood_exposure_all(std::span<const geo::MultiPolygon> tracts,
                                       const geo::Region& flood, unsigned workers = 1);

/// Unweighted mean across normalized (0-100, higher = worse) indicator columns.
std::vector<double> domain_score(std::span<const NumericValues> columns);
std::vector<double> domain_score(const TractFrame& frame, std::span<const std::string> columns);

std::vector<double> composite_index(std::span<const double> health, std::span<const double> socio,
                                    const Weights& weights = {});

/// V >= 90th percentile (interpolated), ties included.
std::vector<bool> top_decile(std::span<const double> v);
/// Decile 1..10 where decile d means V >= the (d-1)/10 quantile; consistent with top_decile.
std::vector<int> deciles(std::span<const double> v);

struct VulnProfile {
  std::vector<std::string> geoids;
  std::vector<double> flood_exposure;
  std::vector<double> health;
  std::vector<double> socio;
  std::vector<double> composite;
  std::vector<int> decile;
  std::vector<bool> top_decile;
};

}  // namespace vulnatlas::indices
