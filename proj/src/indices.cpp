#include "vulnatlas/indices.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "vulnatlas/error.hpp"
#include "vulnatlas/preprocess.hpp"

namespace vulnatlas::indices {

void validate(const Weights& w) {
  if (!(w.health > 0.0 && w.socio > 0.0) || std::abs(w.health + w.socio - 1.0) > 1e-12) {
    throw Error(ErrorCode::WeightSumInvalid, "weights (" + std::to_string(w.health) + ", " +
                                                 std::to_string(w.socio) +
                                                 ") must be positive and sum to 1");
  }
}

void validate(const IndexConfig& config) {
  if (config.health.empty() || config.socio.empty()) {
    throw Error(ErrorCode::ConfigError, "health and socioeconomic indicator lists must be non-empty");
  }
  validate(config.weights);
}

double flood_exposure(const geo::MultiPolygon& tract, const geo::Region& flood) {
  const double total = geo::polygon_area(tract);
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroAreaTract, "tract has zero area");
  const double covered = flood.intersection_area(tract);
  return std::clamp(100.0 * covered / total, 0.0, 100.0);
}

double flood_exposure(const geo::MultiPolygon& tract, const geo::MultiPolygon& flood_layer,
                      double buffer_m) {
  const geo::Region region = geo::Region::buffered(std::span(&flood_layer, 1), buffer_m);
  return flood_exposure(tract, region);
}

std::vector<double> flood_exposure_all(std::span<const geo::MultiPolygon> tracts,
                                       const geo::Region& flood, unsigned workers) {
  std::vector<double> out(tracts.size());
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tracts.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tracts.size(); ++i) out[i] = flood_exposure(tracts[i], flood);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < tracts.size(); i += workers) out[i] = flood_exposure(tracts[i], flood);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

namespace {

template <typename Label>
std::vector<double> mean_of_columns(std::span<const NumericValues> columns, Label&& label) {
  if (columns.empty()) throw Error(ErrorCode::InvalidArgument, "domain score needs at least one column");
  const std::size_t n = columns.front().size();
  std::vector<double> sum(n, 0.0);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n) throw Error(ErrorCode::InvalidArgument, "columns differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = columns[c][i];
      if (!v) throw Error(ErrorCode::MissingValues, label(c) + " missing at row " + std::to_string(i));
      if (!(*v >= 0.0 && *v <= 100.0)) {
        throw Error(ErrorCode::UnnormalizedInput, label(c) + " has value " + std::to_string(*v));
      }
      sum[i] += *v;
    }
  }
  const double k = static_cast<double>(columns.size());
  for (double& s : sum) s /= k;
  return sum;
}

}  // namespace

std::vector<double> domain_score(std::span<const NumericValues> columns) {
  return mean_of_columns(columns, [](std::size_t c) { return "indicator " + std::to_string(c); });
}

std::vector<double> domain_score(const TractFrame& frame, std::span<const std::string> columns) {
  std::vector<NumericValues> cols;
  for (const auto& name : columns) cols.push_back(frame.column(name).numbers);
  return mean_of_columns(cols, [&](std::size_t c) { return "column '" + columns[c] + "'"; });
}

std::vector<double> composite_index(std::span<const double> health, std::span<const double> socio,
                                    const Weights& weights) {
  validate(weights);
  if (health.size() != socio.size()) throw Error(ErrorCode::InvalidArgument, "H and S differ in length");
  std::vector<double> v(health.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(health[i] >= 0.0 && health[i] <= 100.0 && socio[i] >= 0.0 && socio[i] <= 100.0)) {
      throw Error(ErrorCode::UnnormalizedInput, "H/S outside [0, 100] at row " + std::to_string(i));
    }
    v[i] = weights.health * health[i] + weights.socio * socio[i];
  }
  return v;
}

std::vector<bool> top_decile(std::span<const double> v) {
  if (v.size() < 10) throw Error(ErrorCode::TooFewTracts, "top decile needs at least 10 tracts");
  const double cutoff = prep::quantile(v, 0.9);
  std::vector<bool> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] >= cutoff;
  return out;
}

std::vector<int> deciles(std::span<const double> v) {
  if (v.size() < 10) throw Error(ErrorCode::TooFewTracts, "deciles need at least 10 tracts");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cut;
  for (int d = 1; d <= 9; ++d) cut.push_back(prep::quantile_sorted(sorted, d / 10.0));
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = 1 + static_cast<int>(std::count_if(cut.begin(), cut.end(), [&](double c) { return v[i] >= c; }));
  }
  return out;
}

}  // namespace vulnatlas::indices
