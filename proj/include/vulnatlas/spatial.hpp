#pragma once

// Spatial autocorrelation on contiguity weights and natural-breaks classes.
//   I = (n / S0) * sum_ij w_ij (x_i - m)(x_j - m) / sum_i (x_i - m)^2

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/geomesh.hpp"

namespace vulnatlas::spatial {

enum class WeightMode { Binary, RowStandardized };

struct WeightEntry {
  std::size_t j;
  double w;
};

class SpatialWeights {
 public:
  SpatialWeights(const geo::NeighborGraph& graph, WeightMode mode);

  std::size_t size() const { return rows_.size(); }
  WeightMode mode() const { return mode_; }
  const std::vector<WeightEntry>& row(std::size_t i) const { return rows_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  double s0() const { return s0_; }
  const std::vector<std::size_t>& islands() const { return islands_; }
  bool is_island(std::size_t i) const { return rows_[i].empty(); }
  double weight(std::size_t i, std::size_t j) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<WeightEntry>> rows_;
  WeightMode mode_;
  double s0_ = 0.0;
  std::vector<std::size_t> islands_;
};

/// Throws ZeroVariance for constant input and AllIslands when fewer than two
/// tracts have neighbours.
double morans_i(std::span<const double> values, const SpatialWeights& w);

struct MoranTest {
  double i = 0.0;
  double expected = 0.0;  // -1/(n-1)
  double pseudo_p = 1.0;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  double perm_mean = 0.0;
  double perm_sd = 0.0;
  double perm_min = 0.0;
  double perm_max = 0.0;
  double z = 0.0;
};

/// One-sided permutation test toward the side of E[I] the observation falls on.
/// Replicate r shuffles with derive_seed(seed, r).
MoranTest morans_i_test(std::span<const double> values, const SpatialWeights& w, std::size_t permutations = 999,
                        std::uint64_t seed = 0, unsigned workers = 1);

enum class Quadrant { HH, LL, HL, LH, None };
std::string_view to_string(Quadrant q);

struct LisaResult {
  std::vector<double> local_i;
  std::vector<double> lag;  // sum_j w_ij z_j
  std::vector<Quadrant> quadrant;
  std::vector<double> pseudo_p;  // NaN for islands
  std::vector<bool> significant;
  std::vector<bool> evaluated;  // false for islands
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
};

/// Conditional permutation per tract: the tract's value stays, its neighbours
/// are drawn without replacement from the other n-1 values. p counts replicates
/// with |I_perm| >= |I_obs|; significant when p <= alpha.
LisaResult local_moran(std::span<const double> values, const SpatialWeights& w, std::size_t permutations = 999,
                       std::uint64_t seed = 0, double alpha = 0.05, unsigned workers = 1);

struct JenksResult {
  std::vector<double> breaks;  // k + 1 entries: min, class upper bounds
  std::vector<int> labels;     // per input value, 0..k-1 ascending
  double within_ss = 0.0;
};

/// Exact optimal contiguous partition of the sorted values into k classes.
JenksResult fisher_jenks(std::span<const double> values, std::size_t k);

/// Sum over classes of squared deviations from the class mean.
double within_class_ss(std::span<const double> values, std::span<const int> labels);

nlohmann::json to_json(const MoranTest& t);
MoranTest moran_test_from_json(const nlohmann::json& j);

}  // namespace vulnatlas::spatial
