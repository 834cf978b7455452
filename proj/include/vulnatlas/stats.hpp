#pragma once

// Correlation, multicollinearity, smoothing and group-comparison statistics.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/frame.hpp"

namespace vulnatlas::stats {

double pearson_r(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<std::size_t>> n_pairs;
  std::vector<std::vector<std::string>> reasons;  // empty when the cell is defined
  /// Display order from average-linkage clustering on 1 - r (identity if unordered).
  std::vector<std::size_t> order;
};

/// Pairwise-complete Pearson correlations.
CorrelationMatrix correlation_matrix(std::span<const NumericValues> columns,
                                     std::vector<std::string> labels, bool cluster_order = true);
CorrelationMatrix correlation_matrix(const TractFrame& frame, std::span<const std::string> columns,
                                     bool cluster_order = true);

enum class TestKind { WelchT, ChiSquare };

struct GroupComparison {
  std::string variable;
  TestKind kind = TestKind::WelchT;
  std::optional<double> mean_high;  // welch only
  std::optional<double> mean_rest;
  std::size_t n_high = 0;
  std::size_t n_rest = 0;
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

GroupComparison welch_t(std::span<const double> a, std::span<const double> b);
GroupComparison chi_square(const std::vector<std::vector<double>>& observed);

struct VifResult {
  std::string predictor;
  double value = 1.0;  // +inf when perfectly collinear
  bool infinite = false;
};

std::vector<VifResult> vif(std::span<const std::vector<double>> predictors,
                           std::span<const std::string> names);
std::vector<VifResult> vif(const TractFrame& frame, std::span<const std::string> predictors);

/// Local linear regression with tricube weights over the frac * n nearest neighbours.
std::vector<double> lowess(std::span<const double> x, std::span<const double> y, double frac = 0.3);

struct EjOutcome {
  std::string variable;
  std::optional<GroupComparison> comparison;
  std::string skipped_reason;
};

/// High-vulnerability tracts against the complement: Welch t for
/// continuous variables, chi-square on the 2 x k table for categorical ones.
std::vector<EjOutcome> ej_compare(const TractFrame& frame, const std::vector<bool>& high,
                                  std::span<const std::string> continuous,
                                  std::span<const std::string> categorical = {});

nlohmann::json to_json(const CorrelationMatrix& m);
CorrelationMatrix correlation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GroupComparison& g);
GroupComparison comparison_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<EjOutcome>& outcomes);
std::vector<EjOutcome> ej_from_json(const nlohmann::json& j);

}  // namespace vulnatlas::stats
