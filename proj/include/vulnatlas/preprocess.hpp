#pragma once

// Column-wise cleaning and scaling. Every quantile in this module is the
// linear interpolation between order statistics at position p * (n - 1).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/frame.hpp"

namespace vulnatlas::prep {

/// Quantile of already sorted data; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::span<const double> values, double p);

/// Non-missing entries in row order.
std::vector<double> present(const NumericValues& values);

struct ColumnStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd_population = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::optional<double> skewness;
  std::optional<double> shapiro_w;
  std::optional<double> shapiro_p;
};

ColumnStats describe(std::span<const double> x, bool with_shapiro = true);

std::vector<bool> tukey_fences(std::span<const double> x);

struct WinsorCutoffs {
  double lower;
  double upper;
};

/// Cutoffs for Winsorization at the given percentiles. The percentile
/// position is snapped inward to the nearest order statistic, which makes
/// the operation a fixed point: winsorize(winsorize(x)) == winsorize(x).
WinsorCutoffs winsor_cutoffs(std::span<const double> x, double lower_pct = 5.0,
                             double upper_pct = 95.0);
std::vector<double> winsorize(std::span<const double> x, double lower_pct = 5.0,
                              double upper_pct = 95.0);

/// Adjusted Fisher-Pearson sample skewness G1.
double skewness(std::span<const double> x);

struct ShapiroWilk {
  double w;
  double p;
};
/// Royston (1995) approximation, valid for 3 <= n <= 5000.
ShapiroWilk shapiro_wilk(std::span<const double> x);

struct LogDecision {
  std::vector<double> values;
  bool applied = false;
  std::optional<std::string> warning;
};
LogDecision log_transform_if_skewed(std::span<const double> x);

std::vector<double> minmax_normalize(std::span<const double> x);
std::vector<double> zscore(std::span<const double> x);

enum class Quartile { Q1 = 1, Q2, Q3, Q4 };
std::vector<Quartile> quartile_bins(std::span<const double> x);

// ---------------------------------------------------------------------------
// Replayable transform records

enum class StepKind { Winsorize, Log, MinMax, Reflect, ZScore };

std::string_view to_string(StepKind kind);

struct TransformStep {
  StepKind kind;
  double a = 0.0;  // winsorize: lower cutoff, minmax: min, zscore: mean
  double b = 0.0;  // winsorize: upper cutoff, minmax: max, zscore: sd
};

struct TransformRecord {
  std::string column;
  std::vector<TransformStep> steps;
  std::size_t tukey_flags = 0;
  std::vector<std::string> notes;
};

struct FitOptions {
  bool winsorize_outliers = false;  // only columns with >= 1 Tukey flag
  bool log_if_skewed = false;
  bool minmax = false;
  bool reflect = false;  // 100 - x after minmax, for risk_decreases indicators
  bool zscore = false;
  double lower_pct = 5.0;
  double upper_pct = 95.0;
};

struct FitResult {
  NumericValues values;
  TransformRecord record;
};

/// Fits each enabled step on the non-missing values and applies it.
/// Missing entries pass through untouched.
FitResult fit_column(std::string name, const NumericValues& raw, const FitOptions& options);

/// Applies frozen parameters to raw input; reproduces fit_column output bit for bit.
NumericValues replay(const TransformRecord& record, const NumericValues& raw);

double apply_step(const TransformStep& step, double x);

nlohmann::json to_json(const TransformRecord& record);
TransformRecord transform_record_from_json(const nlohmann::json& j);

}  // namespace vulnatlas::prep
