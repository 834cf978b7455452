#include "vulnatlas/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vulnatlas/error.hpp"

namespace vulnatlas::prep {

using nlohmann::json;

namespace {

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

double mean_of(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double correction = 0.0;
  for (double v : x) correction += v - m;
  return m + correction / n;
}

double population_sd(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

std::string_view step_name(StepKind k) {
  switch (k) {
    case StepKind::Winsorize: return "winsorize";
    case StepKind::Log: return "log";
    case StepKind::MinMax: return "minmax";
    case StepKind::Reflect: return "reflect";
    case StepKind::ZScore: return "zscore";
  }
  return "";
}

StepKind parse_step(std::string_view s) {
  if (s == "winsorize") return StepKind::Winsorize;
  if (s == "log") return StepKind::Log;
  if (s == "minmax") return StepKind::MinMax;
  if (s == "reflect") return StepKind::Reflect;
  if (s == "zscore") return StepKind::ZScore;
  throw Error(ErrorCode::ParseError, "unknown transform step '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(StepKind kind) { return step_name(kind); }

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::TooFewValues, "quantile of empty data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  const auto s = sorted_copy(values);
  return quantile_sorted(s, p);
}

std::vector<double> present(const NumericValues& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    if (v) out.push_back(*v);
  }
  return out;
}

ColumnStats describe(std::span<const double> x, bool with_shapiro) {
  if (x.empty()) throw Error(ErrorCode::TooFewValues, "describe needs at least one value");
  const auto s = sorted_copy(x);
  ColumnStats st;
  st.n = x.size();
  st.mean = mean_of(x);
  st.sd_population = population_sd(x, st.mean);
  st.min = s.front();
  st.max = s.back();
  st.q1 = quantile_sorted(s, 0.25);
  st.q3 = quantile_sorted(s, 0.75);
  if (x.size() >= 3 && st.sd_population > 0.0) st.skewness = skewness(x);
  if (with_shapiro && x.size() >= 3 && x.size() <= 5000 && st.max > st.min) {
    const auto sw = shapiro_wilk(x);
    st.shapiro_w = sw.w;
    st.shapiro_p = sw.p;
  }
  return st;
}

std::vector<bool> tukey_fences(std::span<const double> x) {
  if (x.size() < 4) throw Error(ErrorCode::TooFewValues, "Tukey fences need at least 4 values");
  const auto s = sorted_copy(x);
  const double q1 = quantile_sorted(s, 0.25);
  const double q3 = quantile_sorted(s, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr;
  const double hi = q3 + 1.5 * iqr;
  std::vector<bool> flags(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) flags[i] = x[i] < lo || x[i] > hi;
  return flags;
}

WinsorCutoffs winsor_cutoffs(std::span<const double> x, double lower_pct, double upper_pct) {
  if (!(lower_pct >= 0.0 && lower_pct < upper_pct && upper_pct <= 100.0)) {
    throw Error(ErrorCode::InvalidPercentiles, "need 0 <= lower < upper <= 100");
  }
  if (x.empty()) throw Error(ErrorCode::TooFewValues, "winsorize of empty data");
  const auto s = sorted_copy(x);
  const double last = static_cast<double>(s.size() - 1);
  // Positions are rounded with a small tolerance so 0.95 * 20 lands on 19.
  constexpr double kEps = 1e-9;
  auto lo_pos = static_cast<std::size_t>(std::ceil(lower_pct / 100.0 * last - kEps));
  auto hi_pos = static_cast<std::size_t>(std::floor(upper_pct / 100.0 * last + kEps));
  if (lo_pos > hi_pos) std::swap(lo_pos, hi_pos);
  return {s[lo_pos], s[hi_pos]};
}

std::vector<double> winsorize(std::span<const double> x, double lower_pct, double upper_pct) {
  const WinsorCutoffs c = winsor_cutoffs(x, lower_pct, upper_pct);
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v = std::clamp(v, c.lower, c.upper);
  return out;
}

double skewness(std::span<const double> x) {
  if (x.size() < 3) throw Error(ErrorCode::TooFewValues, "skewness needs at least 3 values");
  const double n = static_cast<double>(x.size());
  const double m = mean_of(x);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) throw Error(ErrorCode::ZeroVariance, "skewness of a constant column");
  const double g1 = m3 / std::pow(m2, 1.5);
  return std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
}

LogDecision log_transform_if_skewed(std::span<const double> x) {
  LogDecision out{std::vector<double>(x.begin(), x.end()), false, std::nullopt};
  if (x.size() < 3) return out;
  const double m = mean_of(x);
  if (population_sd(x, m) == 0.0) return out;
  const double g1 = skewness(x);
  if (std::abs(g1) <= 1.0) return out;
  if (*std::min_element(x.begin(), x.end()) < 0.0) {
    out.warning = "skewed column contains negative values; log transform skipped";
    return out;
  }
  for (double& v : out.values) v = std::log1p(v);
  out.applied = true;
  return out;
}

std::vector<double> minmax_normalize(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::TooFewValues, "normalize of empty data");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (!(*mx > *mn)) throw Error(ErrorCode::DegenerateColumn, "max equals min");
  const TransformStep step{StepKind::MinMax, *mn, *mx};
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(apply_step(step, v));
  return out;
}

std::vector<double> zscore(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::TooFewValues, "zscore of empty data");
  const double m = mean_of(x);
  const double sd = population_sd(x, m);
  if (!(sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "zscore of a constant column");
  const TransformStep step{StepKind::ZScore, m, sd};
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(apply_step(step, v));
  return out;
}

std::vector<Quartile> quartile_bins(std::span<const double> x) {
  if (x.size() < 4) throw Error(ErrorCode::TooFewValues, "quartile bins need at least 4 values");
  const auto s = sorted_copy(x);
  const double c1 = quantile_sorted(s, 0.25);
  const double c2 = quantile_sorted(s, 0.50);
  const double c3 = quantile_sorted(s, 0.75);
  std::vector<Quartile> out;
  out.reserve(x.size());
  for (double v : x) {
    if (v <= c1) {
      out.push_back(Quartile::Q1);
    } else if (v <= c2) {
      out.push_back(Quartile::Q2);
    } else if (v <= c3) {
      out.push_back(Quartile::Q3);
    } else {
      out.push_back(Quartile::Q4);
    }
  }
  return out;
}

double apply_step(const TransformStep& step, double x) {
  switch (step.kind) {
    case StepKind::Winsorize: return std::clamp(x, step.a, step.b);
    case StepKind::Log: return std::log1p(x);
    case StepKind::MinMax: return (x - step.a) / (step.b - step.a) * 100.0;
    case StepKind::Reflect: return 100.0 - x;
    case StepKind::ZScore: return (x - step.a) / step.b;
  }
  return x;
}

namespace {

void apply_in_place(const TransformStep& step, NumericValues& values) {
  for (auto& v : values) {
    if (v) v = apply_step(step, *v);
  }
}

}  // namespace

FitResult fit_column(std::string name, const NumericValues& raw, const FitOptions& options) {
  FitResult out{raw, TransformRecord{std::move(name), {}, 0, {}}};
  auto& rec = out.record;
  auto current = [&] { return present(out.values); };

  if (options.winsorize_outliers) {
    const auto x = current();
    if (x.size() >= 4) {
      const auto flags = tukey_fences(x);
      rec.tukey_flags = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
      if (rec.tukey_flags > 0) {
        const auto c = winsor_cutoffs(x, options.lower_pct, options.upper_pct);
        const TransformStep step{StepKind::Winsorize, c.lower, c.upper};
        apply_in_place(step, out.values);
        rec.steps.push_back(step);
      }
    } else {
      rec.notes.push_back("fewer than 4 values; outlier screening skipped");
    }
  }
  if (options.log_if_skewed) {
    const auto x = current();
    const LogDecision d = log_transform_if_skewed(x);
    if (d.warning) rec.notes.push_back(*d.warning);
    if (d.applied) {
      const TransformStep step{StepKind::Log};
      apply_in_place(step, out.values);
      rec.steps.push_back(step);
    }
  }
  if (options.minmax) {
    const auto x = current();
    if (x.empty()) throw Error(ErrorCode::TooFewValues, "column '" + rec.column + "' is empty");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (!(*mx > *mn)) throw Error(ErrorCode::DegenerateColumn, "column '" + rec.column + "' is constant");
    const TransformStep step{StepKind::MinMax, *mn, *mx};
    apply_in_place(step, out.values);
    rec.steps.push_back(step);
  }
  if (options.reflect) {
    const TransformStep step{StepKind::Reflect};
    apply_in_place(step, out.values);
    rec.steps.push_back(step);
  }
  if (options.zscore) {
    const auto x = current();
    if (x.empty()) throw Error(ErrorCode::TooFewValues, "column '" + rec.column + "' is empty");
    const double m = mean_of(x);
    const double sd = population_sd(x, m);
    if (!(sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "column '" + rec.column + "' is constant");
    const TransformStep step{StepKind::ZScore, m, sd};
    apply_in_place(step, out.values);
    rec.steps.push_back(step);
  }
  return out;
}

NumericValues replay(const TransformRecord& record, const NumericValues& raw) {
  NumericValues out = raw;
  for (const auto& step : record.steps) apply_in_place(step, out);
  return out;
}

json to_json(const TransformRecord& record) {
  json steps = json::array();
  for (const auto& s : record.steps) {
    json j{{"step", step_name(s.kind)}};
    switch (s.kind) {
      case StepKind::Winsorize:
        j["lower"] = s.a;
        j["upper"] = s.b;
        break;
      case StepKind::MinMax:
        j["min"] = s.a;
        j["max"] = s.b;
        break;
      case StepKind::ZScore:
        j["mean"] = s.a;
        j["sd"] = s.b;
        break;
      default:
        break;
    }
    steps.push_back(std::move(j));
  }
  return json{{"column", record.column},
              {"tukey_flags", record.tukey_flags},
              {"steps", steps},
              {"notes", record.notes}};
}

TransformRecord transform_record_from_json(const json& j) {
  TransformRecord r;
  r.column = j.at("column").get<std::string>();
  r.tukey_flags = j.value("tukey_flags", std::size_t{0});
  r.notes = j.value("notes", std::vector<std::string>{});
  for (const auto& s : j.at("steps")) {
    TransformStep step{parse_step(s.at("step").get<std::string>())};
    switch (step.kind) {
      case StepKind::Winsorize:
        step.a = s.at("lower").get<double>();
        step.b = s.at("upper").get<double>();
        break;
      case StepKind::MinMax:
        step.a = s.at("min").get<double>();
        step.b = s.at("max").get<double>();
        break;
      case StepKind::ZScore:
        step.a = s.at("mean").get<double>();
        step.b = s.at("sd").get<double>();
        break;
      default:
        break;
    }
    r.steps.push_back(step);
  }
  return r;
}

}  // namespace vulnatlas::prep
