#include "vulnatlas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "vulnatlas/distributions.hpp"
#include "vulnatlas/error.hpp"

namespace vulnatlas::stats {

using nlohmann::json;

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

// Leaf order of an average-linkage dendrogram over a distance matrix.
std::vector<std::size_t> average_linkage_order(const std::vector<std::vector<double>>& dist) {
  const std::size_t n = dist.size();
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> active(n, true);
  auto d = dist;
  for (std::size_t step = 1; step < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && d[i][j] < best) {
          best = d[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(members[bi].size());
    const double nj = static_cast<double>(members[bj].size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      d[bi][k] = d[k][bi] = (ni * d[bi][k] + nj * d[bj][k]) / (ni + nj);
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    members[bj].clear();
    active[bj] = false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) return members[i];
  }
  return {};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
  if (x.size() < 3) throw Error(ErrorCode::TooFewPairs, "need at least 3 complete pairs");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "a correlated variable is constant");
  // sqrt(sxx) * sqrt(syy) keeps r(x, y) == r(y, x) bit for bit
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const NumericValues> columns,
                                     std::vector<std::string> labels, bool cluster_order) {
  const std::size_t k = columns.size();
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "correlation matrix needs at least 2 columns");
  if (labels.size() != k) throw Error(ErrorCode::InvalidArgument, "label count differs from columns");
  CorrelationMatrix m;
  m.labels = std::move(labels);
  m.values.assign(k, std::vector<std::optional<double>>(k));
  m.n_pairs.assign(k, std::vector<std::size_t>(k, 0));
  m.reasons.assign(k, std::vector<std::string>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      std::vector<double> x;
      std::vector<double> y;
      const std::size_t n = std::min(columns[i].size(), columns[j].size());
      for (std::size_t r = 0; r < n; ++r) {
        if (columns[i][r] && columns[j][r]) {
          x.push_back(*columns[i][r]);
          y.push_back(*columns[j][r]);
        }
      }
      m.n_pairs[i][j] = m.n_pairs[j][i] = x.size();
      try {
        const double r = (i == j) ? (pearson_r(x, x), 1.0) : pearson_r(x, y);
        m.values[i][j] = m.values[j][i] = r;
      } catch (const Error& e) {
        m.reasons[i][j] = m.reasons[j][i] = std::string(to_string(e.code()));
      }
    }
  }
  m.order.resize(k);
  std::iota(m.order.begin(), m.order.end(), 0);
  if (cluster_order) {
    std::vector<std::vector<double>> dist(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i != j) dist[i][j] = m.values[i][j] ? 1.0 - *m.values[i][j] : 1.0;
      }
    }
    m.order = average_linkage_order(dist);
  }
  return m;
}

CorrelationMatrix correlation_matrix(const TractFrame& frame, std::span<const std::string> columns,
                                     bool cluster_order) {
  std::vector<NumericValues> cols;
  for (const auto& name : columns) cols.push_back(frame.column(name).numbers);
  return correlation_matrix(cols, std::vector<std::string>(columns.begin(), columns.end()),
                            cluster_order);
}

GroupComparison welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::TooFewValues, "Welch t needs at least 2 values per sample");
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_variance(a, ma) / static_cast<double>(a.size());
  const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
  if (va == 0.0 && vb == 0.0) throw Error(ErrorCode::ZeroVariance, "both samples are constant");
  const double se2 = va + vb;
  GroupComparison g;
  g.kind = TestKind::WelchT;
  g.mean_high = ma;
  g.mean_rest = mb;
  g.n_high = a.size();
  g.n_rest = b.size();
  g.statistic = (ma - mb) / std::sqrt(se2);
  g.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  g.p_value = dist::student_t_two_sided(g.statistic, g.df);
  return g;
}

GroupComparison chi_square(const std::vector<std::vector<double>>& observed) {
  const std::size_t rows = observed.size();
  if (rows < 2) throw Error(ErrorCode::InvalidArgument, "contingency table needs at least 2 rows");
  const std::size_t cols = observed.front().size();
  if (cols < 2) throw Error(ErrorCode::InvalidArgument, "contingency table needs at least 2 columns");
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (observed[i].size() != cols) throw Error(ErrorCode::InvalidArgument, "ragged contingency table");
    for (std::size_t j = 0; j < cols; ++j) {
      if (observed[i][j] < 0.0) throw Error(ErrorCode::InvalidArgument, "negative count");
      row_sum[i] += observed[i][j];
      col_sum[j] += observed[i][j];
      total += observed[i][j];
    }
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      if (!(expected > 0.0)) {
        throw Error(ErrorCode::ZeroExpectedCount,
                    "expected count is zero at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      const double d = observed[i][j] - expected;
      stat += d * d / expected;
    }
  }
  GroupComparison g;
  g.kind = TestKind::ChiSquare;
  g.statistic = stat;
  g.df = static_cast<double>((rows - 1) * (cols - 1));
  g.p_value = dist::chi_square_upper(stat, g.df);
  g.n_high = static_cast<std::size_t>(std::llround(row_sum[0]));
  g.n_rest = static_cast<std::size_t>(std::llround(total - row_sum[0]));
  return g;
}

std::vector<VifResult> vif(std::span<const std::vector<double>> predictors,
                           std::span<const std::string> names) {
  const std::size_t p = predictors.size();
  if (p < 2) throw Error(ErrorCode::InvalidArgument, "VIF needs at least 2 predictors");
  if (names.size() != p) throw Error(ErrorCode::InvalidArgument, "name count differs from predictors");
  const std::size_t n = predictors.front().size();
  for (const auto& col : predictors) {
    if (col.size() != n) throw Error(ErrorCode::InvalidArgument, "predictors differ in length");
  }
  if (n <= p) throw Error(ErrorCode::TooFewValues, "VIF needs more observations than predictors");

  constexpr double kCollinear = 1e-10;
  std::vector<VifResult> out;
  for (std::size_t j = 0; j < p; ++j) {
    Eigen::MatrixXd design(n, p);  // intercept + the other p - 1 predictors
    Eigen::VectorXd target(n);
    for (std::size_t r = 0; r < n; ++r) {
      design(static_cast<Eigen::Index>(r), 0) = 1.0;
      target(static_cast<Eigen::Index>(r)) = predictors[j][r];
      Eigen::Index c = 1;
      for (std::size_t k = 0; k < p; ++k) {
        if (k != j) design(static_cast<Eigen::Index>(r), c++) = predictors[k][r];
      }
    }
    const double mean = target.mean();
    const double sst = (target.array() - mean).square().sum();
    VifResult res{names[j], std::numeric_limits<double>::infinity(), true};
    if (sst > 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
      const Eigen::VectorXd beta = qr.solve(target);
      const double sse = (target - design * beta).squaredNorm();
      const double unexplained = sse / sst;  // 1 - R^2
      if (unexplained > kCollinear) {
        res.value = 1.0 / unexplained;
        res.infinite = false;
      }
    }
    out.push_back(res);
  }
  return out;
}

std::vector<VifResult> vif(const TractFrame& frame, std::span<const std::string> predictors) {
  std::vector<std::vector<double>> cols;
  for (const auto& name : predictors) cols.push_back(frame.complete_values(name));
  return vif(cols, predictors);
}

std::vector<double> lowess(std::span<const double> x, std::span<const double> y, double frac) {
  const std::size_t n = x.size();
  if (y.size() != n) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
  if (n < 5) throw Error(ErrorCode::TooFewPoints, "LOWESS needs at least 5 points");
  if (!(frac > 0.0 && frac <= 1.0)) throw Error(ErrorCode::InvalidArgument, "frac must be in (0, 1]");
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-10)), 2, n);

  std::vector<double> fitted(n);
  std::vector<double> dist(n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[j] = std::abs(x[j] - x[i]);
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    const double h = dist[idx[k - 1]];
    double sw = 0.0, swx = 0.0, swy = 0.0;
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double wj = 0.0;
      if (h > 0.0) {
        const double u = dist[j] / h;
        if (u < 1.0) wj = std::pow(1.0 - u * u * u, 3);
      } else if (dist[j] == 0.0) {
        wj = 1.0;
      }
      w[j] = wj;
      sw += wj;
      swx += wj * x[j];
      swy += wj * y[j];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sxx += w[j] * (x[j] - xbar) * (x[j] - xbar);
      sxy += w[j] * (x[j] - xbar) * (y[j] - ybar);
    }
    const double scale = std::max(1.0, std::abs(xbar));
    if (sxx > 1e-12 * scale * scale * sw) {
      fitted[i] = ybar + sxy / sxx * (x[i] - xbar);
    } else {
      fitted[i] = ybar;
    }
  }
  return fitted;
}

std::vector<EjOutcome> ej_compare(const TractFrame& frame, const std::vector<bool>& high,
                                  std::span<const std::string> continuous,
                                  std::span<const std::string> categorical) {
  if (high.size() != frame.rows()) throw Error(ErrorCode::InvalidArgument, "flag count differs from rows");
  const auto flagged = static_cast<std::size_t>(std::count(high.begin(), high.end(), true));
  if (flagged == 0) throw Error(ErrorCode::TooFewValues, "no tract is flagged high-vulnerability");

  std::vector<EjOutcome> out;
  for (const auto& name : continuous) {
    EjOutcome o{name, std::nullopt, ""};
    const Column& col = frame.column(name);
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t r = 0; r < frame.rows(); ++r) {
      if (!col.numbers[r]) continue;
      (high[r] ? a : b).push_back(*col.numbers[r]);
    }
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    const bool constant =
        !all.empty() && std::all_of(all.begin(), all.end(), [&](double v) { return v == all.front(); });
    if (constant) {
      o.skipped_reason = std::string(to_string(ErrorCode::ZeroVariance));
    } else {
      try {
        o.comparison = welch_t(a, b);
        o.comparison->variable = name;
      } catch (const Error& e) {
        o.skipped_reason = std::string(to_string(e.code()));
      }
    }
    out.push_back(std::move(o));
  }
  for (const auto& name : categorical) {
    EjOutcome o{name, std::nullopt, ""};
    const Column& col = frame.column(name);
    std::map<std::string, std::size_t> levels;
    for (const auto& v : col.labels) {
      if (v) levels.emplace(*v, 0);
    }
    std::size_t next = 0;
    for (auto& [_, i] : levels) i = next++;
    std::vector<std::vector<double>> table(2, std::vector<double>(levels.size(), 0.0));
    for (std::size_t r = 0; r < frame.rows(); ++r) {
      if (col.labels[r]) table[high[r] ? 0 : 1][levels.at(*col.labels[r])] += 1.0;
    }
    try {
      o.comparison = chi_square(table);
      o.comparison->variable = name;
    } catch (const Error& e) {
      o.skipped_reason = std::string(to_string(e.code()));
    }
    out.push_back(std::move(o));
  }
  return out;
}

json to_json(const CorrelationMatrix& m) {
  json values = json::array();
  for (const auto& row : m.values) {
    json r = json::array();
    for (const auto& v : row) r.push_back(optional_number(v));
    values.push_back(std::move(r));
  }
  return json{{"labels", m.labels}, {"values", values}, {"n_pairs", m.n_pairs},
              {"reasons", m.reasons}, {"order", m.order}};
}

CorrelationMatrix correlation_from_json(const json& j) {
  CorrelationMatrix m;
  m.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& row : j.at("values")) {
    std::vector<std::optional<double>> r;
    for (const auto& v : row) r.push_back(number_or_null(v));
    m.values.push_back(std::move(r));
  }
  m.n_pairs = j.at("n_pairs").get<std::vector<std::vector<std::size_t>>>();
  m.reasons = j.at("reasons").get<std::vector<std::vector<std::string>>>();
  m.order = j.at("order").get<std::vector<std::size_t>>();
  return m;
}

json to_json(const GroupComparison& g) {
  return json{{"variable", g.variable},
              {"test", g.kind == TestKind::WelchT ? "welch_t" : "chi_square"},
              {"mean_high", optional_number(g.mean_high)},
              {"mean_rest", optional_number(g.mean_rest)},
              {"n_high", g.n_high},
              {"n_rest", g.n_rest},
              {"statistic", g.statistic},
              {"df", g.df},
              {"p_value", g.p_value}};
}

GroupComparison comparison_from_json(const json& j) {
  GroupComparison g;
  g.variable = j.at("variable").get<std::string>();
  g.kind = j.at("test").get<std::string>() == "welch_t" ? TestKind::WelchT : TestKind::ChiSquare;
  g.mean_high = number_or_null(j.at("mean_high"));
  g.mean_rest = number_or_null(j.at("mean_rest"));
  g.n_high = j.at("n_high").get<std::size_t>();
  g.n_rest = j.at("n_rest").get<std::size_t>();
  g.statistic = j.at("statistic").get<double>();
  g.df = j.at("df").get<double>();
  g.p_value = j.at("p_value").get<double>();
  return g;
}

json to_json(const std::vector<EjOutcome>& outcomes) {
  json arr = json::array();
  for (const auto& o : outcomes) {
    arr.push_back(json{{"variable", o.variable},
                       {"comparison", o.comparison ? to_json(*o.comparison) : json(nullptr)},
                       {"skipped_reason", o.skipped_reason}});
  }
  return arr;
}

std::vector<EjOutcome> ej_from_json(const json& j) {
  std::vector<EjOutcome> out;
  for (const auto& o : j) {
    EjOutcome e{o.at("variable").get<std::string>(), std::nullopt,
                o.at("skipped_reason").get<std::string>()};
    if (!o.at("comparison").is_null()) e.comparison = comparison_from_json(o.at("comparison"));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace vulnatlas::stats
