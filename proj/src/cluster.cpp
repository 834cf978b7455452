#include "vulnatlas/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "vulnatlas/error.hpp"
#include "vulnatlas/random.hpp"

namespace vulnatlas::cluster {

namespace {

using Centroids = std::vector<std::vector<double>>;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t nearest(std::span<const double> x, const Centroids& c, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double d = sq_dist(x, c[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

void check_k(const FeatureMatrix& m, std::size_t k) {
  if (k == 0 || k > m.rows()) {
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " with " + std::to_string(m.rows()) + " rows");
  }
}

void check_columns(const FeatureMatrix& m) {
  if (m.rows() < 2) return;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const double first = m.at(0, c);
    bool constant = true;
    for (std::size_t r = 1; r < m.rows() && constant; ++r) constant = m.at(r, c) == first;
    if (constant) throw Error(ErrorCode::DegenerateFeatures, m.feature_names()[c]);
  }
}

Centroids plus_plus_seed(const FeatureMatrix& m, std::size_t k, Rng& rng) {
  const std::size_t n = m.rows();
  Centroids c;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  chosen[first] = true;
  c.emplace_back(m.row(first).begin(), m.row(first).end());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(m.row(i), c[0]);
  while (c.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > r) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    c.emplace_back(m.row(pick).begin(), m.row(pick).end());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(m.row(i), c.back()));
  }
  return c;
}

struct Run {
  std::vector<int> assignments;
  Centroids centroids;
  double wcss = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

// Moves the worst-fit point of a multi-member cluster into each empty cluster.
void repair_empty(const FeatureMatrix& m, std::vector<int>& assign, Centroids& c) {
  const std::size_t k = c.size();
  for (;;) {
    std::vector<std::size_t> sizes(k, 0);
    for (int a : assign) ++sizes[static_cast<std::size_t>(a)];
    auto empty = std::find(sizes.begin(), sizes.end(), 0u);
    if (empty == sizes.end()) return;
    std::size_t worst = m.rows();
    double worst_d = -1.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto a = static_cast<std::size_t>(assign[i]);
      if (sizes[a] < 2) continue;
      const double d = sq_dist(m.row(i), c[a]);
      if (d > worst_d) {
        worst_d = d;
        worst = i;
      }
    }
    const auto e = static_cast<std::size_t>(empty - sizes.begin());
    assign[worst] = static_cast<int>(e);
    c[e].assign(m.row(worst).begin(), m.row(worst).end());
  }
}

Centroids means(const FeatureMatrix& m, const std::vector<int>& assign, std::size_t k) {
  Centroids c(k, std::vector<double>(m.cols(), 0.0));
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto a = static_cast<std::size_t>(assign[i]);
    ++sizes[a];
    for (std::size_t j = 0; j < m.cols(); ++j) c[a][j] += m.at(i, j);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (double& v : c[a]) v /= static_cast<double>(sizes[a]);
  }
  return c;
}

Run lloyd(const FeatureMatrix& m, Centroids c, std::size_t max_iter, double tol) {
  const std::size_t k = c.size();
  Run run;
  run.assignments.assign(m.rows(), 0);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iter, 1); ++it) {
    for (std::size_t i = 0; i < m.rows(); ++i) run.assignments[i] = static_cast<int>(nearest(m.row(i), c));
    repair_empty(m, run.assignments, c);
    Centroids next = means(m, run.assignments, k);
    double shift = 0.0;
    for (std::size_t a = 0; a < k; ++a) shift = std::max(shift, std::sqrt(sq_dist(next[a], c[a])));
    c = std::move(next);
    run.history.push_back(wcss(m, run.assignments, c));
    if (shift < tol) break;
  }
  run.centroids = std::move(c);
  run.wcss = run.history.back();
  return run;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> row_keys, std::vector<std::string> feature_names,
                             std::vector<double> values)
    : row_keys_(std::move(row_keys)), feature_names_(std::move(feature_names)), values_(std::move(values)) {
  if (values_.size() != row_keys_.size() * feature_names_.size()) {
    throw Error(ErrorCode::RowMismatch, "feature matrix shape does not match its values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::MissingValues, "feature matrix has a non-finite value");
  }
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<std::string> keys;
  std::vector<std::string> names;
  std::vector<double> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorCode::RowMismatch, "ragged rows");
    keys.push_back(std::to_string(r));
    values.insert(values.end(), rows[r].begin(), rows[r].end());
  }
  for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
  return FeatureMatrix(std::move(keys), std::move(names), std::move(values));
}

std::vector<std::string> default_features() {
  return {"asthma",         "copd",           "flood_pct",           "renter_pct",
          "pre1980_pct",    "poverty_pct",    "no_diploma_pct",      "disability_pct",
          "age65_pct",      "limited_english_pct", "no_vehicle_pct", "median_rent"};
}

FeatureMatrix standardize(const TractFrame& frame, std::span<const std::string> features) {
  const std::size_t n = frame.rows();
  std::vector<double> values(n * features.size());
  for (std::size_t c = 0; c < features.size(); ++c) {
    const std::vector<double> x = frame.complete_values(features[c]);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateFeatures, features[c]);
    for (std::size_t r = 0; r < n; ++r) values[r * features.size() + c] = (x[r] - mean) / sd;
  }
  return FeatureMatrix(frame.geoids(), std::vector<std::string>(features.begin(), features.end()),
                       std::move(values));
}

double wcss(const FeatureMatrix& m, std::span<const int> assignments, const Centroids& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s += sq_dist(m.row(i), centroids[static_cast<std::size_t>(assignments[i])]);
  }
  return s;
}

ClusterModel kmeans_fit(const FeatureMatrix& m, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options, const Centroids* warm_start) {
  check_k(m, k);
  check_columns(m);
  const std::size_t n_init = std::max<std::size_t>(options.n_init, 1);
  std::vector<Run> runs(n_init);
  auto one = [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    runs[r] = lloyd(m, plus_plus_seed(m, k, rng), options.max_iter, options.tol);
  };
  const unsigned workers = std::max(1u, options.workers);
  if (workers == 1) {
    for (std::size_t r = 0; r < n_init; ++r) one(r);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t r = w; r < n_init; r += workers) one(r);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  if (warm_start) {
    if (warm_start->size() != k) throw Error(ErrorCode::KTooLarge, "warm start has the wrong number of centroids");
    runs.push_back(lloyd(m, *warm_start, options.max_iter, options.tol));
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].wcss < runs[best].wcss) best = r;
  }
  ClusterModel model;
  model.method = Method::KMeans;
  model.k = k;
  model.seed = seed;
  model.assignments = std::move(runs[best].assignments);
  model.centroids = std::move(runs[best].centroids);
  model.wcss = runs[best].wcss;
  model.wcss_history = std::move(runs[best].history);
  return model;
}

std::vector<ClusterModel> wcss_models(const FeatureMatrix& m, std::size_t k_min, std::size_t k_max,
                                      std::uint64_t seed, const KMeansOptions& options) {
  check_k(m, k_min);
  check_k(m, k_max);
  std::vector<ClusterModel> out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    if (out.empty()) {
      out.push_back(kmeans_fit(m, k, derive_seed(seed, k), options));
      continue;
    }
    const ClusterModel& prev = out.back();
    Centroids warm = prev.centroids;
    std::size_t worst = 0;
    double worst_d = -1.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double d = sq_dist(m.row(i), prev.centroids[static_cast<std::size_t>(prev.assignments[i])]);
      if (d > worst_d) {
        worst_d = d;
        worst = i;
      }
    }
    warm.emplace_back(m.row(worst).begin(), m.row(worst).end());
    out.push_back(kmeans_fit(m, k, derive_seed(seed, k), options, &warm));
  }
  for (auto& model : out) model.seed = seed;
  return out;
}

std::vector<std::pair<std::size_t, double>> wcss_curve(const FeatureMatrix& m, std::size_t k_min,
                                                       std::size_t k_max, std::uint64_t seed,
                                                       const KMeansOptions& options) {
  std::vector<std::pair<std::size_t, double>> curve;
  for (const auto& model : wcss_models(m, k_min, k_max, seed, options)) curve.emplace_back(model.k, model.wcss);
  return curve;
}

Silhouette silhouette(const FeatureMatrix& m, std::span<const int> assignments) {
  if (assignments.size() != m.rows()) throw Error(ErrorCode::RowMismatch, "assignments do not cover the matrix");
  int k = 0;
  for (int a : assignments) {
    if (a < 0) throw Error(ErrorCode::InvalidArgument, "negative cluster label");
    k = std::max(k, a + 1);
  }
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  const auto used = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (used < 2) throw Error(ErrorCode::SingleCluster, "silhouette needs at least two clusters");

  const std::size_t n = m.rows();
  Silhouette out;
  out.per_point.resize(n);
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(assignments[i]);
    if (sizes[own] == 1) {
      out.per_point[i] = 0.0;
      continue;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(assignments[j])] += std::sqrt(sq_dist(m.row(i), m.row(j)));
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    out.per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  out.mean = std::accumulate(out.per_point.begin(), out.per_point.end(), 0.0) / static_cast<double>(n);
  return out;
}

KSelection select_k(const FeatureMatrix& m, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k_min < 2) throw Error(ErrorCode::SingleCluster, "model selection starts at k = 2");
  KSelection sel;
  sel.models = wcss_models(m, k_min, k_max, seed, options);
  double best = -std::numeric_limits<double>::infinity();
  for (auto& model : sel.models) {
    const double s = silhouette(m, model.assignments).mean;
    model.silhouette = s;
    sel.table.push_back({model.k, model.wcss, s});
    if (s > best) {
      best = s;
      sel.k_best = model.k;
    }
  }
  return sel;
}

ClusterProfile cluster_profile(const TractFrame& frame, std::span<const int> assignments,
                               std::span<const std::string> variables) {
  if (assignments.size() != frame.rows()) throw Error(ErrorCode::RowMismatch, "assignments do not cover the frame");
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  ClusterProfile p;
  p.variables.assign(variables.begin(), variables.end());
  p.sizes.assign(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++p.sizes[static_cast<std::size_t>(a)];
  p.means.assign(static_cast<std::size_t>(k), std::vector<double>(variables.size(), 0.0));
  for (std::size_t v = 0; v < variables.size(); ++v) {
    const Column& col = frame.column(variables[v]);
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t r = 0; r < frame.rows(); ++r) {
      if (!col.numbers[r]) continue;
      const auto a = static_cast<std::size_t>(assignments[r]);
      sum[a] += *col.numbers[r];
      ++count[a];
    }
    for (std::size_t a = 0; a < sum.size(); ++a) {
      p.means[a][v] = count[a] ? sum[a] / static_cast<double>(count[a]) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return p;
}

Agreement agreement(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::RowMismatch, "labelings cover different rows");
  int ka = 0;
  int kb = 0;
  for (int x : a) ka = std::max(ka, x + 1);
  for (int x : b) kb = std::max(kb, x + 1);
  Agreement out;
  out.contingency.assign(static_cast<std::size_t>(ka), std::vector<std::size_t>(static_cast<std::size_t>(kb), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++out.contingency[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  double sum_a = 0.0;
  double sum_b = 0.0;
  std::vector<double> col(static_cast<std::size_t>(kb), 0.0);
  for (const auto& row : out.contingency) {
    double row_total = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      index += pairs(static_cast<double>(row[j]));
      row_total += static_cast<double>(row[j]);
      col[j] += static_cast<double>(row[j]);
    }
    sum_a += pairs(row_total);
  }
  for (double c : col) sum_b += pairs(c);
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  out.adjusted_rand = max_index == expected ? 1.0 : (index - expected) / (max_index - expected);
  return out;
}

std::vector<int> canonical_order(std::span<const int> assignments, std::span<const double> key) {
  if (assignments.size() != key.size()) throw Error(ErrorCode::RowMismatch, "key does not cover the assignments");
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < key.size(); ++i) {
    sum[static_cast<std::size_t>(assignments[i])] += key[i];
    ++count[static_cast<std::size_t>(assignments[i])];
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  auto mean = [&](int c) {
    const auto i = static_cast<std::size_t>(c);
    return count[i] ? sum[i] / static_cast<double>(count[i]) : -std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return mean(x) > mean(y); });
  std::vector<int> old_to_new(static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < order.size(); ++pos) old_to_new[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos);
  return old_to_new;
}

void relabel(ClusterModel& model, const std::vector<int>& old_to_new) {
  for (int& a : model.assignments) a = old_to_new[static_cast<std::size_t>(a)];
  if (!model.centroids.empty()) {
    Centroids c(model.centroids.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[static_cast<std::size_t>(old_to_new[i])] = std::move(model.centroids[i]);
    model.centroids = std::move(c);
  }
}

nlohmann::json to_json(const ClusterModel& model, std::span<const std::string> geoids) {
  if (geoids.size() != model.assignments.size()) throw Error(ErrorCode::RowMismatch, "geoids do not match the model");
  nlohmann::json j;
  j["method"] = model.method == Method::KMeans ? "kmeans" : "ward";
  j["k"] = model.k;
  j["seed"] = model.seed;
  j["wcss"] = model.wcss;
  j["silhouette"] = model.silhouette ? nlohmann::json(*model.silhouette) : nlohmann::json(nullptr);
  nlohmann::json assign = nlohmann::json::object();
  for (std::size_t i = 0; i < geoids.size(); ++i) assign[geoids[i]] = model.assignments[i];
  j["assignments"] = std::move(assign);
  j["row_order"] = std::vector<std::string>(geoids.begin(), geoids.end());
  if (model.method == Method::KMeans) {
    j["centroids"] = model.centroids;
    j["wcss_history"] = model.wcss_history;
  } else {
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& mg : model.tree.merges) merges.push_back({mg.a, mg.b, mg.height, mg.size});
    j["merges"] = std::move(merges);
  }
  return j;
}

ClusterModel model_from_json(const nlohmann::json& j) {
  ClusterModel m;
  m.method = j.at("method").get<std::string>() == "ward" ? Method::Ward : Method::KMeans;
  m.k = j.at("k").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.wcss = j.at("wcss").get<double>();
  if (!j.at("silhouette").is_null()) m.silhouette = j.at("silhouette").get<double>();
  const auto& assign = j.at("assignments");
  for (const auto& g : j.at("row_order")) m.assignments.push_back(assign.at(g.get<std::string>()).get<int>());
  if (m.method == Method::KMeans) {
    m.centroids = j.at("centroids").get<Centroids>();
    m.wcss_history = j.value("wcss_history", std::vector<double>{});
  } else {
    m.tree.n = m.assignments.size();
    for (const auto& mg : j.at("merges")) {
      m.tree.merges.push_back({mg[0].get<std::size_t>(), mg[1].get<std::size_t>(), mg[2].get<double>(),
                               mg[3].get<std::size_t>()});
    }
  }
  return m;
}

nlohmann::json to_json(const ClusterProfile& p) {
  return {{"variables", p.variables}, {"means", p.means}, {"sizes", p.sizes}};
}

ClusterProfile profile_from_json(const nlohmann::json& j) {
  ClusterProfile p;
  p.variables = j.at("variables").get<std::vector<std::string>>();
  for (const auto& row : j.at("means")) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    p.means.push_back(std::move(r));
  }
  p.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  return p;
}

nlohmann::json to_json(const KSelection& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.table) rows.push_back({{"k", r.k}, {"wcss", r.wcss}, {"silhouette", r.silhouette}});
  return {{"k_best", s.k_best}, {"table", rows}};
}

KSelection selection_from_json(const nlohmann::json& j) {
  KSelection s;
  s.k_best = j.at("k_best").get<std::size_t>();
  for (const auto& r : j.at("table")) {
    s.table.push_back({r.at("k").get<std::size_t>(), r.at("wcss").get<double>(), r.at("silhouette").get<double>()});
  }
  return s;
}

}  // namespace vulnatlas::cluster
