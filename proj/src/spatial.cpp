#include "vulnatlas/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "vulnatlas/error.hpp"
#include "vulnatlas/random.hpp"

namespace vulnatlas::spatial {

namespace {

std::vector<double> centered(std::span<const double> values, const SpatialWeights& w, double* ss_out) {
  if (values.size() != w.size()) {
    throw Error(ErrorCode::RowMismatch,
                std::to_string(values.size()) + " values for " + std::to_string(w.size()) + " tracts");
  }
  if (w.size() - w.islands().size() < 2) throw Error(ErrorCode::AllIslands, "fewer than two connected tracts");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::vector<double> z(values.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    z[i] = values[i] - mean;
    ss += z[i] * z[i];
  }
  const double scale = std::max(std::abs(mean), 1.0);
  if (!(ss > 1e-24 * scale * scale * static_cast<double>(values.size()))) {
    throw Error(ErrorCode::ZeroVariance, "values are constant");
  }
  *ss_out = ss;
  return z;
}

double moran_of(const std::vector<double>& z, double ss, const SpatialWeights& w) {
  double num = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double lag = 0.0;
    for (const auto& e : w.row(i)) lag += e.w * z[e.j];
    num += z[i] * lag;
  }
  return static_cast<double>(z.size()) / w.s0() * num / ss;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  for (unsigned t = 0; t < workers; ++t) {
    jobs.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < count; i += workers) fn(i);
    }));
  }
  for (auto& j : jobs) j.get();
}

}  // namespace

SpatialWeights::SpatialWeights(const geo::NeighborGraph& graph, WeightMode mode)
    : ids_(graph.node_ids), rows_(graph.size()), mode_(mode) {
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& adj = graph.adjacency[i];
    if (adj.empty()) {
      islands_.push_back(i);
      continue;
    }
    const double w = mode == WeightMode::Binary ? 1.0 : 1.0 / static_cast<double>(adj.size());
    for (std::size_t j : adj) {
      if (j == i) continue;
      rows_[i].push_back({j, w});
      s0_ += w;
    }
  }
}

double SpatialWeights::weight(std::size_t i, std::size_t j) const {
  for (const auto& e : rows_[i]) {
    if (e.j == j) return e.w;
  }
  return 0.0;
}

double morans_i(std::span<const double> values, const SpatialWeights& w) {
  double ss = 0.0;
  const auto z = centered(values, w, &ss);
  return moran_of(z, ss, w);
}

MoranTest morans_i_test(std::span<const double> values, const SpatialWeights& w, std::size_t permutations,
                        std::uint64_t seed, unsigned workers) {
  double ss = 0.0;
  const auto z = centered(values, w, &ss);
  MoranTest t;
  t.i = moran_of(z, ss, w);
  t.expected = -1.0 / static_cast<double>(z.size() - 1);
  t.permutations = permutations;
  t.seed = seed;
  if (permutations == 0) return t;
  std::vector<double> ref(permutations);
  parallel_for(permutations, workers, [&](std::size_t r) {
    std::vector<double> p = z;
    Rng rng(derive_seed(seed, r));
    rng.shuffle(std::span<double>(p));
    ref[r] = moran_of(p, ss, w);
  });
  const bool upper = t.i >= t.expected;
  std::size_t extreme = 0;
  for (double v : ref) {
    if (upper ? v >= t.i : v <= t.i) ++extreme;
  }
  t.pseudo_p = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
  double mean = 0.0;
  for (double v : ref) mean += v;
  mean /= static_cast<double>(permutations);
  double var = 0.0;
  for (double v : ref) var += (v - mean) * (v - mean);
  t.perm_mean = mean;
  t.perm_sd = std::sqrt(var / static_cast<double>(permutations));
  t.perm_min = *std::min_element(ref.begin(), ref.end());
  t.perm_max = *std::max_element(ref.begin(), ref.end());
  t.z = t.perm_sd > 0.0 ? (t.i - mean) / t.perm_sd : 0.0;
  return t;
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::HH: return "HH";
    case Quadrant::LL: return "LL";
    case Quadrant::HL: return "HL";
    case Quadrant::LH: return "LH";
    case Quadrant::None: return "none";
  }
  return "none";
}

LisaResult local_moran(std::span<const double> values, const SpatialWeights& w, std::size_t permutations,
                       std::uint64_t seed, double alpha, unsigned workers) {
  double ss = 0.0;
  const auto z = centered(values, w, &ss);
  const std::size_t n = z.size();
  const double m2 = ss / static_cast<double>(n);
  LisaResult r;
  r.permutations = permutations;
  r.seed = seed;
  r.alpha = alpha;
  r.local_i.assign(n, 0.0);
  r.lag.assign(n, 0.0);
  r.quadrant.assign(n, Quadrant::None);
  r.pseudo_p.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.significant.assign(n, false);
  r.evaluated.assign(n, false);
  std::vector<char> sig(n, 0);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto& row = w.row(i);
    if (row.empty()) return;
    double lag = 0.0;
    for (const auto& e : row) lag += e.w * z[e.j];
    r.lag[i] = lag;
    r.local_i[i] = z[i] / m2 * lag;
    const bool high = z[i] >= 0.0;
    r.quadrant[i] = high ? (lag >= 0.0 ? Quadrant::HH : Quadrant::HL) : (lag >= 0.0 ? Quadrant::LH : Quadrant::LL);
    r.evaluated[i] = true;
    if (permutations == 0) return;
    std::vector<std::size_t> pool;
    pool.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) pool.push_back(j);
    }
    Rng rng(derive_seed(seed, i));
    const double obs = std::abs(r.local_i[i]);
    std::size_t extreme = 0;
    const std::size_t k = row.size();
    for (std::size_t p = 0; p < permutations; ++p) {
      double perm_lag = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        const std::size_t pick = s + rng.index(pool.size() - s);
        std::swap(pool[s], pool[pick]);
        perm_lag += row[s].w * z[pool[s]];
      }
      if (std::abs(z[i] / m2 * perm_lag) >= obs) ++extreme;
    }
    r.pseudo_p[i] = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
    sig[i] = r.pseudo_p[i] <= alpha;
  });
  for (std::size_t i = 0; i < n; ++i) r.significant[i] = sig[i] != 0;
  return r;
}

JenksResult fisher_jenks(std::span<const double> values, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::vector<double> mult;
  for (double v : sorted) {
    if (!std::isfinite(v)) throw Error(ErrorCode::MissingValues, "non-finite value");
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      mult.push_back(1.0);
    } else {
      mult.back() += 1.0;
    }
  }
  const std::size_t m = distinct.size();
  if (m < k) {
    throw Error(ErrorCode::TooFewDistinct,
                std::to_string(m) + " distinct values for " + std::to_string(k) + " classes");
  }
  // Prefix sums around a shift to limit cancellation.
  const double shift = distinct[m / 2];
  std::vector<double> cw(m + 1, 0.0), cs(m + 1, 0.0), cq(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = distinct[i] - shift;
    cw[i + 1] = cw[i] + mult[i];
    cs[i + 1] = cs[i] + mult[i] * v;
    cq[i + 1] = cq[i] + mult[i] * v * v;
  }
  auto cost = [&](std::size_t a, std::size_t b) {  // distinct[a, b)
    const double w = cw[b] - cw[a];
    const double s = cs[b] - cs[a];
    return std::max(0.0, (cq[b] - cq[a]) - s * s / w);
  };
  const double inf = std::numeric_limits<double>::infinity();
  // best[c][j]: min cost of splitting distinct[0, j) into c classes.
  std::vector<std::vector<double>> best(k + 1, std::vector<double>(m + 1, inf));
  std::vector<std::vector<std::size_t>> cut(k + 1, std::vector<std::size_t>(m + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t c = 1; c <= k; ++c) {
    for (std::size_t j = c; j <= m - (k - c); ++j) {
      for (std::size_t i = c - 1; i < j; ++i) {
        if (best[c - 1][i] == inf) continue;
        const double v = best[c - 1][i] + cost(i, j);
        if (v < best[c][j]) {
          best[c][j] = v;
          cut[c][j] = i;
        }
      }
    }
  }
  std::vector<std::size_t> starts(k);
  std::size_t j = m;
  for (std::size_t c = k; c >= 1; --c) {
    starts[c - 1] = cut[c][j];
    j = cut[c][j];
  }
  JenksResult out;
  out.breaks.push_back(distinct.front());
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t end = c + 1 < k ? starts[c + 1] : m;
    out.breaks.push_back(distinct[end - 1]);
  }
  out.labels.reserve(values.size());
  for (double v : values) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
    const auto cls = std::upper_bound(starts.begin(), starts.end(), pos) - starts.begin() - 1;
    out.labels.push_back(static_cast<int>(cls));
  }
  out.within_ss = within_class_ss(values, out.labels);
  return out;
}

double within_class_ss(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) throw Error(ErrorCode::RowMismatch, "labels do not cover the values");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<double> count(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[static_cast<std::size_t>(labels[i])] += values[i];
    count[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const double d = values[i] - sum[c] / count[c];
    ss += d * d;
  }
  return ss;
}

nlohmann::json to_json(const MoranTest& t) {
  return {{"I", t.i},           {"expected", t.expected}, {"pseudo_p", t.pseudo_p},
          {"permutations", t.permutations}, {"seed", t.seed}, {"perm_mean", t.perm_mean},
          {"perm_sd", t.perm_sd}, {"perm_min", t.perm_min}, {"perm_max", t.perm_max}, {"z", t.z}};
}

MoranTest moran_test_from_json(const nlohmann::json& j) {
  MoranTest t;
  t.i = j.at("I").get<double>();
  t.expected = j.at("expected").get<double>();
  t.pseudo_p = j.at("pseudo_p").get<double>();
  t.permutations = j.at("permutations").get<std::size_t>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.perm_mean = j.at("perm_mean").get<double>();
  t.perm_sd = j.at("perm_sd").get<double>();
  t.perm_min = j.at("perm_min").get<double>();
  t.perm_max = j.at("perm_max").get<double>();
  t.z = j.at("z").get<double>();
  return t;
}

}  // namespace vulnatlas::spatial
