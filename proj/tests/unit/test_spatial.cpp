#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "vulnatlas/random.hpp"
#include "vulnatlas/spatial.hpp"

using namespace vulnatlas;
using namespace vulnatlas::spatial;

namespace {

geo::NeighborGraph grid(std::size_t rows, std::size_t cols, bool queen) {
  geo::NeighborGraph g;
  g.rule = queen ? geo::ContiguityRule::Queen : geo::ContiguityRule::Rook;
  g.adjacency.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      g.node_ids.push_back(std::to_string(r * cols + c));
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (!queen && dr != 0 && dc != 0) continue;
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
          g.adjacency[r * cols + c].push_back(static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc));
        }
      std::sort(g.adjacency[r * cols + c].begin(), g.adjacency[r * cols + c].end());
    }
  return g;
}

double brute_moran(const std::vector<double>& x, const SpatialWeights& w) {
  const std::size_t n = x.size();
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double num = 0, den = 0, s0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w.weight(i, j);
      s0 += wij;
      num += wij * (x[i] - mean) * (x[j] - mean);
    }
  }
  return static_cast<double>(n) / s0 * num / den;
}

}  // namespace

TEST_CASE("weights") {
  auto g = grid(3, 3, false);
  SpatialWeights b(g, WeightMode::Binary);
  CHECK(b.s0() == 24.0);
  CHECK(b.weight(0, 1) == 1.0);
  CHECK(b.weight(0, 4) == 0.0);
  SpatialWeights r(g, WeightMode::RowStandardized);
  CHECK(r.s0() == doctest::Approx(9.0));
  CHECK(r.weight(4, 1) == doctest::Approx(0.25));
}

TEST_CASE("global moran") {
  auto g = grid(4, 4, false);
  SpatialWeights w(g, WeightMode::Binary);
  std::vector<double> checker(16), halves(16);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      checker[r * 4 + c] = (r + c) % 2 ? 1.0 : 0.0;
      halves[r * 4 + c] = c < 2 ? 10.0 : 1.0;
    }
  const double ic = morans_i(checker, w);
  CHECK(ic < 0.0);
  CHECK(ic == doctest::Approx(-1.0));
  CHECK(std::abs(ic - brute_moran(checker, w)) < 1e-12);
  const double ih = morans_i(halves, w);
  CHECK(ih > 0.0);
  CHECK(std::abs(ih - brute_moran(halves, w)) < 1e-12);
  CHECK_CODE(morans_i(std::vector<double>(16, 3.0), w), ErrorCode::ZeroVariance);
  CHECK_CODE(morans_i(std::vector<double>(15, 3.0), w), ErrorCode::RowMismatch);

  geo::NeighborGraph lonely;
  lonely.node_ids = {"a", "b", "c"};
  lonely.adjacency = {{}, {}, {}};
  SpatialWeights none(lonely, WeightMode::Binary);
  CHECK_CODE(morans_i(std::vector<double>{1, 2, 3}, none), ErrorCode::AllIslands);
}

TEST_CASE("moran permutation test") {
  auto g = grid(10, 10, true);
  SpatialWeights w(g, WeightMode::RowStandardized);
  std::vector<double> gradient(100), noise(100);
  Rng rng(2024);
  for (std::size_t i = 0; i < 100; ++i) {
    gradient[i] = static_cast<double>(i / 10) + static_cast<double>(i % 10);
    noise[i] = rng.normal();
  }
  auto strong = morans_i_test(gradient, w, 999, 7);
  CHECK(strong.pseudo_p == doctest::Approx(1.0 / 1000.0));
  CHECK(strong.expected == doctest::Approx(-1.0 / 99.0));
  CHECK(strong.perm_min <= strong.perm_max);
  auto flat = morans_i_test(noise, w, 999, 7);
  // the folded one-sided p is roughly uniform on (0, 0.5] under noise
  std::size_t low = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng r(derive_seed(500, s));
    std::vector<double> x(100);
    for (auto& v : x) v = r.normal();
    low += morans_i_test(x, w, 199, s).pseudo_p <= 0.05;
  }
  CHECK(low <= 20);
  std::vector<double> quiet(100);
  Rng rq(31);
  for (auto& v : quiet) v = rq.normal();
  CHECK(morans_i_test(quiet, w, 999, 7).pseudo_p > 0.05);
  auto again = morans_i_test(noise, w, 999, 7, 4);
  CHECK(again.pseudo_p == flat.pseudo_p);
  CHECK(again.perm_mean == flat.perm_mean);
  auto rt = moran_test_from_json(to_json(flat));
  CHECK(rt.i == flat.i);
  CHECK(rt.seed == flat.seed);
}

TEST_CASE("local moran") {
  auto g = grid(5, 5, true);
  SpatialWeights w(g, WeightMode::RowStandardized);
  std::vector<double> v(25, 0.0);
  for (std::size_t i : {0u, 1u, 5u, 6u}) v[i] = 10.0;
  auto lisa = local_moran(v, w, 199, 3);
  CHECK(lisa.quadrant[0] == Quadrant::HH);
  CHECK(lisa.quadrant[24] == Quadrant::LL);
  double sum = 0;
  for (double x : lisa.local_i) sum += x;
  CHECK(std::abs(sum - w.s0() * morans_i(v, w)) < 1e-9);
  auto par = local_moran(v, w, 199, 3, 0.05, 3);
  CHECK(par.pseudo_p == lisa.pseudo_p);

  geo::NeighborGraph with_island = grid(2, 2, true);
  with_island.node_ids.push_back("island");
  with_island.adjacency.push_back({});
  SpatialWeights wi(with_island, WeightMode::RowStandardized);
  auto li = local_moran(std::vector<double>{1, 2, 3, 4, 5}, wi, 99, 1);
  CHECK_FALSE(li.evaluated[4]);
  CHECK(std::isnan(li.pseudo_p[4]));
  CHECK_FALSE(li.significant[4]);
  CHECK(li.quadrant[4] == Quadrant::None);
  CHECK(to_string(Quadrant::HL) == "HL");
}

TEST_CASE("fisher jenks") {
  std::vector<double> v{1, 2, 3, 11, 12, 13};
  auto two = fisher_jenks(v, 2);
  CHECK(two.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
  CHECK(two.breaks == std::vector<double>{1, 3, 13});
  CHECK(two.within_ss == doctest::Approx(4.0));

  auto one = fisher_jenks(v, 1);
  CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 0; }));

  std::vector<double> dup{4, 1, 4, 9, 1, 9};
  auto exact = fisher_jenks(dup, 3);
  CHECK(exact.within_ss == 0.0);
  CHECK(exact.labels == std::vector<int>{1, 0, 1, 2, 0, 2});
  CHECK_CODE(fisher_jenks(dup, 4), ErrorCode::TooFewDistinct);
  CHECK_CODE(fisher_jenks(dup, 0), ErrorCode::InvalidArgument);
  CHECK(within_class_ss(v, two.labels) == doctest::Approx(two.within_ss));
}
