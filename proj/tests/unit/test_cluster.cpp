#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "vulnatlas/cluster.hpp"
#include "vulnatlas/random.hpp"

using namespace vulnatlas;
using namespace vulnatlas::cluster;

namespace {

struct Planted {
  FeatureMatrix m;
  std::vector<int> labels;
};

Planted clouds(std::size_t k, std::size_t per, std::uint64_t seed, double spread = 10.0, double sd = 0.5) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t c = 0; c < k; ++c) {
    const double cx = spread * static_cast<double>(c % 2), cy = spread * static_cast<double>(c / 2);
    for (std::size_t i = 0; i < per; ++i) {
      rows.push_back({cx + rng.normal(0, sd), cy + rng.normal(0, sd), rng.normal(0, sd)});
      labels.push_back(static_cast<int>(c));
    }
  }
  return {FeatureMatrix::from_rows(rows), labels};
}

double total_ss(const FeatureMatrix& m) {
  double s = 0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m.at(r, c);
    mean /= static_cast<double>(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) s += (m.at(r, c) - mean) * (m.at(r, c) - mean);
  }
  return s;
}

}  // namespace

TEST_CASE("standardize") {
  TractFrame f({"a", "b", "c", "d"});
  f.add_column({"x", ColumnKind::RatePercent, "t", {1.0, 2.0, 3.0, 4.0}, {}});
  f.add_column({"k", ColumnKind::RatePercent, "t", {5.0, 5.0, 5.0, 5.0}, {}});
  std::vector<std::string> x{"x"};
  auto m = standardize(f, x);
  double sum = 0, sq = 0;
  for (std::size_t r = 0; r < 4; ++r) {
    sum += m.at(r, 0);
    sq += m.at(r, 0) * m.at(r, 0);
  }
  CHECK(std::abs(sum) < 1e-12);
  CHECK(sq / 4 == doctest::Approx(1.0));
  std::vector<std::string> k{"x", "k"};
  CHECK_CODE(standardize(f, k), ErrorCode::DegenerateFeatures);
  CHECK(default_features().size() == 12);
}

TEST_CASE("kmeans") {
  auto two = clouds(2, 40, 17);
  auto model = kmeans_fit(two.m, 2, 42);
  CHECK(agreement(model.assignments, two.labels).adjusted_rand == 1.0);

  auto one = kmeans_fit(two.m, 1, 1);
  CHECK(one.wcss == doctest::Approx(total_ss(two.m)).epsilon(1e-12));
  for (std::size_t c = 0; c < two.m.cols(); ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < two.m.rows(); ++r) mean += two.m.at(r, c);
    CHECK(one.centroids[0][c] == doctest::Approx(mean / 80.0));
  }

  auto small = FeatureMatrix::from_rows({{0, 0}, {1, 0}, {5, 5}, {9, 1}});
  auto all = kmeans_fit(small, 4, 3);
  CHECK(all.wcss == doctest::Approx(0.0));
  CHECK(std::set<int>(all.assignments.begin(), all.assignments.end()).size() == 4);

  CHECK_CODE(kmeans_fit(small, 5, 1), ErrorCode::KTooLarge);
  CHECK_CODE(kmeans_fit(small, 0, 1), ErrorCode::KTooLarge);
  auto constant = FeatureMatrix::from_rows({{1, 2}, {1, 3}, {1, 4}});
  CHECK_CODE(kmeans_fit(constant, 2, 1), ErrorCode::DegenerateFeatures);

  KMeansOptions par;
  par.workers = 4;
  auto p = kmeans_fit(two.m, 2, 42, par);
  CHECK(p.assignments == model.assignments);
  CHECK(p.wcss == model.wcss);

  CHECK(model.wcss == doctest::Approx(wcss(two.m, model.assignments, model.centroids)));
  for (std::size_t i = 1; i < model.wcss_history.size(); ++i)
    CHECK(model.wcss_history[i] <= model.wcss_history[i - 1] + 1e-9);
}

TEST_CASE("wcss curve") {
  auto four = clouds(4, 25, 23);
  auto curve = wcss_curve(four.m, 1, 8, 9);
  REQUIRE(curve.size() == 8);
  CHECK(curve[0].second == doctest::Approx(total_ss(four.m)).epsilon(1e-12));
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second <= curve[i - 1].second + 1e-9);
  std::size_t best = 0;
  double best_drop = -1;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double drop = (curve[i - 1].second - curve[i].second) / curve[i - 1].second;
    if (drop > best_drop) {
      best_drop = drop;
      best = curve[i].first;
    }
  }
  // the elbow: the drop into k = 4 is large, the drop after it is small
  const double into4 = (curve[2].second - curve[3].second) / curve[2].second;
  const double after4 = (curve[3].second - curve[4].second) / curve[3].second;
  CHECK(into4 > 5 * after4);
  CHECK(best == 4);
}

TEST_CASE("silhouette") {
  auto pts = FeatureMatrix::from_rows({{0.0}, {1.0}, {3.0}});
  std::vector<int> a{0, 1, 1};
  auto s = silhouette(pts, a);
  // point 0 singleton -> 0; point 1: a=2, b=1 -> -0.5; point 2: a=2, b=3 -> 1/3
  CHECK(s.per_point[0] == 0.0);
  CHECK(s.per_point[1] == doctest::Approx(-0.5));
  CHECK(s.per_point[2] == doctest::Approx(1.0 / 3.0));
  CHECK(s.mean == doctest::Approx((-0.5 + 1.0 / 3.0) / 3.0));

  auto two = clouds(2, 30, 4, 50.0, 0.5);
  CHECK(silhouette(two.m, two.labels).mean > 0.9);
  std::vector<int> single(60, 0);
  CHECK_CODE(silhouette(two.m, single), ErrorCode::SingleCluster);
}

TEST_CASE("model selection") {
  auto four = clouds(4, 25, 31);
  auto sel = select_k(four.m, 2, 10, 77);
  CHECK(sel.k_best == 4);
  REQUIRE(sel.table.size() == 9);
  CHECK(sel.table.front().k == 2);
  CHECK(sel.table.back().k == 10);

  auto two = clouds(2, 30, 8, 30.0);
  CHECK(select_k(two.m, 2, 6, 5).k_best == 2);

  auto tie = FeatureMatrix::from_rows({{0, 0}, {0, 0.001}, {10, 0}, {10, 0.001}, {0, 10}, {0, 10.001}});
  auto t = select_k(tie, 2, 3, 1);
  CHECK(t.k_best == 3);
  auto rt = selection_from_json(to_json(sel));
  CHECK(rt.k_best == sel.k_best);
  CHECK(rt.table.size() == sel.table.size());
}

TEST_CASE("ward linkage") {
  auto pts = FeatureMatrix::from_rows({{0.0}, {1.0}, {10.0}, {11.0}});
  auto tree = ward_linkage(pts);
  REQUIRE(tree.merges.size() == 3);
  std::set<std::size_t> first{tree.merges[0].a, tree.merges[0].b};
  std::set<std::size_t> second{tree.merges[1].a, tree.merges[1].b};
  CHECK(((first == std::set<std::size_t>{0, 1} && second == std::set<std::size_t>{2, 3}) ||
         (first == std::set<std::size_t>{2, 3} && second == std::set<std::size_t>{0, 1})));
  CHECK(tree.merges[0].height == doctest::Approx(1.0));
  // 2 |A||B| / (|A| + |B|) * |cA - cB|^2 = 200
  CHECK(tree.merges[2].height == doctest::Approx(std::sqrt(200.0)));
  CHECK(tree.merges[2].size == 4);

  auto cut = cut_tree(tree, 2);
  CHECK(cut == std::vector<int>{0, 0, 1, 1});
  auto one = cut_tree(tree, 1);
  CHECK(one == std::vector<int>{0, 0, 0, 0});
  auto singletons = cut_tree(tree, 4);
  CHECK(singletons == std::vector<int>{0, 1, 2, 3});
  CHECK_CODE(cut_tree(tree, 5), ErrorCode::KTooLarge);

  auto dup = FeatureMatrix::from_rows({{2.0, 1.0}, {2.0, 1.0}, {5.0, 7.0}});
  CHECK(ward_linkage(dup).merges[0].height == 0.0);

  auto cloud = clouds(3, 20, 12, 4.0, 1.5);
  auto big = ward_linkage(cloud.m);
  for (std::size_t i = 1; i < big.merges.size(); ++i) CHECK(big.merges[i].height >= big.merges[i - 1].height - 1e-12);
}

TEST_CASE("ward matches brute force on small inputs") {
  // exhaustive Ward: at each step merge the pair minimising the increase in within-cluster SS
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> rows(9, std::vector<double>(2));
    for (auto& r : rows)
      for (auto& v : r) v = rng.normal();
    auto m = FeatureMatrix::from_rows(rows);
    auto tree = ward_linkage(m);
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < rows.size(); ++i) clusters.push_back({i});
    auto ss = [&](const std::vector<std::size_t>& c) {
      double s = 0;
      for (std::size_t d = 0; d < 2; ++d) {
        double mean = 0;
        for (auto i : c) mean += rows[i][d];
        mean /= static_cast<double>(c.size());
        for (auto i : c) s += (rows[i][d] - mean) * (rows[i][d] - mean);
      }
      return s;
    };
    for (std::size_t step = 0; step + 1 < rows.size(); ++step) {
      double best = 1e300;
      std::size_t ba = 0, bb = 0;
      for (std::size_t a = 0; a < clusters.size(); ++a)
        for (std::size_t b = a + 1; b < clusters.size(); ++b) {
          auto u = clusters[a];
          u.insert(u.end(), clusters[b].begin(), clusters[b].end());
          const double inc = ss(u) - ss(clusters[a]) - ss(clusters[b]);
          if (inc < best) {
            best = inc;
            ba = a;
            bb = b;
          }
        }
      CHECK(tree.merges[step].height == doctest::Approx(std::sqrt(2.0 * best)).epsilon(1e-9));
      clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
      clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    }
  }
}

TEST_CASE("profile, agreement, canonical order") {
  TractFrame f({"a", "b", "c", "d", "e"});
  f.add_column({"x", ColumnKind::RatePercent, "t", {1.0, 2.0, 3.0, 10.0, 20.0}, {}});
  std::vector<std::string> vars{"x"};
  std::vector<int> single(5, 0);
  auto p1 = cluster_profile(f, single, vars);
  CHECK(p1.means[0][0] == doctest::Approx(7.2));
  std::vector<int> split{0, 0, 0, 1, 1};
  auto p2 = cluster_profile(f, split, vars);
  CHECK(p2.sizes == std::vector<std::size_t>{3, 2});
  const double recombined = (p2.means[0][0] * 3 + p2.means[1][0] * 2) / 5;
  CHECK(std::abs(recombined - 7.2) < 1e-9);
  auto rt = profile_from_json(to_json(p2));
  CHECK(rt.means == p2.means);

  std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(agreement(a, a).adjusted_rand == 1.0);
  std::vector<int> perm{2, 2, 0, 0, 1, 1};
  CHECK(agreement(a, perm).adjusted_rand == doctest::Approx(1.0));
  // contingency [[2,1,0],[0,1,2]]: sum C(nij,2)=2, rows 3+3, cols 1+1+1
  // expected = 6*3/15 = 1.2, max = 4.5 -> (2-1.2)/(4.5-1.2) = 0.2424...
  std::vector<int> x{0, 0, 0, 1, 1, 1}, y{0, 0, 1, 1, 2, 2};
  auto g = agreement(x, y);
  CHECK(g.adjusted_rand == doctest::Approx(0.8 / 3.3).epsilon(1e-12));
  CHECK(g.adjusted_rand == doctest::Approx(0.24242424242424243).epsilon(1e-12));
  CHECK(g.contingency[0][1] == 1);
  CHECK_CODE(agreement(x, std::vector<int>{0, 1}), ErrorCode::RowMismatch);

  std::vector<double> key{1, 1, 1, 9, 9};
  auto map = canonical_order(split, key);
  CHECK(map[1] == 0);
  CHECK(map[0] == 1);
}

TEST_CASE("model json round trip") {
  auto two = clouds(2, 10, 2);
  auto model = kmeans_fit(two.m, 2, 9);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < two.m.rows(); ++i) ids.push_back("g" + std::to_string(i));
  auto rt = model_from_json(to_json(model, ids));
  CHECK(rt.assignments == model.assignments);
  CHECK(rt.centroids == model.centroids);
  CHECK(rt.wcss == model.wcss);

  ClusterModel w;
  w.method = Method::Ward;
  w.k = 2;
  w.tree = ward_linkage(two.m);
  w.assignments = cut_tree(w.tree, 2);
  auto wr = model_from_json(to_json(w, ids));
  CHECK(wr.method == Method::Ward);
  CHECK(wr.tree.merges.size() == w.tree.merges.size());
}
