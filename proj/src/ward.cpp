#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vulnatlas/cluster.hpp"
#include "vulnatlas/error.hpp"

namespace vulnatlas::cluster {

// Lance-Williams update on squared Euclidean distances with a cached
// nearest neighbour per active slot. Slot i holds cluster id[i].
MergeTree ward_linkage(const FeatureMatrix& m) {
  const std::size_t n = m.rows();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "ward linkage needs at least two rows");
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const double t = m.at(i, c) - m.at(j, c);
        s += t * t;
      }
      d[i * n + j] = d[j * n + i] = s;
    }
  }
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::vector<std::size_t> nn(n, 0);
  std::vector<double> nnd(n, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  auto refresh = [&](std::size_t i) {
    nnd[i] = inf;
    nn[i] = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && active[j] && d[i * n + j] < nnd[i]) {
        nnd[i] = d[i * n + j];
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  MergeTree tree;
  tree.n = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && (a == n || nnd[i] < nnd[a])) a = i;
    }
    std::size_t b = nn[a];
    if (b < a) std::swap(a, b);
    const double dab = d[a * n + b];
    const double na = static_cast<double>(size[a]);
    const double nb = static_cast<double>(size[b]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double nk = static_cast<double>(size[k]);
      const double v = ((na + nk) * d[a * n + k] + (nb + nk) * d[b * n + k] - nk * dab) / (na + nb + nk);
      d[a * n + k] = d[k * n + a] = std::max(v, 0.0);
    }
    active[b] = false;
    const std::size_t lo = std::min(id[a], id[b]);
    const std::size_t hi = std::max(id[a], id[b]);
    size[a] += size[b];
    tree.merges.push_back({lo, hi, std::sqrt(std::max(dab, 0.0)), size[a]});
    id[a] = n + step;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) continue;
      if (k == a || nn[k] == a || nn[k] == b) {
        refresh(k);
      } else if (d[k * n + a] < nnd[k]) {
        nnd[k] = d[k * n + a];
        nn[k] = a;
      }
    }
  }
  return tree;
}

std::vector<int> cut_tree(const MergeTree& tree, std::size_t k) {
  const std::size_t n = tree.n;
  if (k == 0 || k > n) throw Error(ErrorCode::KTooLarge, "cut at k = " + std::to_string(k));
  std::vector<std::size_t> parent(2 * n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t s = 0; s < n - k; ++s) {
    const auto& mg = tree.merges[s];
    parent[find(mg.a)] = n + s;
    parent[find(mg.b)] = n + s;
  }
  std::vector<int> labels(n);
  std::vector<std::pair<std::size_t, int>> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == root; });
    if (it == seen.end()) {
      seen.emplace_back(root, static_cast<int>(seen.size()));
      labels[i] = seen.back().second;
    } else {
      labels[i] = it->second;
    }
  }
  return labels;
}

}  // namespace vulnatlas::cluster
