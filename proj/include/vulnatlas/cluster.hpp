#pragma once

// Neighborhood typology discovery: k-means with silhouette model selection,
// Ward hierarchical clustering, cluster profiles and cross-method agreement.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnatlas/frame.hpp"

namespace vulnatlas::cluster {

/// Row-major observation matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> row_keys, std::vector<std::string> feature_names,
                std::vector<double> values);
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return row_keys_.size(); }
  std::size_t cols() const { return feature_names_.size(); }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols(), cols());
  }
  const std::vector<std::string>& row_keys() const { return row_keys_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

 private:
  std::vector<std::string> row_keys_;
  std::vector<std::string> feature_names_;
  std::vector<double> values_;
};

/// z-scores (population sd) each listed column of the frame.
/// Throws MissingValues for incomplete columns and DegenerateFeatures for constant ones.
FeatureMatrix standardize(const TractFrame& frame, std::span<const std::string> features);

/// The default 12-variable clustering feature set.
std::vector<std::string> default_features();

enum class Method { KMeans, Ward };

struct Merge {
  std::size_t a;  // ids < n are observations; n + i is the cluster formed by merge i
  std::size_t b;
  double height;  // sqrt of the Lance-Williams squared-Euclidean Ward distance
  std::size_t size;
};

struct MergeTree {
  std::size_t n = 0;
  std::vector<Merge> merges;
};

struct ClusterModel {
  Method method = Method::KMeans;
  std::size_t k = 0;
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;  // k-means only
  MergeTree tree;                              // ward only
  double wcss = 0.0;
  std::optional<double> silhouette;
  std::uint64_t seed = 0;
  std::vector<double> wcss_history;  // per Lloyd iteration of the winning restart
};

struct KMeansOptions {
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  unsigned workers = 1;
};

/// Best of n_init k-means++ / Lloyd runs by WCSS. Restart r draws from
/// derive_seed(seed, r), so the result is independent of `workers`.
/// `warm_start`, when given, is tried as one extra initialization.
ClusterModel kmeans_fit(const FeatureMatrix& m, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options = {},
                        const std::vector<std::vector<double>>* warm_start = nullptr);

double wcss(const FeatureMatrix& m, std::span<const int> assignments,
            const std::vector<std::vector<double>>& centroids);

/// Best model per k. Each k > k_min also tries the (k-1) solution plus its
/// worst-fit point as an initialization, so the curve is non-increasing.
std::vector<ClusterModel> wcss_models(const FeatureMatrix& m, std::size_t k_min, std::size_t k_max,
                                      std::uint64_t seed, const KMeansOptions& options = {});
std::vector<std::pair<std::size_t, double>> wcss_curve(const FeatureMatrix& m, std::size_t k_min,
                                                       std::size_t k_max, std::uint64_t seed,
                                                       const KMeansOptions& options = {});

struct Silhouette {
  double mean = 0.0;
  std::vector<double> per_point;
};
Silhouette silhouette(const FeatureMatrix& m, std::span<const int> assignments);

struct KSelectionRow {
  std::size_t k;
  double wcss;
  double silhouette;
};

struct KSelection {
  std::size_t k_best = 0;
  std::vector<KSelectionRow> table;
  std::vector<ClusterModel> models;  // aligned with table
};

/// argmax of mean silhouette over k in [k_min, k_max]; ties go to the smaller k.
KSelection select_k(const FeatureMatrix& m, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                    const KMeansOptions& options = {});

MergeTree ward_linkage(const FeatureMatrix& m);
/// Undoes the last k - 1 merges. Labels follow first appearance in row order.
std::vector<int> cut_tree(const MergeTree& tree, std::size_t k);

struct ClusterProfile {
  std::vector<std::string> variables;
  std::vector<std::vector<double>> means;  // [cluster][variable], missing entries skipped
  std::vector<std::size_t> sizes;
};

ClusterProfile cluster_profile(const TractFrame& frame, std::span<const int> assignments,
                               std::span<const std::string> variables);

struct Agreement {
  std::vector<std::vector<std::size_t>> contingency;  // [label in a][label in b]
  double adjusted_rand = 1.0;
};
Agreement agreement(std::span<const int> a, std::span<const int> b);

/// Relabels clusters by descending mean of `key` (cluster 0 = highest mean).
/// Returns the old-to-new label map.
std::vector<int> canonical_order(std::span<const int> assignments, std::span<const double> key);
void relabel(ClusterModel& model, const std::vector<int>& old_to_new);

nlohmann::json to_json(const ClusterModel& model, std::span<const std::string> geoids);
ClusterModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClusterProfile& p);
ClusterProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KSelection& s);
KSelection selection_from_json(const nlohmann::json& j);

}  // namespace vulnatlas::cluster
