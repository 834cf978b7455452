#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vulnatlas/cluster.hpp"
#include "vulnatlas/config.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/geomesh.hpp"
#include "vulnatlas/indices.hpp"
#include "vulnatlas/ingest.hpp"
#include "vulnatlas/pipeline.hpp"
#include "vulnatlas/preprocess.hpp"
#include "vulnatlas/spatial.hpp"
#include "vulnatlas/stats.hpp"
#include "vulnatlas/synth.hpp"

namespace py = pybind11;
using namespace vulnatlas;

namespace {

using Rows = std::vector<std::vector<double>>;
using Adjacency = std::vector<std::vector<std::size_t>>;

geo::NeighborGraph graph_from(const Adjacency& adjacency) {
  geo::NeighborGraph g;
  g.adjacency = adjacency;
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    g.node_ids.push_back(std::to_string(i));
    std::sort(g.adjacency[i].begin(), g.adjacency[i].end());
    for (std::size_t j : adjacency[i]) {
      if (j >= adjacency.size()) throw Error(ErrorCode::InvalidArgument, "neighbour index out of range");
    }
  }
  return g;
}

spatial::WeightMode mode_from(const std::string& mode) {
  if (mode == "binary") return spatial::WeightMode::Binary;
  if (mode == "row_standardized") return spatial::WeightMode::RowStandardized;
  throw Error(ErrorCode::InvalidArgument, "mode must be binary or row_standardized");
}

geo::MultiPolygon polygon_from(const std::vector<std::pair<double, double>>& ring) {
  geo::Ring r;
  for (const auto& [x, y] : ring) r.push_back({x, y});
  return geo::MultiPolygon(geo::GeoPolygon(r, {}, geo::Crs::Projected_WebMercator));
}

py::dict comparison(const stats::GroupComparison& g) {
  py::dict d;
  d["statistic"] = g.statistic;
  d["df"] = g.df;
  d["p_value"] = g.p_value;
  d["n_high"] = g.n_high;
  d["n_rest"] = g.n_rest;
  return d;
}

py::dict model_dict(const cluster::ClusterModel& m) {
  py::dict d;
  d["k"] = m.k;
  d["assignments"] = m.assignments;
  d["centroids"] = m.centroids;
  d["wcss"] = m.wcss;
  d["wcss_history"] = m.wcss_history;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tract-level climate vulnerability assessment";
  m.attr("__version__") = VULNATLAS_VERSION;
  static py::exception<Error> exc(m, "VulnatlasError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = exc;
      PyErr_SetObject(err.ptr(), py::make_tuple(std::string(to_string(e.code())), e.detail()).ptr());
    }
  });

  m.def("project_point", [](double lon, double lat) {
    const auto p = geo::project_point(lon, lat);
    return std::make_pair(p.x, p.y);
  });
  m.def("polygon_area", [](const std::vector<std::pair<double, double>>& ring) {
    return geo::polygon_area(polygon_from(ring));
  });
  m.def("flood_exposure",
        [](const std::vector<std::pair<double, double>>& tract,
           const std::vector<std::vector<std::pair<double, double>>>& flood, double buffer_m) {
          std::vector<geo::MultiPolygon> layers;
          for (const auto& r : flood) layers.push_back(polygon_from(r));
          return indices::flood_exposure(polygon_from(tract), geo::Region::buffered(layers, buffer_m));
        },
        py::arg("tract"), py::arg("flood"), py::arg("buffer_m") = 1.0);
  m.def("make_geoid", py::overload_cast<std::string_view, std::string_view, std::string_view>(&ingest::make_geoid));

  m.def("quantile", [](const std::vector<double>& x, double p) { return prep::quantile(x, p); });
  m.def("winsorize", [](const std::vector<double>& x, double lo, double hi) { return prep::winsorize(x, lo, hi); },
        py::arg("x"), py::arg("lower_pct") = 5.0, py::arg("upper_pct") = 95.0);
  m.def("tukey_fences", [](const std::vector<double>& x) { return prep::tukey_fences(x); });
  m.def("skewness", [](const std::vector<double>& x) { return prep::skewness(x); });
  m.def("shapiro_wilk", [](const std::vector<double>& x) {
    const auto r = prep::shapiro_wilk(x);
    return std::make_pair(r.w, r.p);
  });
  m.def("minmax_normalize", [](const std::vector<double>& x) { return prep::minmax_normalize(x); });
  m.def("zscore", [](const std::vector<double>& x) { return prep::zscore(x); });

  m.def("composite_index",
        [](const std::vector<double>& h, const std::vector<double>& s, double wh, double ws) {
          return indices::composite_index(h, s, indices::Weights{wh, ws});
        },
        py::arg("health"), py::arg("socio"), py::arg("w_health") = 0.6, py::arg("w_socio") = 0.4);
  m.def("top_decile", [](const std::vector<double>& v) { return indices::top_decile(v); });
  m.def("deciles", [](const std::vector<double>& v) { return indices::deciles(v); });

  m.def("pearson_r", [](const std::vector<double>& x, const std::vector<double>& y) { return stats::pearson_r(x, y); });
  m.def("welch_t", [](const std::vector<double>& a, const std::vector<double>& b) { return comparison(stats::welch_t(a, b)); });
  m.def("chi_square", [](const Rows& table) { return comparison(stats::chi_square(table)); });
  m.def("vif", [](const Rows& predictors) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < predictors.size(); ++i) names.push_back("x" + std::to_string(i));
    std::vector<double> out;
    for (const auto& r : stats::vif(predictors, names)) out.push_back(r.value);
    return out;
  });
  m.def("lowess", [](const std::vector<double>& x, const std::vector<double>& y, double frac) {
    return stats::lowess(x, y, frac);
  }, py::arg("x"), py::arg("y"), py::arg("frac") = 0.3);

  m.def("kmeans_fit",
        [](const Rows& rows, std::size_t k, std::uint64_t seed, std::size_t n_init) {
          cluster::KMeansOptions o;
          o.n_init = n_init;
          return model_dict(cluster::kmeans_fit(cluster::FeatureMatrix::from_rows(rows), k, seed, o));
        },
        py::arg("rows"), py::arg("k"), py::arg("seed") = 0, py::arg("n_init") = 10);
  m.def("silhouette", [](const Rows& rows, const std::vector<int>& labels) {
    const auto s = cluster::silhouette(cluster::FeatureMatrix::from_rows(rows), labels);
    return std::make_pair(s.mean, s.per_point);
  });
  m.def("select_k",
        [](const Rows& rows, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
          const auto sel = cluster::select_k(cluster::FeatureMatrix::from_rows(rows), k_min, k_max, seed);
          std::vector<std::tuple<std::size_t, double, double>> table;
          for (const auto& r : sel.table) table.emplace_back(r.k, r.wcss, r.silhouette);
          return std::make_pair(sel.k_best, table);
        },
        py::arg("rows"), py::arg("k_min") = 2, py::arg("k_max") = 10, py::arg("seed") = 0);
  m.def("ward_linkage", [](const Rows& rows) {
    std::vector<std::tuple<std::size_t, std::size_t, double, std::size_t>> out;
    for (const auto& mg : cluster::ward_linkage(cluster::FeatureMatrix::from_rows(rows)).merges) {
      out.emplace_back(mg.a, mg.b, mg.height, mg.size);
    }
    return out;
  });
  m.def("ward_cut", [](const Rows& rows, std::size_t k) {
    return cluster::cut_tree(cluster::ward_linkage(cluster::FeatureMatrix::from_rows(rows)), k);
  });
  m.def("adjusted_rand", [](const std::vector<int>& a, const std::vector<int>& b) {
    return cluster::agreement(a, b).adjusted_rand;
  });

  m.def("morans_i", [](const std::vector<double>& values, const Adjacency& adjacency, const std::string& mode) {
    return spatial::morans_i(values, spatial::SpatialWeights(graph_from(adjacency), mode_from(mode)));
  }, py::arg("values"), py::arg("adjacency"), py::arg("mode") = "row_standardized");
  m.def("morans_i_test",
        [](const std::vector<double>& values, const Adjacency& adjacency, std::size_t permutations, std::uint64_t seed) {
          const auto t = spatial::morans_i_test(
              values, spatial::SpatialWeights(graph_from(adjacency), spatial::WeightMode::RowStandardized),
              permutations, seed);
          return std::make_pair(t.i, t.pseudo_p);
        },
        py::arg("values"), py::arg("adjacency"), py::arg("permutations") = 999, py::arg("seed") = 0);
  m.def("local_moran",
        [](const std::vector<double>& values, const Adjacency& adjacency, std::size_t permutations, std::uint64_t seed,
           double alpha) {
          const auto r = spatial::local_moran(
              values, spatial::SpatialWeights(graph_from(adjacency), spatial::WeightMode::RowStandardized),
              permutations, seed, alpha);
          py::dict d;
          d["local_i"] = r.local_i;
          d["pseudo_p"] = r.pseudo_p;
          d["significant"] = r.significant;
          std::vector<std::string> q;
          for (auto x : r.quadrant) q.emplace_back(spatial::to_string(x));
          d["quadrant"] = q;
          return d;
        },
        py::arg("values"), py::arg("adjacency"), py::arg("permutations") = 999, py::arg("seed") = 0,
        py::arg("alpha") = 0.05);
  m.def("fisher_jenks", [](const std::vector<double>& values, std::size_t k) {
    const auto r = spatial::fisher_jenks(values, k);
    return std::make_pair(r.breaks, r.labels);
  });

  m.def("write_synthetic_city", [](const std::filesystem::path& dir, std::uint64_t seed) {
    synth::CityOptions o;
    o.seed = seed;
    const auto truth = synth::write_city(dir, o);
    return truth.typology;
  }, py::arg("dir"), py::arg("seed") = synth::CityOptions{}.seed);
  m.def("run_pipeline", [](const std::filesystem::path& config, std::optional<std::filesystem::path> out) {
    const auto cfg = pipeline::load_config(config);
    pipeline::validate(cfg, false);
    const auto result = pipeline::run_pipeline(cfg, out);
    py::dict d;
    d["ok"] = result.ok();
    d["exit_code"] = pipeline::exit_code(result);
    d["output_dir"] = result.output_dir;
    d["failed_stage"] = result.failed_stage();
    d["manifest"] = result.manifest.dump();
    return d;
  }, py::arg("config"), py::arg("out") = std::nullopt);
}
