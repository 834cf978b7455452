#include <regex>

#include "helpers.hpp"
#include "vulnatlas/report.hpp"
#include "vulnatlas/svg.hpp"

using namespace vulnatlas;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

struct Grid {
  std::vector<geo::MultiPolygon> shapes;
  std::vector<std::string> ids;
};

Grid grid(std::size_t n) {
  Grid g;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i % 5) * 100.0, y = static_cast<double>(i / 5) * 100.0;
    g.shapes.push_back(geo::rectangle(x, y, x + 100, y + 100));
    g.ids.push_back("3708100" + std::to_string(1000 + i));
  }
  return g;
}

}  // namespace

TEST_CASE("choropleth") {
  auto g = grid(20);
  std::vector<double> v(20);
  for (std::size_t i = 0; i < 20; ++i) v[i] = static_cast<double>(i * i);
  auto svg = svg::render_choropleth(g.shapes, g.ids, v, {5, "Composite", 800.0});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count(svg, "<path id=\"t") == 20);
  CHECK(count(svg, "class=\"legend\"") == 5);
  CHECK(svg == svg::render_choropleth(g.shapes, g.ids, v, {5, "Composite", 800.0}));

  std::vector<double> flat(20, 3.0);
  auto one = svg::render_choropleth(g.shapes, g.ids, flat, {5, "Flat", 800.0});
  CHECK(count(one, "class=\"legend\"") == 1);
  CHECK(one.find("single class") != std::string::npos);
}

TEST_CASE("scatter") {
  std::vector<double> x{1, 2, 3, 4, 5, 6}, y{2, 4, 6, 8, 10, 12};
  auto with = svg::render_scatter(x, y, {"t", "x", "y", true, 0.5});
  CHECK(with.find("r = 1.00") != std::string::npos);
  CHECK(count(with, "class=\"lowess\"") == 1);
  CHECK(count(with, "<circle") == 6);
  svg::ScatterOptions off{"t", "x", "y", false};
  CHECK(svg::render_scatter(x, y, off).find("lowess") == std::string::npos);
  std::vector<double> x4{1, 2, 3, 4}, y4{1, 3, 2, 4};
  CHECK_CODE(svg::render_scatter(x4, y4), ErrorCode::TooFewPoints);
}

TEST_CASE("categorical map and palette") {
  auto g = grid(10);
  std::vector<int> a{0, 1, 2, -1, 0, 1, 2, 0, 1, 2};
  std::vector<svg::Category> cats{{"A", "#ff0000"}, {"B", "#00ff00"}, {"C & D", "#0000ff"}};
  auto s = svg::render_categorical(g.shapes, g.ids, a, cats, "Clusters");
  CHECK(count(s, "<path id=\"t") == 10);
  CHECK(s.find("C &amp; D") != std::string::npos);
  CHECK(svg::sequential_palette(5).size() == 5);
  CHECK(svg::xml_escape("<a>\"'&") == "&lt;a&gt;&quot;&apos;&amp;");
}

TEST_CASE("tables") {
  cluster::ClusterProfile p;
  p.variables = {"poverty_pct", "median_rent"};
  p.means = {{40.0, 900.0}, {10.0, 1200.0}};
  p.sizes = {3, 5};
  auto csv_text = report::profile_csv(p);
  CHECK(csv_text.rfind("variable,cluster_1,cluster_2\n", 0) == 0);
  CHECK(csv_text.find("\nsize,3,5\n") != std::string::npos);

  std::vector<stats::VifResult> v{{"a", 1.5, false}, {"b", std::numeric_limits<double>::infinity(), true}};
  auto rt = report::vif_from_json(report::to_json(v));
  CHECK(rt[0].value == 1.5);
  CHECK(rt[1].infinite);

  stats::EjOutcome ok{"x", stats::GroupComparison{"x", stats::TestKind::WelchT, 2.0, 1.0, 3, 4, 2.5, 4.1, 0.03}, ""};
  stats::EjOutcome skipped{"y", std::nullopt, "ZeroVariance"};
  auto ej = report::ej_csv({ok, skipped});
  CHECK(ej.rfind("variable,test,mean_high,mean_rest,n_high,n_rest,statistic,df,p_value,note\n", 0) == 0);
  CHECK(ej.find("ZeroVariance") != std::string::npos);
}

TEST_CASE("frame persistence") {
  auto dir = testutil::scratch("frame");
  TractFrame f({"37081000100", "37081000200"});
  f.add_column({"x", ColumnKind::RatePercent, "acs", {0.1, std::nullopt}, {}});
  f.add_column({"lab", ColumnKind::Categorical, "acs", {}, {std::string("yes"), std::nullopt}});
  report::save_frame(dir, "f", f);
  auto back = report::load_frame(dir, "f");
  CHECK(back.geoids() == f.geoids());
  CHECK(*back.column("x").numbers[0] == 0.1);
  CHECK_FALSE(back.column("x").numbers[1].has_value());
  CHECK(back.column("lab").is_categorical());
  CHECK(*back.column("lab").labels[0] == "yes");
}
