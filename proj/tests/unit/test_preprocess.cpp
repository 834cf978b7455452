#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "vulnatlas/distributions.hpp"
#include "vulnatlas/preprocess.hpp"
#include "vulnatlas/random.hpp"

using namespace vulnatlas;
using namespace vulnatlas::prep;

namespace {

double brute_skew(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0, m3 = 0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    m3 += (v - mean) * (v - mean) * (v - mean);
  }
  m2 /= n;
  m3 /= n;
  const double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1)) / (n - 2);
}

}  // namespace

TEST_CASE("quantiles interpolate between order statistics") {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100};
  CHECK(quantile(x, 0.25) == doctest::Approx(3.5));
  CHECK(quantile(x, 0.75) == doctest::Approx(8.5));
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 100.0);
}

TEST_CASE("tukey fences") {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100};
  auto flags = tukey_fences(x);
  CHECK(std::count(flags.begin(), flags.end(), true) == 1);
  CHECK(flags.back());
  std::vector<double> c(10, 4.2);
  auto none = tukey_fences(c);
  CHECK(std::count(none.begin(), none.end(), true) == 0);
  std::vector<double> sym{-3, -2, -1, 0, 1, 2, 3};
  auto s = tukey_fences(sym);
  CHECK(std::count(s.begin(), s.end(), true) == 0);
  CHECK_CODE(tukey_fences(std::vector<double>{1, 2, 3}), ErrorCode::TooFewValues);
}

TEST_CASE("winsorize") {
  std::vector<double> c(12, 7.0);
  CHECK(winsorize(c) == c);

  std::vector<double> spike(21, 0.0);
  spike.back() = 1000.0;
  // upper cutoff at position 0.95 * 20 = 19 of the sorted data, which is 0
  auto cut = winsor_cutoffs(spike);
  CHECK(cut.upper == 0.0);
  auto w = winsorize(spike);
  CHECK(w.back() == 0.0);

  std::vector<double> ramp(40);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  ramp[39] = 500;
  auto once = winsorize(ramp);
  CHECK(winsorize(once) == once);
  CHECK_CODE(winsorize(ramp, 95.0, 5.0), ErrorCode::InvalidPercentiles);
  CHECK_CODE(winsorize(ramp, -1.0, 95.0), ErrorCode::InvalidPercentiles);
}

TEST_CASE("skewness") {
  CHECK(std::abs(skewness(std::vector<double>{-2, -1, 0, 1, 2})) < 1e-15);
  CHECK(skewness(std::vector<double>{0, 0, 0, 1}) > 0.0);
  Rng rng(7);
  std::vector<double> expo(200);
  for (auto& v : expo) v = -std::log(1.0 - rng.uniform());
  CHECK(std::abs(skewness(expo) - brute_skew(expo)) < 1e-12);
  // scipy.stats.skew(bias=False)
  CHECK(skewness(std::vector<double>{1, 2, 3, 10, 20, 50}) == doctest::Approx(1.7742667482689074).epsilon(1e-12));
  CHECK_CODE(skewness(std::vector<double>{3, 3, 3}), ErrorCode::ZeroVariance);
}

TEST_CASE("shapiro wilk") {
  std::vector<double> q(50);
  for (int i = 0; i < 50; ++i) q[i] = dist::normal_quantile((i + 1 - 0.375) / 50.25);
  CHECK(shapiro_wilk(q).w > 0.99);

  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[i] = i / 99.0;
  auto u = shapiro_wilk(grid);
  CHECK(u.p < 0.05);
  // scipy.stats.shapiro reference values
  CHECK(u.w == doctest::Approx(0.9547247449577692).epsilon(1e-6));
  CHECK(u.p == doctest::Approx(0.001721722193762512).epsilon(1e-3));

  auto small = shapiro_wilk(std::vector<double>{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0});
  CHECK(small.w == doctest::Approx(0.9557042663419049).epsilon(1e-6));
  CHECK(small.p == doctest::Approx(0.7360025662915376).epsilon(1e-3));

  auto three = shapiro_wilk(std::vector<double>{1, 2, 4});
  CHECK(three.w == doctest::Approx(0.9642857142857142).epsilon(1e-9));
  CHECK(three.p == doctest::Approx(0.6368868450289689).epsilon(1e-6));

  CHECK_CODE(shapiro_wilk(std::vector<double>{1, 2}), ErrorCode::SampleSizeOutOfRange);
}

TEST_CASE("log transform") {
  std::vector<double> sym{1, 2, 3, 4, 5, 6, 7};
  auto a = log_transform_if_skewed(sym);
  CHECK_FALSE(a.applied);
  CHECK(a.values == sym);

  std::vector<double> skewed{0, 0, 1, 1, 1, 2, 2, 3, 5, 8, 40, 120};
  REQUIRE(std::abs(skewness(skewed)) > 1.0);
  auto b = log_transform_if_skewed(skewed);
  CHECK(b.applied);
  CHECK(b.values[10] == doctest::Approx(std::log1p(40.0)));

  auto neg = skewed;
  neg[0] = -5;
  auto c = log_transform_if_skewed(neg);
  CHECK_FALSE(c.applied);
  CHECK(c.warning.has_value());
  CHECK(c.values == neg);
}

TEST_CASE("minmax and zscore") {
  std::vector<double> x{3, 9, 5, 1};
  auto m = minmax_normalize(x);
  CHECK(m[3] == 0.0);
  CHECK(m[1] == 100.0);
  CHECK(m[0] == doctest::Approx(25.0));
  CHECK_CODE(minmax_normalize(std::vector<double>{2, 2}), ErrorCode::DegenerateColumn);

  auto z = zscore(std::vector<double>{0, 10});
  CHECK(z[0] == doctest::Approx(-1.0));
  CHECK(z[1] == doctest::Approx(1.0));
  CHECK_CODE(zscore(std::vector<double>{4, 4, 4}), ErrorCode::ZeroVariance);
}

TEST_CASE("quartile bins") {
  auto b = quartile_bins(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  std::vector<Quartile> expected{Quartile::Q1, Quartile::Q1, Quartile::Q2, Quartile::Q2,
                                 Quartile::Q3, Quartile::Q3, Quartile::Q4, Quartile::Q4};
  CHECK(b == expected);
  auto flat = quartile_bins(std::vector<double>{5, 5, 5, 5, 5});
  for (auto q : flat) CHECK(q == Quartile::Q1);
  auto four = quartile_bins(std::vector<double>{10, 40, 20, 30});
  CHECK(four == std::vector<Quartile>{Quartile::Q1, Quartile::Q4, Quartile::Q2, Quartile::Q3});
  CHECK_CODE(quartile_bins(std::vector<double>{1, 2, 3}), ErrorCode::TooFewValues);
}

TEST_CASE("describe") {
  auto s = describe(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100});
  CHECK(s.n == 11);
  CHECK(s.q1 == doctest::Approx(3.5));
  CHECK(s.q3 == doctest::Approx(8.5));
  CHECK(s.min <= s.q1);
  CHECK(s.q3 <= s.max);
  CHECK(s.shapiro_w.has_value());
}

TEST_CASE("transform records replay exactly") {
  NumericValues raw{1.0, 4.0, std::nullopt, 2.0, 250.0, 3.0, 5.0, 2.5, 6.0, 3.5};
  FitOptions opt;
  opt.winsorize_outliers = true;
  opt.log_if_skewed = true;
  opt.minmax = true;
  opt.reflect = true;
  auto fit = fit_column("x", raw, opt);
  CHECK_FALSE(fit.values[2].has_value());
  CHECK(fit.record.tukey_flags == 1);
  auto again = replay(fit.record, raw);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    REQUIRE(again[i].has_value() == fit.values[i].has_value());
    if (again[i]) CHECK(*again[i] == *fit.values[i]);
  }
  auto rt = transform_record_from_json(to_json(fit.record));
  CHECK(rt.steps.size() == fit.record.steps.size());
  auto via_json = replay(rt, raw);
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (via_json[i]) CHECK(*via_json[i] == *fit.values[i]);
}

TEST_CASE("distribution tails") {
  // scipy.stats reference values
  CHECK(dist::student_t_two_sided(2.5, 7.3) == doctest::Approx(0.039650234665600415).epsilon(1e-9));
  CHECK(dist::chi_square_upper(7.2, 3) == doctest::Approx(0.06578905268507099).epsilon(1e-9));
  CHECK(dist::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(dist::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
}
