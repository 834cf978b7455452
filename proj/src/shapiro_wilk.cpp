// Shapiro-Wilk W with Royston's coefficient and p-value approximations
// (Applied Statistics algorithm R94).

#include <algorithm>
#include <cmath>
#include <vector>

#include "vulnatlas/distributions.hpp"
#include "vulnatlas/error.hpp"
#include "vulnatlas/preprocess.hpp"

namespace vulnatlas::prep {

namespace {

template <std::size_t N>
double poly(const double (&cc)[N], std::size_t order, double x) {
  double result = cc[0];
  if (order > 1) {
    double p = x * cc[order - 1];
    for (std::size_t j = order - 2; j > 0; --j) p = (p + cc[j]) * x;
    result += p;
  }
  return result;
}

constexpr double kC1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
constexpr double kC2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
constexpr double kC3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
constexpr double kC4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
constexpr double kC5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
constexpr double kC6[] = {-0.4803, -0.082676, 0.0030302};
constexpr double kG[] = {-2.273, 0.459};

std::vector<double> coefficients(std::size_t n) {
  const std::size_t half = n / 2;
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
    return a;
  }
  const double an = static_cast<double>(n);
  const double an25 = an + 0.25;
  std::vector<double> m(half);
  double summ2 = 0.0;
  for (std::size_t i = 1; i <= half; ++i) {
    m[i - 1] = dist::normal_quantile((static_cast<double>(i) - 0.375) / an25);
    summ2 += m[i - 1] * m[i - 1];
  }
  summ2 *= 2.0;
  const double ssumm2 = std::sqrt(summ2);
  const double rsn = 1.0 / std::sqrt(an);
  const double a1 = poly(kC1, 6, rsn) - m[0] / ssumm2;
  std::size_t first = 0;
  double fac = 0.0;
  if (n > 5) {
    first = 3;
    const double a2 = -m[1] / ssumm2 + poly(kC2, 6, rsn);
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                    (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
    a[1] = a2;
  } else {
    first = 2;
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
  }
  a[0] = a1;
  for (std::size_t i = first; i <= half; ++i) a[i - 1] = -m[i - 1] / fac;
  return a;
}

}  // namespace

ShapiroWilk shapiro_wilk(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3 || n > 5000) {
    throw Error(ErrorCode::SampleSizeOutOfRange,
                "Shapiro-Wilk needs 3 <= n <= 5000, got " + std::to_string(n));
  }
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double range = s.back() - s.front();
  if (!(range > 0.0)) throw Error(ErrorCode::ZeroVariance, "Shapiro-Wilk of a constant sample");

  // Scale by the range to keep sums well conditioned.
  const double lo = s.front();
  for (double& v : s) v = (v - lo) / range;
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(n);
  double sst = 0.0;
  for (double v : s) sst += (v - mean) * (v - mean);

  const auto a = coefficients(n);
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += a[i] * (s[n - 1 - i] - s[i]);
  double w = std::min(1.0, num * num / sst);

  if (n == 3) {
    constexpr double kSixOverPi = 1.90985931710274;
    constexpr double kPiOverThree = 1.04719755119660;
    const double p = std::max(0.0, kSixOverPi * (std::asin(std::sqrt(w)) - kPiOverThree));
    return {w, std::min(p, 1.0)};
  }
  const double an = static_cast<double>(n);
  double y = std::log1p(-w);
  double mu = 0.0;
  double sigma = 0.0;
  if (n <= 11) {
    const double gamma = poly(kG, 2, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    mu = poly(kC3, 4, an);
    sigma = std::exp(poly(kC4, 4, an));
  } else {
    const double ln = std::log(an);
    mu = poly(kC5, 4, ln);
    sigma = std::exp(poly(kC6, 3, ln));
  }
  const double p = dist::normal_upper((y - mu) / sigma);
  return {w, std::clamp(p, 0.0, 1.0)};
}

}  // namespace vulnatlas::prep
