#pragma once

// Special functions behind the p-values reported by stats and preprocess.

namespace vulnatlas::dist {

double normal_cdf(double z);
double normal_upper(double z);
/// Inverse standard normal CDF, p in (0, 1).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
/// Regularized upper incomplete gamma Q(a, x) (series below a + 1, continued fraction above).
double gamma_q(double a, double x);

/// Two-sided p-value of Student's t with (possibly fractional) df.
double student_t_two_sided(double t, double df);
/// Upper-tail p-value of the chi-square distribution.
double chi_square_upper(double x, double df);

}  // namespace vulnatlas::dist
