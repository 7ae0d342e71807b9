#pragma once

#include <functional>
#include <span>
#include <vector>

namespace neuroline::math {

/// Standard normal CDF, accurate over the full double range.
double normal_cdf(double x);

/// Standard normal quantile (inverse CDF), Wichura's AS 241 (PPND16).
/// p must lie in (0, 1).
double normal_quantile(double p);

/// Horner evaluation of c[0] + c[1]*x + ... + c[n-1]*x^(n-1).
double polyval(std::span<const double> coeffs, double x);

/// Linear-interpolation quantile between order statistics at h = p*(n-1)
/// (the convention used throughout: stable against off-by-one drift).
/// `sorted` must be ascending and nonempty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

double mean(std::span<const double> x);
/// Sample variance (n-1 denominator); n >= 2.
double sample_variance(std::span<const double> x);
/// Population central moment of order k (divide by n).
double central_moment(std::span<const double> x, int k);

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol);

constexpr double kPi = 3.14159265358979323846;

}  // namespace neuroline::math
