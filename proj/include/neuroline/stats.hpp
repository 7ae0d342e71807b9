#pragma once

#include <functional>
#include <span>
#include <vector>

#include "neuroline/errors.hpp"

namespace neuroline::stats {

enum class Method {
  ExactPermutation,
  NormalApprox,
  AsymptoticKolmogorov,
  RoystonApprox,
};

const char* method_name(Method m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::NormalApprox;
};

/// Rank-biserial style effect size r = |z| / sqrt(n1 + n2).
struct EffectSize {
  double r = 0.0;
  double z = 0.0;
};

struct MannWhitneyOptions {
  /// Full enumeration of rank assignments when n1 + n2 <= exact_max_n.
  int exact_max_n = 12;
  bool continuity_correction = false;
};

/// Two-sided Mann-Whitney U with midrank tie handling. The reported statistic
/// is U of `x`. The exact p enumerates every C(n1+n2, n1) group assignment of
/// the pooled values and counts |U - n1*n2/2| >= |U_obs - n1*n2/2|; the
/// approximate path uses the normal approximation with tie-corrected variance.
/// z (and the effect size) always come from the normal approximation.
std::pair<TestResult, EffectSize> mann_whitney_u(
    std::span<const double> x, std::span<const double> y,
    const MannWhitneyOptions& opts = {});

/// Shapiro-Wilk W and p via Royston's AS R94 approximation; 3 <= n <= 5000.
TestResult shapiro_wilk(std::span<const double> x);

struct KsResult {
  double d = 0.0;
  double p = 1.0;
  /// Set when the CDF's parameters were fitted from the same sample, which
  /// biases the asymptotic p (Lilliefors effect). D itself stays valid for
  /// ranking.
  bool p_approximate = false;
};

/// One-sample Kolmogorov-Smirnov statistic against an arbitrary CDF, with the
/// asymptotic Kolmogorov p-value.
KsResult ks_statistic(std::span<const double> x,
                      const std::function<double(double)>& cdf,
                      bool fitted_params = false);

/// Survival function of the Kolmogorov distribution, Q(lambda) =
/// 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct ShapeStats {
  double median = 0.0;
  double iqr = 0.0;
  double mad = 0.0;  // mean absolute deviation about the mean
  double skewness = 0.0;
  double kurtosis_excess = 0.0;
};

/// The five distribution measures. Quantiles interpolate linearly between
/// order statistics; skewness/kurtosis use population moments (divide by n).
/// Requires n >= 4.
ShapeStats shape_stats(std::span<const double> x);

}  // namespace neuroline::stats
