#include "neuroline/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "neuroline/mathutil.hpp"

namespace neuroline::stats {

namespace {

void require_finite(std::span<const double> x, const char* who) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Data, std::string(who) + ": non-finite value");
    }
  }
}

// Midranks of the pooled sample; ties share the average of their positions.
std::vector<double> midranks(std::span<const double> pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double u_from_ranks(std::span<const double> ranks, std::size_t n1) {
  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  return r1 - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
}

// Exact two-sided p: enumerate every assignment of n1 pooled values to the
// first group and count assignments at least as extreme (in |U - n1*n2/2|)
// as observed. Symmetric-distance counting stays correct under ties.
double exact_two_sided_p(std::span<const double> ranks, std::size_t n1,
                         double u_obs) {
  const std::size_t n = ranks.size();
  const double center =
      static_cast<double>(n1) * static_cast<double>(n - n1) / 2.0;
  const double obs_dist = std::abs(u_obs - center) - 1e-9;  // FP guard on ties

  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n1), true);
  std::sort(mask.begin(), mask.end(), std::greater<bool>());

  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
  do {
    double r1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) r1 += ranks[i];
    }
    const double u =
        r1 - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
    if (std::abs(u - center) >= obs_dist) ++extreme;
    ++total;
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::ExactPermutation: return "exact_permutation";
    case Method::NormalApprox: return "normal_approx";
    case Method::AsymptoticKolmogorov: return "asymptotic_kolmogorov";
    case Method::RoystonApprox: return "royston_approx";
  }
  return "unknown";
}

std::pair<TestResult, EffectSize> mann_whitney_u(std::span<const double> x,
                                                 std::span<const double> y,
                                                 const MannWhitneyOptions& opts) {
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  if (n1 < 3 || n2 < 3) {
    throw Error(ErrorKind::Size, "mann_whitney_u: need >= 3 values per sample");
  }
  require_finite(x, "mann_whitney_u");
  require_finite(y, "mann_whitney_u");

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = pooled.size();

  const auto ranks = midranks(pooled);
  const double u = u_from_ranks(ranks, n1);

  // Tie-corrected variance of U under H0.
  std::map<double, std::size_t> tie_counts;
  for (double v : pooled) ++tie_counts[v];
  double tie_term = 0.0;
  for (const auto& [value, t] : tie_counts) {
    (void)value;
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double nd = static_cast<double>(n);
  const double n1d = static_cast<double>(n1);
  const double n2d = static_cast<double>(n2);
  const double mean_u = n1d * n2d / 2.0;
  const double var_u =
      n1d * n2d / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
  if (var_u <= 0.0) {
    throw Error(ErrorKind::Degenerate,
                "mann_whitney_u: all pooled values identical");
  }

  double shifted = u - mean_u;
  if (opts.continuity_correction && shifted != 0.0) {
    shifted -= 0.5 * (shifted > 0.0 ? 1.0 : -1.0);
  }
  const double z = shifted / std::sqrt(var_u);

  TestResult result;
  result.statistic = u;
  if (n <= static_cast<std::size_t>(opts.exact_max_n)) {
    result.method = Method::ExactPermutation;
    result.p_value = exact_two_sided_p(ranks, n1, u);
  } else {
    result.method = Method::NormalApprox;
    result.p_value = std::min(1.0, 2.0 * (1.0 - math::normal_cdf(std::abs(z))));
  }

  EffectSize effect;
  effect.z = z;
  effect.r = std::min(1.0, std::abs(z) / std::sqrt(n1d + n2d));
  return {result, effect};
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk, Royston (1995) AS R94.

namespace {

constexpr double kSwC1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685,
                            -2.706056};
constexpr double kSwC2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633,
                            -3.582633};
constexpr double kSwC3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
constexpr double kSwC4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
constexpr double kSwC5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
constexpr double kSwC6[] = {-0.4803, -0.082676, 0.0030302};
constexpr double kSwG[] = {-2.273, 0.459};

}  // namespace

TestResult shapiro_wilk(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3 || n > 5000) {
    throw Error(ErrorKind::Size, "shapiro_wilk: n must be in [3, 5000]");
  }
  require_finite(x, "shapiro_wilk");

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double range = sorted.back() - sorted.front();
  if (range <= 0.0) {
    throw Error(ErrorKind::Degenerate, "shapiro_wilk: constant sample");
  }

  const double nd = static_cast<double>(n);

  // Expected normal order statistics (Blom scores) and the weight vector.
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = math::normal_quantile((static_cast<double>(i + 1) - 0.375) /
                                 (nd + 0.25));
  }
  double ssumm2 = 0.0;
  for (double v : m) ssumm2 += v * v;
  const double rsn = 1.0 / std::sqrt(nd);

  std::vector<double> a(n);
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[1] = 0.0;
    a[2] = std::sqrt(0.5);
  } else {
    const double a_n = math::polyval(kSwC1, rsn) + m[n - 1] / std::sqrt(ssumm2);
    std::size_t tail = 1;
    double a_n1 = 0.0;
    double phi;
    if (n > 5) {
      tail = 2;
      a_n1 = math::polyval(kSwC2, rsn) + m[n - 2] / std::sqrt(ssumm2);
      phi = (ssumm2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
            (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1);
    } else {
      phi = (ssumm2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * a_n * a_n);
    }
    const double sqrt_phi = std::sqrt(phi);
    for (std::size_t i = 0; i < n; ++i) a[i] = m[i] / sqrt_phi;
    a[n - 1] = a_n;
    a[0] = -a_n;
    if (tail == 2) {
      a[n - 2] = a_n1;
      a[1] = -a_n1;
    }
  }

  const double xbar = math::mean(sorted);
  double numer = 0.0;
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    numer += a[i] * sorted[i];
    denom += (sorted[i] - xbar) * (sorted[i] - xbar);
  }
  const double w = std::clamp(numer * numer / denom, 0.0, 1.0);

  TestResult result;
  result.statistic = w;
  result.method = Method::RoystonApprox;

  if (n == 3) {
    const double stqr = std::asin(std::sqrt(0.75));
    double p = (6.0 / math::kPi) * (std::asin(std::sqrt(w)) - stqr);
    result.p_value = std::clamp(p, 0.0, 1.0);
    return result;
  }

  double z;
  if (n <= 11) {
    const double gamma = math::polyval(kSwG, nd);
    const double transformed = -std::log(gamma - std::log1p(-w));
    const double mu = math::polyval(kSwC3, nd);
    const double sigma = std::exp(math::polyval(kSwC4, nd));
    z = (transformed - mu) / sigma;
  } else {
    const double ln_n = std::log(nd);
    const double transformed = std::log1p(-w);
    const double mu = math::polyval(kSwC5, ln_n);
    const double sigma = std::exp(math::polyval(kSwC6, ln_n));
    z = (transformed - mu) / sigma;
  }
  result.p_value = std::clamp(1.0 - math::normal_cdf(z), 0.0, 1.0);
  return result;
}

// ---------------------------------------------------------------------------

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_statistic(std::span<const double> x,
                      const std::function<double(double)>& cdf,
                      bool fitted_params) {
  if (x.empty()) throw Error(ErrorKind::Size, "ks_statistic: empty sample");
  require_finite(x, "ks_statistic");

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(sorted.size());

  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    if (!std::isfinite(f)) {
      throw Error(ErrorKind::Data, "ks_statistic: cdf returned non-finite");
    }
    const double hi = std::abs(static_cast<double>(i + 1) / nd - f);
    const double lo = std::abs(f - static_cast<double>(i) / nd);
    d = std::max({d, hi, lo});
  }

  KsResult result;
  result.d = d;
  result.p = kolmogorov_q(std::sqrt(nd) * d);
  result.p_approximate = fitted_params;
  return result;
}

ShapeStats shape_stats(std::span<const double> x) {
  if (x.size() < 4) {
    throw Error(ErrorKind::Size, "shape_stats: need at least 4 values");
  }
  require_finite(x, "shape_stats");

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());

  ShapeStats s;
  s.median = math::quantile_sorted(sorted, 0.5);
  s.iqr = math::quantile_sorted(sorted, 0.75) - math::quantile_sorted(sorted, 0.25);

  const double m = math::mean(x);
  double abs_dev = 0.0;
  for (double v : x) abs_dev += std::abs(v - m);
  s.mad = abs_dev / static_cast<double>(x.size());

  const double m2 = math::central_moment(x, 2);
  const double m3 = math::central_moment(x, 3);
  const double m4 = math::central_moment(x, 4);
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis_excess = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

}  // namespace neuroline::stats
