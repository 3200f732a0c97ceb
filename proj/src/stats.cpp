#include "bsel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsel/errors.hpp"

namespace bsel {

namespace {

long double log_binom_pmf(long k, long n, long double p0) {
  long double lc = std::lgammal(static_cast<long double>(n) + 1) -
                   std::lgammal(static_cast<long double>(k) + 1) -
                   std::lgammal(static_cast<long double>(n - k) + 1);
  long double lp = 0.0L, lq = 0.0L;
  if (k > 0) lp = static_cast<long double>(k) * std::log(p0);
  if (n - k > 0) lq = static_cast<long double>(n - k) * std::log(1.0L - p0);
  return lc + lp + lq;
}

long double binom_cdf_lower(long k, long n, long double p0) {
  long double total = 0.0L;
  for (long i = 0; i <= k; ++i) total += std::exp(log_binom_pmf(i, n, p0));
  return std::min(total, 1.0L);
}

long double binom_cdf_upper(long k, long n, long double p0) {
  long double total = 0.0L;
  for (long i = k; i <= n; ++i) total += std::exp(log_binom_pmf(i, n, p0));
  return std::min(total, 1.0L);
}

// Continued fraction for the regularized incomplete beta function (modified
// Lentz method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double df) {
  if (df <= 0.0) throw Error(Errc::invalid_argument, "student_t_cdf: df must be positive");
  if (t == 0.0) return 0.5;
  double x = df / (df + t * t);
  double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);  // P(T >= |t|)
  return t > 0.0 ? 1.0 - tail : tail;
}

TestResult binom_two_tailed(long hits, long trials, double p0) {
  if (trials < 1 || hits < 0 || hits > trials)
    throw Error(Errc::invalid_counts, "binom_two_tailed: need 0 <= hits <= trials, trials >= 1");
  if (p0 <= 0.0 || p0 >= 1.0)
    throw Error(Errc::out_of_range, "binom_two_tailed: p0 must lie in (0,1)");

  long double p;
  if (p0 == 0.5) {
    // Symmetric case: sum the smaller tail only, so p(k) == p(n-k) exactly.
    long k = std::min(hits, trials - hits);
    p = 2.0L * binom_cdf_lower(k, trials, 0.5L);
  } else {
    long double lower = binom_cdf_lower(hits, trials, p0);
    long double upper = binom_cdf_upper(hits, trials, p0);
    p = 2.0L * std::min(lower, upper);
  }
  TestResult r;
  r.statistic = static_cast<double>(hits) / static_cast<double>(trials);
  r.p_value = static_cast<double>(std::min(p, 1.0L));
  return r;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(Errc::out_of_range, "bh_adjust: p-values must lie in [0,1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  std::vector<double> adjusted(m, 0.0);
  double running_min = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    // The rank-m quotient is the p-value itself; skip the arithmetic so it
    // stays bit-exact.
    double q = (i + 1 == m)
                   ? p_values[order[i]]
                   : p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running_min = std::min(running_min, std::min(q, 1.0));
    adjusted[order[i]] = running_min;
  }
  return adjusted;
}

TestResult paired_t_one_tailed(const std::vector<double>& a, const std::vector<double>& b,
                               TailDirection direction) {
  if (a.size() != b.size())
    throw Error(Errc::length_mismatch, "paired_t_one_tailed: input lengths differ");
  if (a.size() < 2)
    throw Error(Errc::length_mismatch, "paired_t_one_tailed: need at least 2 pairs");

  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TestResult r;
  r.degrees_of_freedom = static_cast<double>(n - 1);
  if (sd == 0.0) {
    r.degenerate = true;
    if (mean == 0.0) {
      r.p_value = 1.0;
      return r;
    }
    bool favored = (direction == TailDirection::greater) ? (mean > 0.0) : (mean < 0.0);
    r.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
    r.p_value = favored ? 0.0 : 1.0;
    return r;
  }
  double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.statistic = t;
  double cdf = student_t_cdf(t, static_cast<double>(n - 1));
  r.p_value = (direction == TailDirection::greater) ? 1.0 - cdf : cdf;
  return r;
}

}  // namespace bsel
