#pragma once

#include <optional>
#include <vector>

namespace bsel {

enum class TailDirection { greater, less };

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> degrees_of_freedom;
  bool degenerate = false;  // zero-variance paired differences
};

// Exact two-tailed binomial test: p = min(1, 2 * min(P(X<=hits), P(X>=hits)))
// under Binomial(trials, p0).
TestResult binom_two_tailed(long hits, long trials, double p0 = 0.5);

// Benjamini-Hochberg step-up adjustment; output in the input's order.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

// One-tailed paired t-test on d = a - b.
TestResult paired_t_one_tailed(const std::vector<double>& a, const std::vector<double>& b,
                               TailDirection direction);

// CDF of Student's t with df degrees of freedom (regularized incomplete beta).
double student_t_cdf(double t, double df);

}  // namespace bsel
