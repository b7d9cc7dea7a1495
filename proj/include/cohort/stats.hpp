#pragma once

#include <cstddef>
#include <span>

namespace cohort {

/// Two-sided one-sample t-test of mean(diffs) == 0 with n-1 degrees of freedom.
/// Zero spread gives p = 1 when every difference is zero and p = 0 otherwise.
/// Throws ContractError for fewer than two differences.
double paired_t_test(std::span<const double> diffs);

struct McNemarResult {
  double statistic = 0.0;
  double p = 1.0;
};

/// (b - c)^2 / (b + c) against chi-square(1), no continuity correction.
/// b + c == 0 gives statistic 0 and p = 1.
McNemarResult mcnemar(std::size_t b, std::size_t c);

/// min(1, p * comparisons). Throws ContractError outside 0 <= p <= 1 or for
/// zero comparisons.
double bonferroni(double p, std::size_t comparisons);

}  // namespace cohort
