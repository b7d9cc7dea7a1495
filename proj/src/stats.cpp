#include "cohort/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "cohort/error.hpp"

namespace cohort {

double paired_t_test(std::span<const double> diffs) {
  const auto n = diffs.size();
  if (n < 2) throw ContractError("paired t-test needs at least two differences");
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return mean == 0.0 ? 1.0 : 0.0;

  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

McNemarResult mcnemar(std::size_t b, std::size_t c) {
  if (b + c == 0) return {0.0, 1.0};
  const double diff = static_cast<double>(b) - static_cast<double>(c);
  McNemarResult r;
  r.statistic = diff * diff / static_cast<double>(b + c);
  const boost::math::chi_squared dist(1.0);
  r.p = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double bonferroni(double p, std::size_t comparisons) {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("p-value must lie in [0, 1]");
  if (comparisons < 1) throw ContractError("need at least one comparison");
  return std::min(1.0, p * static_cast<double>(comparisons));
}

}  // namespace cohort
