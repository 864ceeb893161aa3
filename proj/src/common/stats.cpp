#include "quicaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quicaudit::stats {

namespace {

double sorted_quantile(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? v[lo] : v[lo] + (v[hi] - v[lo]) * frac;
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, q);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

BoxSummary box_summary(const std::vector<double>& values) {
  BoxSummary b;
  b.count = values.size();
  if (values.empty()) return b;
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  b.min = v.front();
  b.max = v.back();
  b.q1 = sorted_quantile(v, 0.25);
  b.median = sorted_quantile(v, 0.5);
  b.q3 = sorted_quantile(v, 0.75);
  b.mean = mean(v);
  return b;
}

}  // namespace quicaudit::stats
