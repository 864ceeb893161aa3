#pragma once

#include <cstddef>
#include <vector>

namespace quicaudit::stats {

// Linear interpolation between closest ranks (q in [0, 1]); the median of
// an even-sized sample is the mean of the two middle values.
double quantile(std::vector<double> values, double q);

struct BoxSummary {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

BoxSummary box_summary(const std::vector<double>& values);

double mean(const std::vector<double>& values);
// Population standard deviation.
double stddev(const std::vector<double>& values);

}  // namespace quicaudit::stats
