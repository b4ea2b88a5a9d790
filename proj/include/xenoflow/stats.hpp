#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace xenoflow {

struct SummaryStats {
  std::size_t count = 0;
  double median = 0;  // lower median for even counts
  double mean = 0;
  double stddev = 0;  // population
  double variation_coefficient = 0;
  double min = 0;
  double max = 0;
};

inline SummaryStats summarize(std::span<const double> samples) {
  SummaryStats s;
  s.count = samples.size();
  if (samples.empty()) return s;

  std::vector<double> sorted(samples.begin(), samples.end());
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  s.median = *mid;
  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  s.min = *lo;
  s.max = *hi;

  // Welford
  double mean = 0;
  double m2 = 0;
  std::size_t n = 0;
  for (double x : samples) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  s.mean = mean;
  s.stddev = std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
  s.variation_coefficient = mean != 0 ? s.stddev / std::abs(mean) : 0.0;
  return s;
}

inline SummaryStats summarize(const std::vector<double>& samples) { return summarize(std::span<const double>(samples)); }

}  // namespace xenoflow
