#pragma once

#include <cmath>
#include <span>
#include <utility>

namespace mapfdp {

struct MeanCi
{
  double mean = 0.0;
  double half_width = 0.0; //!< 95% normal half-width, 1.96 s / sqrt(n)
};

//! Mean and 95% confidence half-width with the sample (n-1) standard deviation.
inline MeanCi stats_ci(std::span<const double> samples)
{
  MeanCi out;
  const auto n = samples.size();
  if (n == 0) {
    return out;
  }
  double sum = 0.0;
  for (double s : samples) {
    sum += s;
  }
  out.mean = sum / static_cast<double>(n);
  if (n == 1) {
    return out;
  }
  double ss = 0.0;
  for (double s : samples) {
    ss += (s - out.mean) * (s - out.mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  out.half_width = 1.96 * sd / std::sqrt(static_cast<double>(n));
  return out;
}

}  // namespace mapfdp
