#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psdo {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;  // root mean square residual
  size_t n = 0;
};

// Ordinary least squares y ~ intercept + slope * x. Needs at least two points.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Convenience for log-log decay fits: fits log(y) ~ c0 + slope * log(x),
// skipping nonpositive samples.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

}
