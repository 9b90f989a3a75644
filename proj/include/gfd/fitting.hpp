#pragma once

#include <utility>
#include <vector>

namespace gfd {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double rss = 0.0;
  int n = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs >= 3 points and at
/// least two distinct x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  /// Local slopes between neighbouring scales drift in one direction, the
  /// signature of a log factor on top of the power.
  bool log_contaminated = false;
};

/// OLS on (log scale, log value); samples are (scale, value), both > 0.
LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& samples);

struct ModelComparison {
  double rss_power = 0.0;  // log v = a + b log s
  double rss_log = 0.0;    // log v = a + b log s + log log(R/s)
  bool log_preferred = false;
};

/// Residual comparison of the pure-power and power-times-log models, both
/// with two free parameters. Needs s < R for every sample.
ModelComparison compare_power_vs_log(const std::vector<std::pair<double, double>>& samples, double R);

}  // namespace gfd
