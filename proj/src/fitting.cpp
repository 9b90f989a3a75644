#include "gfd/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gfd/error.hpp"

namespace gfd {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(ErrorCode::kDimensionMismatch, "fit needs equal-length samples");
  if (n < 3) throw Error(ErrorCode::kPrecondition, "fit needs at least 3 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kPrecondition, "fit needs distinct abscissae");
  LinearFit f;
  f.n = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.rss += r * r;
  }
  f.slope_stderr = std::sqrt(f.rss / (n - 2) / sxx);
  return f;
}

LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw Error(ErrorCode::kPrecondition, "fit needs at least 3 samples");
  std::vector<std::pair<double, double>> s = samples;
  std::set<double> scales;
  for (const auto& [a, v] : s) {
    if (!(a > 0.0) || !(v > 0.0)) throw Error(ErrorCode::kPrecondition, "log-log fit needs positive samples");
    if (!scales.insert(a).second) throw Error(ErrorCode::kPrecondition, "log-log fit needs distinct scales");
  }
  std::sort(s.begin(), s.end());
  std::vector<double> lx, ly;
  for (const auto& [a, v] : s) {
    lx.push_back(std::log(a));
    ly.push_back(std::log(v));
  }
  const LinearFit lf = linear_fit(lx, ly);
  LogLogFit out{lf.slope, lf.intercept, lf.slope_stderr, false};
  // monotone drift of the local slopes
  std::vector<double> local;
  for (std::size_t i = 0; i + 1 < lx.size(); ++i) local.push_back((ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i]));
  int up = 0, down = 0;
  for (std::size_t i = 0; i + 1 < local.size(); ++i) {
    const double dd = local[i + 1] - local[i];
    if (dd > 1e-9) ++up;
    if (dd < -1e-9) ++down;
  }
  const int steps = static_cast<int>(local.size()) - 1;
  out.log_contaminated = steps >= 1 && (up == steps || down == steps);
  return out;
}

ModelComparison compare_power_vs_log(const std::vector<std::pair<double, double>>& samples, double R) {
  std::vector<double> lx, ly, ly_log;
  for (const auto& [s, v] : samples) {
    if (!(s > 0.0) || !(v > 0.0)) throw Error(ErrorCode::kPrecondition, "model comparison needs positive samples");
    if (!(s < R)) throw Error(ErrorCode::kPrecondition, "model comparison needs s < R");
    lx.push_back(std::log(s));
    ly.push_back(std::log(v));
    ly_log.push_back(std::log(v) - std::log(std::log(R / s)));
  }
  ModelComparison m;
  m.rss_power = linear_fit(lx, ly).rss;
  m.rss_log = linear_fit(lx, ly_log).rss;
  m.log_preferred = m.rss_log < m.rss_power;
  return m;
}

}  // namespace gfd
