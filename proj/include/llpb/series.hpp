#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace llpb {

enum class SeriesSource { analytic, regression, wfmc };

inline const char* to_string(SeriesSource s) {
  switch (s) {
    case SeriesSource::analytic: return "analytic";
    case SeriesSource::regression: return "regression";
    case SeriesSource::wfmc: return "wfmc";
  }
  return "?";
}

enum class SeriesStatus { ok, diverging_denominator };

/// g2 sampled on an ascending delay grid.
struct CorrelationSeries {
  std::vector<double> tau;
  std::vector<double> values;
  std::vector<double> std_errors;  // empty unless the source is stochastic
  SeriesSource source = SeriesSource::analytic;
  SeriesStatus status = SeriesStatus::ok;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return tau.size(); }
  bool has_errors() const { return !std_errors.empty(); }

  void validate() const {
    if (values.size() != tau.size()) throw InvalidArgument("series value count differs from grid");
    if (has_errors() && std_errors.size() != tau.size())
      throw InvalidArgument("series error count differs from grid");
    for (std::size_t i = 1; i < tau.size(); ++i)
      if (!(tau[i] > tau[i - 1])) throw InvalidArgument("tau grid is not strictly ascending");
    if (status == SeriesStatus::ok)
      for (double v : values)
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("series value is negative or not finite");
  }

  /// Linear interpolation inside the grid.
  double at(double t) const {
    if (tau.empty()) throw InvalidArgument("empty series");
    if (t <= tau.front()) return values.front();
    if (t >= tau.back()) return values.back();
    const auto it = std::upper_bound(tau.begin(), tau.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - tau.begin());
    const double w = (t - tau[k - 1]) / (tau[k] - tau[k - 1]);
    return values[k - 1] + w * (values[k] - values[k - 1]);
  }
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) return {a};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * double(i) / double(n - 1);
  out.back() = b;
  return out;
}

/// First delay at which g2 rises through `threshold`, by linear
/// interpolation between grid points. Returns nullopt if g2(0) is already
/// above threshold or the curve never crosses on the grid.
inline std::optional<double> first_crossing(const CorrelationSeries& s, double threshold = 0.5) {
  if (s.values.empty() || s.values.front() >= threshold) return std::nullopt;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s.values[k] >= threshold) {
      const double a = s.values[k - 1], b = s.values[k];
      return s.tau[k - 1] + (threshold - a) / (b - a) * (s.tau[k] - s.tau[k - 1]);
    }
  return std::nullopt;
}

/// Width of the antibunching interval containing tau = 0. g2(tau) is even in
/// tau for a stationary state, so the interval is [-t1, t1] with t1 the first
/// crossing and the width is 2*t1.
inline std::optional<double> antibunching_window(const CorrelationSeries& s, double threshold = 0.5) {
  const auto t1 = first_crossing(s, threshold);
  if (!t1) return std::nullopt;
  return 2.0 * *t1;
}

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;  // g2 ~ prefactor * tau^exponent
  std::size_t points = 0;
};

/// Least-squares line through (log tau, log g2) over tau in [lo, hi].
/// With subtract_baseline the fit uses g2(tau) - g2(0).
inline PowerLawFit short_time_exponent(const CorrelationSeries& s, double lo, double hi,
                                       bool subtract_baseline = false) {
  const double base = subtract_baseline && !s.values.empty() && s.tau.front() == 0.0 ? s.values.front() : 0.0;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.tau[k] < lo || s.tau[k] > hi) continue;
    const double v = s.values[k] - base;
    if (!(s.tau[k] > 0.0) || !(v > 0.0)) throw InvalidArgument("non-positive value inside fit window");
    x.push_back(std::log(s.tau[k]));
    y.push_back(std::log(v));
  }
  if (x.size() < 5) throw InvalidArgument("fit window holds fewer than 5 points");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  return {slope, std::exp(icpt), x.size()};
}

struct Discrepancy {
  double sup_norm = 0.0;
  double rms = 0.0;
  double max_abs_z = 0.0;        // 0 when neither series has errors
  std::vector<double> tau;       // comparison grid
  std::vector<double> diff;      // a - b
  std::vector<double> z_score;   // diff / combined stderr, NaN without errors
};

/// Compares two series on the first series' grid restricted to the overlap,
/// interpolating the second where grids differ.
inline Discrepancy compare_series(const CorrelationSeries& a, const CorrelationSeries& b) {
  if (a.tau.empty() || b.tau.empty()) throw InvalidArgument("cannot compare empty series");
  const double lo = std::max(a.tau.front(), b.tau.front());
  const double hi = std::min(a.tau.back(), b.tau.back());
  if (!(hi >= lo)) throw InvalidArgument("series grids do not overlap");
  auto interp_err = [](const CorrelationSeries& s, double t) {
    if (!s.has_errors()) return 0.0;
    CorrelationSeries e{s.tau, s.std_errors};
    return e.at(t);
  };
  Discrepancy out;
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a.tau[k];
    if (t < lo - 1e-12 || t > hi + 1e-12) continue;
    const double d = a.values[k] - b.at(t);
    const double ea = a.has_errors() ? a.std_errors[k] : 0.0;
    const double eb = interp_err(b, t);
    const double se = std::sqrt(ea * ea + eb * eb);
    const double z = se > 0.0 ? d / se : std::nan("");
    out.tau.push_back(t);
    out.diff.push_back(d);
    out.z_score.push_back(z);
    out.sup_norm = std::max(out.sup_norm, std::abs(d));
    if (se > 0.0) out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
    sq += d * d;
  }
  if (out.tau.empty()) throw InvalidArgument("no comparison points in grid overlap");
  out.rms = std::sqrt(sq / double(out.tau.size()));
  return out;
}

}  // namespace llpb
