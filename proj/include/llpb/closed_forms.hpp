#pragma once

#include <cmath>
#include <vector>

#include "models.hpp"
#include "series.hpp"
#include "spectral.hpp"

namespace llpb {

/// Single Kerr cavity, exact in alpha at lowest order in the drive:
///   g2(tau) = |1 - alpha/(alpha + z) e^{-i z tau}|^2.
inline CorrelationSeries g2_conventional_closed(double alpha, double delta, double gamma,
                                                const std::vector<double>& tau) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  const cplx z(delta, -gamma / 2.0);
  CorrelationSeries out;
  out.tau = tau;
  out.metadata["engine"] = "conventional-closed";
  for (double t : tau) out.values.push_back(std::norm(1.0 - alpha / (alpha + z) * std::exp(-I * z * t)));
  out.validate();
  return out;
}

/// (Delta^2 + gamma^2/4) / ((Delta + alpha)^2 + gamma^2/4)
inline double conventional_g2_zero(double alpha, double delta, double gamma) {
  const double q = gamma * gamma / 4.0;
  return (delta * delta + q) / ((delta + alpha) * (delta + alpha) + q);
}

struct UpbClosedResult {
  CorrelationSeries series;
  UpbOperatingPoint point;
};

/// (1 - e^{-gamma tau/2} cos(Delta tau) cos(J tau))^2 at the UPB point.
inline CorrelationSeries g2_upb_closed_at(double J, double delta, double gamma, const std::vector<double>& tau) {
  CorrelationSeries out;
  out.tau = tau;
  out.metadata["engine"] = "upb-closed";
  for (double t : tau) {
    const double v = 1.0 - std::exp(-gamma * t / 2.0) * std::cos(delta * t) * std::cos(J * t);
    out.values.push_back(v * v);
  }
  out.validate();
  return out;
}

inline UpbClosedResult g2_upb_closed(double alpha, double gamma, const std::vector<double>& tau,
                                     UpbMode mode = UpbMode::exact) {
  const UpbPreset p = preset_upb_two_cavity(alpha, gamma, mode);
  UpbClosedResult out{g2_upb_closed_at(p.point.J, p.point.delta, gamma, tau), p.point};
  if (alpha > 0.1 * gamma) out.series.metadata["warning"] = "alpha not small against gamma";
  return out;
}

/// Operating z of the ring closed form: z0 + dz with z0 = -i sqrt(k) J and
/// dz = (sqrt 19/8) k^{1/4} sqrt(alpha J) e^{-i pi/4}.
inline cplx llpb_closed_z(const FourCavityParams& p) {
  return crude_ring_pole(p.k, p.J) + delta_z_closed_kj(p.k, p.J, p.alpha);
}

/// Ring closed form g2_22(tau) = |1 - e^{-i z tau} S(tau)|^2 with
///   S = sqrt(k)/304 { cos(J tau) [16 J tau (3k + 10) + 304/sqrt(k) - 3 (J'^2 tau/J) k^2]
///                   + 3 sin(J tau) [48 - 16k + (J'^2 tau/J) k^{3/2} + (J'^2/J^2) k^2] }.
/// S(0) = 1, so g2(0) = 0 by construction.
inline CorrelationSeries g2_llpb_closed(const FourCavityParams& p, const std::vector<double>& tau) {
  p.validate();
  const double k = p.k, J = p.J, Jp = p.J_prime, sk = std::sqrt(k);
  const cplx z = llpb_closed_z(p);
  CorrelationSeries out;
  out.tau = tau;
  out.metadata["engine"] = "llpb-closed";
  if (Jp > 0.3 * J) out.metadata["warning"] = "J' not small against J";
  for (double t : tau) {
    const double c = std::cos(J * t), s = std::sin(J * t);
    const double a = Jp * Jp * t / J;
    const double S = sk / 304.0 *
                     (c * (16.0 * J * t * (3.0 * k + 10.0) + 304.0 / sk - 3.0 * a * k * k) +
                      3.0 * s * (48.0 - 16.0 * k + a * k * sk + Jp * Jp / (J * J) * k * k));
    out.values.push_back(std::norm(1.0 - std::exp(-I * z * t) * S));
  }
  out.validate();
  return out;
}

}  // namespace llpb
