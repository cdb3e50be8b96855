#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"
#include "network.hpp"
#include "spectral.hpp"

namespace llpb {

inline constexpr double kDefaultDrive = 1e-5;

/// Mirror-symmetric four-site ring: J12 = J'/k, J14 = J23 = J, J34 = J'.
struct FourCavityParams {
  double k = 16.0;
  double J = 0.1227;
  double J_prime = 0.02454;
  double alpha = 0.001227;
  double delta = 0.009571;
  double gamma = 1.0;

  void validate() const {
    if (!(k > 0.0)) throw InvalidArgument("ring ratio k must be positive");
    if (J < 0 || J_prime < 0 || alpha < 0 || gamma < 0)
      throw InvalidArgument("ring rates must be nonnegative");
  }
};

/// Two coupled microrings; ring 1 carries the bus waveguides.
/// Lengths in um, n2 in um^2/W, wavelength in nm, rates in ueV.
struct PhotonicRingParams {
  double R = 3.0;
  double w = 0.8;
  double t = 0.35;
  double n_core = 2.45;
  double n_clad = 1.44;
  double n2 = 4.8e-6;
  double wavelength_nm = 1550.0;
  double gamma = 5.0;
  double gamma_in = 2.5;
  double gamma_out = 2.5;
  double J = 1.0;  // inter-ring coupling; tunable, no nominal value
  double J_prime = 0.2;
  double J_dprime = 0.02;
  double delta = 0.0;

  double mode_volume_um3() const { return 2.0 * M_PI * R * w * t; }

  void validate() const {
    if (!(R > 0 && w > 0 && t > 0 && n_core > 0 && n_clad > 0 && wavelength_nm > 0))
      throw InvalidArgument("ring geometry and indices must be positive");
    if (gamma < 0 || gamma_in < 0 || gamma_out < 0) throw InvalidArgument("ring losses must be nonnegative");
  }
};

// ---------------------------------------------------------------------------

inline CavityNetwork preset_conventional(double alpha, double delta, double gamma,
                                         cplx F = kDefaultDrive) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  CavityNetwork net = make_network(RMat::Zero(1, 1), delta, gamma, alpha, 0, 0, F);
  net.name = "conventional";
  return net;
}

/// Detuning minimizing the single-cavity g2(0): -(alpha - sqrt(alpha^2 + gamma^2))/2.
inline double conventional_delta_min(double alpha, double gamma) {
  return -(alpha - std::sqrt(alpha * alpha + gamma * gamma)) / 2.0;
}

inline CavityNetwork two_cavity(double J, double delta, double gamma, double alpha, cplx F = kDefaultDrive) {
  RMat c = RMat::Zero(2, 2);
  c(0, 1) = c(1, 0) = J;
  return make_network(c, delta, gamma, alpha, 0, 0, F);
}

enum class UpbMode { asymptotic, exact };

struct UpbOperatingPoint {
  double J = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  double J_asymptotic = 0.0;
  double delta_asymptotic = 0.0;
  UpbMode mode = UpbMode::exact;
  int iterations = 0;
};

struct UpbPreset {
  CavityNetwork network;
  UpbOperatingPoint point;
};

/// Two-site UPB point at fixed gamma. The asymptotic root is z^3 = -alpha J^2/2
/// with z = |z| e^{-i pi/3}; exact mode then solves f_11(z) = 0 for (J, Delta)
/// by Newton iteration on the full weak-drive expression.
inline UpbPreset preset_upb_two_cavity(double alpha, double gamma, UpbMode mode = UpbMode::exact,
                                       cplx F = kDefaultDrive) {
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw InvalidArgument("UPB preset needs alpha > 0 and gamma > 0");
  UpbOperatingPoint p;
  p.mode = mode;
  p.gamma = gamma;
  const double r = gamma / std::sqrt(3.0);  // |z|
  p.delta_asymptotic = r / 2.0;
  p.J_asymptotic = std::sqrt(2.0 * r * r * r / alpha);
  p.J = p.J_asymptotic;
  p.delta = p.delta_asymptotic;

  if (mode == UpbMode::exact) {
    auto residual = [&](double J, double D) { return fss(two_cavity(J, D, gamma, alpha), cplx(D, -gamma / 2)); };
    for (int it = 1; it <= 100; ++it) {
      p.iterations = it;
      const cplx f0 = residual(p.J, p.delta);
      if (std::abs(f0) < 1e-13) break;
      const double hJ = 1e-7 * p.J, hD = 1e-7 * std::max(1e-3, std::abs(p.delta));
      const cplx fJ = (residual(p.J + hJ, p.delta) - residual(p.J - hJ, p.delta)) / (2 * hJ);
      const cplx fD = (residual(p.J, p.delta + hD) - residual(p.J, p.delta - hD)) / (2 * hD);
      Eigen::Matrix2d jac;
      jac << fJ.real(), fD.real(), fJ.imag(), fD.imag();
      const Eigen::Vector2d step = jac.partialPivLu().solve(Eigen::Vector2d(f0.real(), f0.imag()));
      p.J -= step(0);
      p.delta -= step(1);
      if (it == 100) throw NumericalError("exact UPB tuning did not converge");
    }
  }
  UpbPreset out{two_cavity(p.J, p.delta, gamma, alpha, F), p};
  out.network.name = "upb-two-cavity";
  if (F == kDefaultDrive) out.network.assumptions.push_back("drive_amplitude=1e-5 assumed");
  return out;
}

inline RMat four_cavity_couplings(double k, double J, double J_prime) {
  RMat c = RMat::Zero(4, 4);
  c(0, 1) = c(1, 0) = J_prime / k;
  c(0, 3) = c(3, 0) = J;
  c(1, 2) = c(2, 1) = J;
  c(2, 3) = c(3, 2) = J_prime;
  return c;
}

/// Drive on site 1, signal on site 2 (0-based: 0 and 1).
inline CavityNetwork preset_llpb_four_cavity(const FourCavityParams& p, cplx F = kDefaultDrive) {
  p.validate();
  CavityNetwork net = make_network(four_cavity_couplings(p.k, p.J, p.J_prime), p.delta, p.gamma,
                                   p.alpha, 0, 1, F);
  net.name = "llpb-four-cavity";
  if (F == kDefaultDrive) net.assumptions.push_back("drive_amplitude=1e-5 assumed");
  return net;
}

/// k = 4 ring used for the drive-amplitude study. gamma = 2 places the
/// operating point on the f_ss zero for these couplings.
inline FourCavityParams s5_four_cavity_params() {
  FourCavityParams p;
  p.k = 4.0;
  p.J = 0.5386;
  p.J_prime = 0.5386;
  p.alpha = 0.0194;
  p.delta = 0.0652;
  p.gamma = 2.0;
  return p;
}

/// alpha = c (hbar omega)^2 n2 / (n^2 V) with V = 2 pi R w t, in ueV.
inline double estimate_kerr(const PhotonicRingParams& p) {
  p.validate();
  constexpr double c = 299792458.0;
  constexpr double hbar = 1.054571817e-34;
  constexpr double e = 1.602176634e-19;
  const double V = p.mode_volume_um3() * 1e-18;
  if (!(V > 0.0)) throw InvalidArgument("zero mode volume");
  const double omega = 2.0 * M_PI * c / (p.wavelength_nm * 1e-9);
  const double n2 = p.n2 * 1e-12;
  const double joules = c * (hbar * omega) * (hbar * omega) * n2 / (p.n_core * p.n_core * V);
  return joules / e * 1e6;
}

/// Sites 1,2: CW/CCW modes of the bus ring (loss gamma + gamma_in + gamma_out);
/// sites 3,4: the second ring (loss gamma). Cross-Kerr alpha_x = alpha on
/// each CW/CCW pair.
inline CavityNetwork preset_two_ring_photonic(const PhotonicRingParams& p, cplx F = kDefaultDrive,
                                              std::optional<double> alpha = std::nullopt) {
  p.validate();
  const double a = alpha ? *alpha : estimate_kerr(p);
  CavityNetwork net;
  net.name = "two-ring-photonic";
  net.unit = RateUnit::micro_ev;
  net.couplings = RMat::Zero(4, 4);
  net.couplings(0, 1) = net.couplings(1, 0) = p.J_dprime;
  net.couplings(2, 3) = net.couplings(3, 2) = p.J_prime;
  net.couplings(0, 3) = net.couplings(3, 0) = p.J;
  net.couplings(1, 2) = net.couplings(2, 1) = p.J;
  net.detuning = RVec::Constant(4, p.delta);
  net.loss = RVec(4);
  net.loss << p.gamma + p.gamma_in + p.gamma_out, p.gamma + p.gamma_in + p.gamma_out, p.gamma, p.gamma;
  net.kerr = a;
  net.cross_kerr = {{0, 1, a}, {2, 3, a}};
  net.drive_site = 0;
  net.signal_site = 1;
  net.drive_amplitude = F;
  if (F == kDefaultDrive) net.assumptions.push_back("drive_amplitude=1e-5 assumed");
  net.validate();
  return net;
}

}  // namespace llpb
