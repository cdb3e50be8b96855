#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"
#include "network.hpp"
#include "series.hpp"
#include "spectral.hpp"

namespace llpb {

/// Lowest-order-in-F steady state, first order in the Kerr terms.
///
/// pair_amplitudes is the symmetric ordered-pair wavefunction Phi with
/// |psi2> = (1/2) sum_kl Phi_kl a_k^+ a_l^+ |0>. The Fock amplitudes are
/// Phi_kl on |1_k 1_l> (k < l) and Phi_kk / sqrt(2) on |2_k>, listed in
/// `two_photon` over `pairs` (k <= l, lexicographic).
struct WeakDriveSteadyState {
  CVec one_photon;
  CMat pair_amplitudes;
  CVec two_photon;
  std::vector<std::pair<int, int>> pairs;
  RVec occupations;
};

inline void require_lossy(const CavityNetwork& net) {
  for (int i = 0; i < net.n_sites(); ++i)
    if (!(net.loss(i) > 0.0))
      throw InvalidArgument("site " + std::to_string(i + 1) + " has zero loss: no steady state");
}

inline WeakDriveSteadyState steady_state_weak_drive(const CavityNetwork& net) {
  net.validate();
  require_lossy(net);
  const int n = net.n_sites();
  const cplx F = net.drive_amplitude;
  const CMat g = network_green(net);
  const CMat k = two_photon_block(single_photon_block(net, net.reference_z()));
  const CVec w = k.partialPivLu().solve(kerr_source(net, g));

  WeakDriveSteadyState out;
  out.one_photon = -F * g.col(net.drive_site);
  out.pair_amplitudes.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      out.pair_amplitudes(a, b) = F * F * (g(a, net.drive_site) * g(b, net.drive_site) - w(a * n + b));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) out.pairs.emplace_back(a, b);
  out.two_photon.resize(static_cast<Eigen::Index>(out.pairs.size()));
  for (std::size_t p = 0; p < out.pairs.size(); ++p) {
    const auto [a, b] = out.pairs[p];
    out.two_photon(Eigen::Index(p)) = a == b ? out.pair_amplitudes(a, a) / std::sqrt(2.0) : out.pair_amplitudes(a, b);
  }
  out.occupations = out.one_photon.cwiseAbs2();
  return out;
}

/// Delayed correlation g2_ij(tau) of the weak-drive, first-order-in-Kerr
/// theory:
///   g2_ij(tau) = |1 - [exp(-i H1 tau) w_j]_i / (G_id G_jd)|^2,
///   w_j(l) = [K^{-1} u]_{j n + l},
/// where the delay acts on the measured site i. For uniform z this equals
///   |1 - 2 alpha e^{-i z tau} sum_k G_kd^2 <j,i|G2(tau)|k,k> / (G_id G_jd)|^2.
class WeakDriveCorrelator {
 public:
  explicit WeakDriveCorrelator(const CavityNetwork& net) : net_(net) {
    net_.validate();
    require_lossy(net_);
    n_ = net_.n_sites();
    z_ = net_.reference_z();
    h1_ = single_photon_block(net_, z_);
    green_ = network_green(net_, z_);
    w_ = two_photon_block(h1_).partialPivLu().solve(kerr_source(net_, green_));
    uniform_ = net_.uniform_z();
    if (uniform_) spectral_ = eigendecompose(net_.couplings);
    scale_ = green_.cwiseAbs().maxCoeff();
  }

  const CMat& green() const { return green_; }

  /// True when G_id G_jd vanishes to working precision at this z.
  bool diverging(int i, int j) const {
    const int d = net_.drive_site;
    return std::abs(green_(i, d)) <= 1e-12 * scale_ || std::abs(green_(j, d)) <= 1e-12 * scale_;
  }

  /// exp(-i H1 tau), spectral for uniform z and Pade otherwise.
  CMat propagator(double tau) const {
    if (uniform_) {
      const CMat phi = spectral_.eigenvectors.cast<cplx>();
      CVec ph(n_);
      for (int m = 0; m < n_; ++m) ph(m) = std::exp(-I * (z_ + spectral_.eigenvalues(m)) * tau);
      return phi * ph.asDiagonal() * phi.transpose();
    }
    const CMat a = (-I * tau) * h1_;
    return a.exp();
  }

  /// 1 - [e^{-i H1 tau} w_j]_i / (G_id G_jd); g2 is its squared modulus.
  cplx amplitude_ratio(int i, int j, double tau) const {
    const int d = net_.drive_site;
    const CVec wj = w_.segment(j * n_, n_);
    const cplx evolved = (propagator(tau).row(i) * wj).value();
    return 1.0 - evolved / (green_(i, d) * green_(j, d));
  }

  double g2(int i, int j, double tau) const { return std::norm(amplitude_ratio(i, j, tau)); }

 private:
  CavityNetwork net_;
  int n_ = 0;
  cplx z_;
  CMat h1_;
  CMat green_;
  CVec w_;
  bool uniform_ = true;
  SpectralData spectral_;
  double scale_ = 1.0;
};

/// g2_ij on a delay grid; i = j = signal site unless given.
inline CorrelationSeries g2_tau_analytic(const CavityNetwork& net, const std::vector<double>& tau,
                                         int i = -1, int j = -1) {
  if (i < 0) i = net.signal_site;
  if (j < 0) j = net.signal_site;
  WeakDriveCorrelator corr(net);
  CorrelationSeries out;
  out.tau = tau;
  out.source = SeriesSource::analytic;
  out.metadata["engine"] = "weak-drive";
  if (corr.diverging(i, j)) {
    out.status = SeriesStatus::diverging_denominator;
    out.values.assign(tau.size(), std::numeric_limits<double>::infinity());
    return out;
  }
  out.values.reserve(tau.size());
  for (double t : tau) out.values.push_back(corr.g2(i, j, t));
  out.validate();
  return out;
}

/// g2_ss(0) = |f_ss|^2 at the network's own operating point.
inline double g2_zero_analytic(const CavityNetwork& net) {
  return std::norm(fss(net, net.reference_z()));
}

}  // namespace llpb
