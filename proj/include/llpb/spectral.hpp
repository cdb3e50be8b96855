#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "errors.hpp"
#include "network.hpp"
#include "types.hpp"

namespace llpb {

inline constexpr double kPoleGuard = 1e-12;

/// Eigenmodes of a real symmetric coupling matrix.
///
/// Eigenvalues ascend; each eigenvector's first nonzero component is
/// positive.
struct SpectralData {
  RVec eigenvalues;
  RMat eigenvectors;  // columns

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

inline SpectralData eigendecompose(const RMat& couplings) {
  if (couplings.rows() != couplings.cols()) throw InvalidArgument("coupling matrix is not square");
  if ((couplings - couplings.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("coupling matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<RMat> es(couplings);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  SpectralData out{es.eigenvalues(), es.eigenvectors()};
  for (int n = 0; n < out.size(); ++n) {
    for (int i = 0; i < out.size(); ++i) {
      const double c = out.eigenvectors(i, n);
      if (std::abs(c) > 1e-14) {
        if (c < 0) out.eigenvectors.col(n) *= -1.0;
        break;
      }
    }
  }
  return out;
}

/// G(z) = (z + J)^{-1}.
struct GreenEvaluation {
  cplx z;
  CMat matrix;
};

inline void guard_pole(cplx denom, const char* what) {
  if (std::abs(denom) <= kPoleGuard)
    throw PoleProximityError(std::string(what) + " evaluated within pole guard distance");
}

inline GreenEvaluation green_single(cplx z, const SpectralData& sp) {
  const int n = sp.size();
  CVec inv(n);
  for (int m = 0; m < n; ++m) {
    const cplx d = z + sp.eigenvalues(m);
    guard_pole(d, "single-photon Green's function");
    inv(m) = 1.0 / d;
  }
  const CMat phi = sp.eigenvectors.cast<cplx>();
  return {z, phi * inv.asDiagonal() * phi.transpose()};
}

/// <i,j|G2(tau)|k,l> on the ordered pair basis (row i*n+j, column k*n+l):
///   sum_mn phi_m(i) phi_n(j) phi_m(k) phi_n(l) exp(-i eps_n tau) / (2z + eps_m + eps_n)
/// tau = 0 gives the static two-photon resolvent.
inline CMat green_two_photon(cplx z, const SpectralData& sp, double tau = 0.0) {
  const int n = sp.size();
  const int n2 = n * n;
  CMat pair_modes(n2, n2);  // column m*n+q holds phi_m (x) phi_q
  CVec weight(n2);
  for (int m = 0; m < n; ++m)
    for (int q = 0; q < n; ++q) {
      const cplx d = 2.0 * z + sp.eigenvalues(m) + sp.eigenvalues(q);
      guard_pole(d, "two-photon Green's function");
      weight(m * n + q) = std::exp(-I * sp.eigenvalues(q) * tau) / d;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          pair_modes(i * n + j, m * n + q) = sp.eigenvectors(i, m) * sp.eigenvectors(j, q);
    }
  return pair_modes * weight.asDiagonal() * pair_modes.transpose();
}

/// Single-photon block of the effective Hamiltonian at scalar detuning z:
/// H1 = diag(z + offsets) + J.
inline CMat single_photon_block(const CavityNetwork& net, cplx z) {
  CMat h = net.couplings.cast<cplx>();
  const CVec off = net.z_offsets();
  for (int i = 0; i < net.n_sites(); ++i) h(i, i) += z + off(i);
  return h;
}

/// Resolvent of a network at scalar z (site offsets from the reference site
/// are kept). Uniform networks go through the spectral form.
inline CMat network_green(const CavityNetwork& net, cplx z) {
  if (net.uniform_z()) return green_single(z, eigendecompose(net.couplings)).matrix;
  const CMat h1 = single_photon_block(net, z);
  Eigen::ComplexEigenSolver<CMat> es(h1, false);
  for (int i = 0; i < h1.rows(); ++i) guard_pole(es.eigenvalues()(i), "single-photon Green's function");
  return h1.partialPivLu().inverse();
}

inline CMat network_green(const CavityNetwork& net) { return network_green(net, net.reference_z()); }

/// Two-photon operator K = H1 (x) 1 + 1 (x) H1 on the ordered pair basis.
inline CMat two_photon_block(const CMat& h1) {
  const auto n = h1.rows();
  const CMat id = CMat::Identity(n, n);
  CMat k(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) k.block(a * n, b * n, n, n) = h1(a, b) * id + (a == b ? h1 : CMat::Zero(n, n));
  return k;
}

/// Kerr source u = V (G_d (x) G_d) on the ordered pair basis, where V is the
/// diagonal two-photon interaction: 2*alpha on |k,k>, 2*alpha_x on |k,l>.
inline CVec kerr_source(const CavityNetwork& net, const CMat& green) {
  const int n = net.n_sites();
  const int d = net.drive_site;
  CVec u = CVec::Zero(n * n);
  for (int k = 0; k < n; ++k) u(k * n + k) = 2.0 * net.kerr * green(k, d) * green(k, d);
  for (const auto& c : net.cross_kerr) {
    const cplx v = 2.0 * c.alpha_x * green(c.i, d) * green(c.j, d);
    u(c.i * n + c.j) += v;
    u(c.j * n + c.i) += v;
  }
  return u;
}

/// N(z) = G_sd^2 - [K^{-1} u]_{ss}. Its zeros are the zeros of f_ss.
inline cplx fss_numerator(const CavityNetwork& net, cplx z) {
  const int n = net.n_sites();
  const int s = net.signal_site;
  const CMat h1 = single_photon_block(net, z);
  const CMat g = network_green(net, z);
  const CVec w = two_photon_block(h1).partialPivLu().solve(kerr_source(net, g));
  return g(s, net.drive_site) * g(s, net.drive_site) - w(s * n + s);
}

/// f_ss(z) = 1 - [K^{-1} u]_{ss} / G_sd^2, so that g2_ss(0) = |f_ss|^2.
inline cplx fss(const CavityNetwork& net, cplx z) {
  const CMat g = network_green(net, z);
  const cplx gsd = g(net.signal_site, net.drive_site);
  if (std::abs(gsd) == 0.0) throw PoleProximityError("G_sd vanishes: f_ss has a pole here");
  return fss_numerator(net, z) / (gsd * gsd);
}

// ---------------------------------------------------------------------------
// Dyson-series SPDS estimates

struct SpdsCandidate {
  cplx z;
  bool loss_compatible = false;  // Im z < 0, i.e. gamma > 0
  std::string label;
};

/// Roots of the Dyson series of G_sd truncated at 1/z^4:
///   M_sd z^2 - (M^2)_sd z + (M^3)_sd = 0,  M = J + diag(offsets).
/// Three-site networks also report the 1/z^3 truncation z = (M^2)_sd / M_sd.
inline std::vector<SpdsCandidate> dyson_spds_estimate(const CavityNetwork& net) {
  const int n = net.n_sites();
  if (n < 2 || n > 4) throw InvalidArgument("Dyson estimate supports 2 to 4 sites");
  const int s = net.signal_site;
  const int d = net.drive_site;
  if (s == d) throw InvalidArgument("Dyson estimate needs distinct drive and signal sites");

  CMat m = net.couplings.cast<cplx>();
  const CVec off = net.z_offsets();
  for (int i = 0; i < n; ++i) m(i, i) += off(i);
  const CMat m2 = m * m;
  const CMat m3 = m2 * m;
  const cplx a = m(s, d), b = -m2(s, d), c = m3(s, d);

  auto make = [](cplx z, std::string label) {
    return SpdsCandidate{z, z.imag() < -kPoleGuard, std::move(label)};
  };
  std::vector<SpdsCandidate> out;
  if (std::abs(a) > 0.0) {
    const cplx disc = std::sqrt(b * b - 4.0 * a * c);
    out.push_back(make((-b + disc) / (2.0 * a), "dyson-order4"));
    out.push_back(make((-b - disc) / (2.0 * a), "dyson-order4"));
    if (n == 3) out.push_back(make(-b / a, "dyson-order3"));
  } else if (std::abs(b) > 0.0) {
    out.push_back(make(-c / b, "dyson-order4"));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.z.imag() < y.z.imag(); });
  return out;
}

/// Crude pole of the mirror-symmetric four-site ring, z0 = -i sqrt(k) J.
inline cplx crude_ring_pole(double k, double J) { return -I * std::sqrt(k) * J; }

// ---------------------------------------------------------------------------
// Complex zero finding

enum class RootStatus { converged, max_iterations, derivative_underflow, pole_proximity };

inline const char* to_string(RootStatus s) {
  switch (s) {
    case RootStatus::converged: return "converged";
    case RootStatus::max_iterations: return "max-iterations";
    case RootStatus::derivative_underflow: return "derivative-underflow";
    case RootStatus::pole_proximity: return "pole-proximity";
  }
  return "?";
}

struct NewtonOptions {
  int max_iterations = 100;
  double residual_tol = 1e-10;
  double step_tol = 1e-12;  // relative to max(1, |z|)
};

struct ComplexRoot {
  cplx z;
  double residual = 0.0;  // |f(z)| of the undeflated function
  int iterations = 0;
  RootStatus status = RootStatus::max_iterations;
};

/// Newton iteration on f / prod(z - r_k) with a central-difference
/// derivative of step 1e-6*max(1,|z|). Converged means |f| < residual_tol
/// and the last step is below step_tol.
inline ComplexRoot newton_deflated(const std::function<cplx(cplx)>& f, cplx guess,
                                   const std::vector<cplx>& deflate = {},
                                   NewtonOptions opt = {}) {
  auto g = [&](cplx z) {
    cplx v = f(z);
    for (cplx r : deflate) v /= (z - r);
    return v;
  };
  ComplexRoot out{guess};
  cplx z = guess;
  try {
    for (int it = 1; it <= opt.max_iterations; ++it) {
      out.iterations = it;
      const double h = 1e-6 * std::max(1.0, std::abs(z));
      const cplx gz = g(z);
      const cplx dg = (g(z + h) - g(z - h)) / (2.0 * h);
      if (std::abs(dg) < 1e-300) {
        out.z = z;
        out.residual = std::abs(f(z));
        out.status = RootStatus::derivative_underflow;
        return out;
      }
      const cplx step = gz / dg;
      z -= step;
      const double res = std::abs(f(z));
      if (res < opt.residual_tol && std::abs(step) <= opt.step_tol * std::max(1.0, std::abs(z))) {
        out.z = z;
        out.residual = res;
        out.status = RootStatus::converged;
        return out;
      }
    }
  } catch (const PoleProximityError&) {
    out.z = z;
    out.residual = std::numeric_limits<double>::infinity();
    out.status = RootStatus::pole_proximity;
    return out;
  }
  out.z = z;
  out.residual = std::abs(f(z));
  if (out.residual < opt.residual_tol) out.status = RootStatus::converged;
  return out;
}

enum class SpdsMethod { dyson_estimate, newton_refined };

struct SpdsRoot {
  cplx z_star;
  double residual = 0.0;  // |G_sd(z_star)|
  SpdsMethod method = SpdsMethod::newton_refined;
  RootStatus status = RootStatus::converged;
  int iterations = 0;
  bool loss_compatible = false;
};

/// Zero of G_sd(z) near `guess`. Roots already found can be deflated out.
inline SpdsRoot find_spds_zero(const CavityNetwork& net, cplx guess,
                               const std::vector<cplx>& deflate = {}, NewtonOptions opt = {}) {
  net.validate();
  const int s = net.signal_site, d = net.drive_site;
  auto f = [&](cplx z) { return network_green(net, z)(s, d); };
  const ComplexRoot r = newton_deflated(f, guess, deflate, opt);
  SpdsRoot out;
  out.z_star = r.z;
  out.residual = r.residual;
  out.status = r.status;
  out.iterations = r.iterations;
  out.loss_compatible = r.status == RootStatus::converged && r.z.imag() < -kPoleGuard;
  return out;
}

/// Every distinct SPDS zero reachable from the given seeds, by deflation.
inline std::vector<SpdsRoot> find_spds_zeros(const CavityNetwork& net, const std::vector<cplx>& seeds) {
  std::vector<SpdsRoot> roots;
  std::vector<cplx> found;
  for (cplx seed : seeds) {
    SpdsRoot r = find_spds_zero(net, seed, found);
    if (r.status != RootStatus::converged) continue;
    found.push_back(r.z_star);
    roots.push_back(r);
  }
  return roots;
}

// ---------------------------------------------------------------------------
// f_ss zeros around an SPDS pole

/// Closed-form half splitting of the f_ss zero pair, (sqrt 38/16) sqrt(alpha gamma) e^{-i pi/4}.
inline cplx delta_z_closed(double alpha, double gamma) {
  return std::sqrt(38.0) / 16.0 * std::sqrt(alpha * gamma) * std::exp(-I * (M_PI / 4.0));
}

/// The same splitting written through the ring parameters,
/// (sqrt 19/8) k^{1/4} sqrt(alpha J) e^{-i pi/4}; equal to delta_z_closed
/// when gamma = 2 sqrt(k) J.
inline cplx delta_z_closed_kj(double k, double J, double alpha) {
  return std::sqrt(19.0) / 8.0 * std::pow(k, 0.25) * std::sqrt(alpha * J) * std::exp(-I * (M_PI / 4.0));
}

struct FssZeros {
  SpdsRoot pole;
  cplx delta_z_closed;                  // at the network's reference gamma
  cplx delta_z_closed_kj{0.0, 0.0};     // set when ring parameters are known
  std::array<cplx, 2> closed_zeros{};   // pole +- delta_z_closed
  std::array<ComplexRoot, 2> zeros{};  // refined zeros of f_ss
};

/// Locates the SPDS pole of f_ss and its two nearby zeros. The pole is seeded
/// from `pole_guess` or, when absent, from the loss-compatible Dyson root.
inline FssZeros fss_zeros(const CavityNetwork& net, std::optional<cplx> pole_guess = std::nullopt) {
  net.validate();
  if (net.kerr == 0.0 && net.cross_kerr.empty())
    throw InvalidArgument("f_ss zeros are degenerate with the pole when alpha = 0");
  if (!pole_guess) {
    for (const auto& c : dyson_spds_estimate(net))
      if (c.loss_compatible) {
        pole_guess = c.z;
        break;
      }
    if (!pole_guess) throw NumericalError("no loss-compatible Dyson estimate to seed the SPDS pole");
  }
  FssZeros out;
  out.pole = find_spds_zero(net, *pole_guess);
  if (out.pole.status != RootStatus::converged) throw NumericalError("SPDS pole refinement failed");
  const cplx z0 = out.pole.z_star;
  const double gamma = net.loss(net.reference_site());
  out.delta_z_closed = delta_z_closed(net.kerr, gamma);
  out.closed_zeros = {z0 + out.delta_z_closed, z0 - out.delta_z_closed};

  auto f = [&](cplx z) { return fss(net, z); };
  for (int b = 0; b < 2; ++b) out.zeros[b] = newton_deflated(f, out.closed_zeros[b]);
  return out;
}

}  // namespace llpb
