#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace llpb {

/// Unit convention of every rate stored in a network.
enum class RateUnit { gamma_referenced, micro_ev };

inline const char* to_string(RateUnit u) {
  return u == RateUnit::micro_ev ? "ueV" : "gamma";
}

/// Density-density coupling 2*alpha_x*n_i*n_j between two distinct sites.
struct CrossKerr {
  int i = 0;
  int j = 0;
  double alpha_x = 0.0;
};

/// Linear plus Kerr model of a driven, lossy cavity array.
///
/// Sites are 0-based in memory. Per-site complex detuning is
/// z_i = detuning_i - i*loss_i/2.
struct CavityNetwork {
  std::string name;
  RMat couplings;  // symmetric, zero diagonal
  RVec detuning;
  RVec loss;
  double kerr = 0.0;
  std::vector<CrossKerr> cross_kerr;
  int drive_site = 0;
  cplx drive_amplitude{0.0, 0.0};
  int signal_site = 0;
  RateUnit unit = RateUnit::gamma_referenced;
  /// Free-form flags for values that were assumed rather than given.
  std::vector<std::string> assumptions;

  int n_sites() const { return static_cast<int>(couplings.rows()); }

  cplx z(int i) const { return {detuning(i), -0.5 * loss(i)}; }

  CVec z_vector() const {
    CVec out(n_sites());
    for (int i = 0; i < n_sites(); ++i) out(i) = z(i);
    return out;
  }

  /// Index of the lowest-loss site; its z is the scalar reference
  /// detuning for searches in the complex plane.
  int reference_site() const {
    int best = 0;
    for (int i = 1; i < n_sites(); ++i)
      if (loss(i) < loss(best)) best = i;
    return best;
  }

  cplx reference_z() const { return z(reference_site()); }

  /// Offsets z_i - z_ref, fixed when the scalar z is varied.
  CVec z_offsets() const {
    CVec out = z_vector();
    out.array() -= reference_z();
    return out;
  }

  bool uniform_z() const { return (z_offsets().array().abs() == 0.0).all(); }

  /// Moves the reference detuning/loss to (delta, gamma) keeping offsets.
  CavityNetwork at(double delta, double gamma) const {
    CavityNetwork out = *this;
    const int r = reference_site();
    const double dd = delta - detuning(r);
    const double dg = gamma - loss(r);
    out.detuning.array() += dd;
    out.loss.array() += dg;
    return out;
  }

  void validate() const {
    const int n = n_sites();
    if (n < 1) throw InvalidArgument("network has no sites");
    if (couplings.cols() != n) throw InvalidArgument("coupling matrix is not square");
    if (detuning.size() != n || loss.size() != n)
      throw InvalidArgument("detuning/loss length does not match site count");
    for (int i = 0; i < n; ++i) {
      if (couplings(i, i) != 0.0) throw InvalidArgument("coupling matrix has nonzero diagonal");
      for (int j = 0; j < i; ++j)
        if (std::abs(couplings(i, j) - couplings(j, i)) > 1e-12)
          throw InvalidArgument("coupling matrix is not symmetric");
      if (!(loss(i) >= 0.0)) throw InvalidArgument("negative loss on site " + std::to_string(i + 1));
    }
    if (drive_site < 0 || drive_site >= n) throw InvalidArgument("drive site out of range");
    if (signal_site < 0 || signal_site >= n) throw InvalidArgument("signal site out of range");
    for (const auto& c : cross_kerr)
      if (c.i < 0 || c.j < 0 || c.i >= n || c.j >= n || c.i == c.j)
        throw InvalidArgument("invalid cross-Kerr pair");
  }
};

/// Uniform-z network from a coupling matrix.
inline CavityNetwork make_network(const RMat& couplings, double delta, double gamma,
                                  double alpha, int drive, int signal, cplx F) {
  CavityNetwork net;
  const auto n = couplings.rows();
  net.couplings = couplings;
  net.detuning = RVec::Constant(n, delta);
  net.loss = RVec::Constant(n, gamma);
  net.kerr = alpha;
  net.drive_site = drive;
  net.signal_site = signal;
  net.drive_amplitude = F;
  net.validate();
  return net;
}

}  // namespace llpb
