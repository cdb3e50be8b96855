#include <gtest/gtest.h>

#include <random>

#include "llpb/closed_forms.hpp"
#include "llpb/models.hpp"
#include "llpb/spectral.hpp"

using namespace llpb;

namespace {

CavityNetwork ring() { return preset_llpb_four_cavity(FourCavityParams{}); }

// G_sd vanishes with the (d, s) cofactor of zI + J, a polynomial of degree
// n - 2 in z for uniform z. Three samples fix the quadratic exactly.
std::array<cplx, 2> cofactor_roots(const RMat& couplings, int s, int d) {
  auto cof = [&](cplx z) {
    CMat a = couplings.cast<cplx>();
    a.diagonal().array() += z;
    CMat minor(3, 3);
    for (int r = 0, rr = 0; r < 4; ++r) {
      if (r == d) continue;
      for (int c = 0, cc = 0; c < 4; ++c) {
        if (c == s) continue;
        minor(rr, cc++) = a(r, c);
      }
      ++rr;
    }
    return minor.determinant();
  };
  const cplx f0 = cof(0.0), fp = cof(1.0), fm = cof(-1.0);
  const cplx qa = (fp + fm) / 2.0 - f0, qb = (fp - fm) / 2.0, qc = f0;
  const cplx disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  return {(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)};
}

}  // namespace

TEST(Spectral, TwoCavityModes) {
  const auto sp = eigendecompose(two_cavity(1.0, 0.0, 1.0, 0.0).couplings);
  EXPECT_NEAR(sp.eigenvalues(0), -1.0, 1e-14);
  EXPECT_NEAR(sp.eigenvalues(1), 1.0, 1e-14);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(sp.eigenvectors(0, 0), h, 1e-14);
  EXPECT_NEAR(sp.eigenvectors(1, 0), -h, 1e-14);
  EXPECT_NEAR(sp.eigenvectors(1, 1), h, 1e-14);
}

TEST(Spectral, ReconstructionAndOrthonormality) {
  const RMat j = ring().couplings;
  const auto sp = eigendecompose(j);
  const RMat back = sp.eigenvectors * sp.eigenvalues.asDiagonal() * sp.eigenvectors.transpose();
  EXPECT_LT((back - j).norm(), 1e-10 * j.norm());
  EXPECT_LT((sp.eigenvectors.transpose() * sp.eigenvectors - RMat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  for (int n = 1; n < 4; ++n) EXPECT_LE(sp.eigenvalues(n - 1), sp.eigenvalues(n));
}

TEST(Spectral, RingEigenvaluesFollowPerturbativeExpansion) {
  const FourCavityParams p;
  const auto sp = eigendecompose(ring().couplings);
  const double shift = p.J_prime / 2.0 * (1.0 + 1.0 / p.k);
  std::vector<double> expect = {-p.J - shift, -p.J + shift, p.J - shift, p.J + shift};
  std::sort(expect.begin(), expect.end());
  for (int n = 0; n < 4; ++n) EXPECT_NEAR(sp.eigenvalues(n), expect[std::size_t(n)], p.J_prime * p.J_prime / p.J);
}

TEST(Spectral, EigenvaluesInvariantUnderRelabeling) {
  const RMat j = ring().couplings;
  Eigen::PermutationMatrix<4> perm;
  perm.indices() << 2, 0, 3, 1;
  const RMat pj = perm * j * perm.transpose();
  EXPECT_LT((eigendecompose(j).eigenvalues - eigendecompose(pj).eigenvalues).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Spectral, AsymmetricInputRejected) {
  RMat j = RMat::Zero(2, 2);
  j(0, 1) = 1.0;
  EXPECT_THROW(eigendecompose(j), InvalidArgument);
}

TEST(Green, SingleCavity) {
  const auto g = green_single(cplx(0.0, -0.5), eigendecompose(RMat::Zero(1, 1)));
  EXPECT_NEAR(std::abs(g.matrix(0, 0) - cplx(0.0, 2.0)), 0.0, 1e-15);
}

TEST(Green, TwoCavityClosedForm) {
  const double J = 0.7;
  const cplx z(0.3, -0.4);
  const auto g = green_single(z, eigendecompose(two_cavity(J, 0.0, 1.0, 0.0).couplings)).matrix;
  EXPECT_LT(std::abs(g(0, 0) - z / (z * z - J * J)), 1e-14);
  EXPECT_LT(std::abs(g(0, 1) + J / (z * z - J * J)), 1e-14);
}

TEST(Green, ResolventIdentityOnRandomPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<CavityNetwork> nets = {ring(), preset_two_ring_photonic(PhotonicRingParams{}),
                                     preset_llpb_four_cavity(s5_four_cavity_params())};
  for (const auto& net : nets)
    for (int k = 0; k < 50; ++k) {
      const cplx z(u(rng), -std::abs(u(rng)) - 0.01);
      const CMat g = network_green(net, z);
      const CMat a = single_photon_block(net, z);
      EXPECT_LT((a * g - CMat::Identity(4, 4)).norm() / std::max(1.0, a.norm() * g.norm()), 1e-10);
    }
}

TEST(Green, PoleGuard) {
  EXPECT_THROW(green_single(cplx(0.0, 0.0), eigendecompose(RMat::Zero(1, 1))), PoleProximityError);
}

TEST(Green, TwoPhotonSingleCavity) {
  const cplx z(0.2, -0.5);
  const CMat g2 = green_two_photon(z, eigendecompose(RMat::Zero(1, 1)));
  EXPECT_LT(std::abs(g2(0, 0) - 1.0 / (2.0 * z)), 1e-15);
}

TEST(Green, TwoPhotonStaticIsInverseOfPairOperator) {
  const auto net = ring();
  const cplx z(0.01, -0.5);
  const CMat g2 = green_two_photon(z, eigendecompose(net.couplings));
  const CMat k = two_photon_block(single_photon_block(net, z));
  EXPECT_LT((k * g2 - CMat::Identity(16, 16)).norm(), 1e-10);
}

TEST(Spds, DysonEstimateMatchesRadical) {
  const FourCavityParams p;
  const double j12 = p.J_prime / p.k, j41 = p.J, j23 = p.J, j34 = p.J_prime;
  const double radical = std::sqrt(j41 * j41 + j12 * j12 + j23 * j23 + j41 * j23 * j34 / j12);
  EXPECT_NEAR(radical, 0.52058, 1e-5);
  bool found = false;
  for (const auto& c : dyson_spds_estimate(ring()))
    if (c.loss_compatible) {
      EXPECT_NEAR(std::abs(c.z - cplx(0.0, -radical)), 0.0, 1e-12);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Spds, TwoCavityDysonIsImaginaryCoupling) {
  CavityNetwork net = two_cavity(0.3, 0.0, 1.0, 0.0);
  net.signal_site = 1;
  const auto c = dyson_spds_estimate(net);
  ASSERT_EQ(c.size(), 2u);
  for (const auto& x : c) {
    EXPECT_NEAR(x.z.real(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(x.z.imag()), 0.3, 1e-15);
  }
  // The exact G_21 = -J / (z^2 - J^2) never vanishes.
  EXPECT_NE(find_spds_zero(net, c[0].z).status, RootStatus::converged);
}

TEST(Spds, SameDriveAndSignalRejected) {
  EXPECT_THROW(dyson_spds_estimate(two_cavity(0.3, 0.0, 1.0, 0.0)), InvalidArgument);
}

TEST(Spds, ThreeCavityZeroIsRealAndLossIncompatible) {
  const double j1 = 0.3, j2 = 0.2, j3 = 0.5;  // J12, J23, J13
  RMat j = RMat::Zero(3, 3);
  j(0, 1) = j(1, 0) = j1;
  j(1, 2) = j(2, 1) = j2;
  j(0, 2) = j(2, 0) = j3;
  const CavityNetwork net = make_network(j, 0.0, 1.0, 0.0, 0, 1, 1e-5);
  // Exact off-diagonal numerator J2 J3 - z J1 vanishes only at real z.
  const double exact = j2 * j3 / j1;
  bool order3 = false;
  for (const auto& x : dyson_spds_estimate(net))
    if (x.label == "dyson-order3") {
      EXPECT_NEAR(std::abs(x.z - exact), 0.0, 1e-14);
      EXPECT_FALSE(x.loss_compatible);
      order3 = true;
    }
  EXPECT_TRUE(order3);
  for (const auto& x : dyson_spds_estimate(net)) {
    const SpdsRoot r = find_spds_zero(net, x.z);
    if (r.status != RootStatus::converged) continue;
    EXPECT_NEAR(std::abs(r.z_star - exact), 0.0, 1e-9);
    EXPECT_FALSE(r.loss_compatible);
  }
}

TEST(Spds, RefinedRootMatchesCofactorPolynomial) {
  const auto net = ring();
  const SpdsRoot r = find_spds_zero(net, cplx(0.0, -0.49));
  ASSERT_EQ(r.status, RootStatus::converged);
  EXPECT_LT(std::abs(network_green(net, r.z_star)(1, 0)), 1e-10);
  const auto roots = cofactor_roots(net.couplings, 1, 0);
  const double best = std::min(std::abs(roots[0] - r.z_star), std::abs(roots[1] - r.z_star));
  EXPECT_LT(best, 1e-9);
  EXPECT_NEAR(r.z_star.imag(), -0.4901861160824529, 1e-9);
  EXPECT_NEAR(r.z_star.real(), 0.0, 1e-9);
  EXPECT_TRUE(r.loss_compatible);
}

TEST(Spds, RefinedRootNearDysonAndCrudeEstimates) {
  const auto net = ring();
  const SpdsRoot r = find_spds_zero(net, cplx(0.0, -0.52));
  ASSERT_EQ(r.status, RootStatus::converged);
  EXPECT_LT(std::abs(r.z_star - cplx(0.0, -0.52058)) / std::abs(r.z_star), 0.15);
  const cplx crude = crude_ring_pole(16.0, 0.1227);
  EXPECT_NEAR(crude.imag(), -0.4908, 1e-12);
  EXPECT_LT(std::abs(crude - r.z_star) / std::abs(r.z_star), 0.10);
}

TEST(Spds, DecoupledDimersHaveNoSignalPath) {
  FourCavityParams p;
  p.J_prime = 0.0;
  const CMat g = network_green(preset_llpb_four_cavity(p), cplx(0.1, -0.5));
  EXPECT_EQ(g(1, 0), cplx(0.0));
}

TEST(Spds, DeflationFindsDistinctRoots) {
  const auto roots = find_spds_zeros(ring(), {cplx(0.0, -0.5), cplx(0.0, -0.5)});
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_GT(std::abs(roots[0].z_star - roots[1].z_star), 1e-3);
}

TEST(FssZeros, ClosedFormSplitting) {
  const FourCavityParams p;
  const FssZeros zs = fss_zeros(ring());
  const double mag = std::sqrt(38.0) / 16.0 * std::sqrt(p.alpha * p.gamma);
  EXPECT_NEAR(std::abs(zs.delta_z_closed), mag, 1e-15);
  EXPECT_NEAR(std::arg(zs.delta_z_closed), -M_PI / 4.0, 1e-15);
  EXPECT_LT(std::abs((zs.closed_zeros[0] + zs.closed_zeros[1]) / 2.0 - zs.pole.z_star), 1e-12);
}

TEST(FssZeros, ClosedFormsAgreeWhenLossMatchesRing) {
  const double k = 16.0, J = 0.1227, a = 0.001227;
  EXPECT_LT(std::abs(delta_z_closed(a, 2.0 * std::sqrt(k) * J) - delta_z_closed_kj(k, J, a)), 1e-15);
}

TEST(FssZeros, RefinedZerosAreZerosOfFss) {
  const auto net = ring();
  const FssZeros zs = fss_zeros(net);
  for (const auto& z : zs.zeros) {
    ASSERT_EQ(z.status, RootStatus::converged);
    EXPECT_LT(std::abs(fss(net, z.z)), 1e-10);
    EXPECT_LT(z.z.imag(), 0.0);
  }
  // One of the pair sits at the physical operating point near gamma = 1.
  const double best = std::min(std::abs(zs.zeros[0].z - cplx(0.00962038, -0.499981)),
                               std::abs(zs.zeros[1].z - cplx(0.00962038, -0.499981)));
  EXPECT_LT(best, 1e-6);
}

TEST(FssZeros, SplittingScalesAsSqrtAlpha) {
  FourCavityParams p;
  p.alpha = 1e-4;
  const double small = std::abs(fss_zeros(preset_llpb_four_cavity(p)).delta_z_closed);
  p.alpha = 4e-4;
  EXPECT_NEAR(std::abs(fss_zeros(preset_llpb_four_cavity(p)).delta_z_closed) / small, 2.0, 1e-12);
}

TEST(FssZeros, DegenerateWithoutKerr) {
  FourCavityParams p;
  p.alpha = 0.0;
  EXPECT_THROW(fss_zeros(preset_llpb_four_cavity(p)), InvalidArgument);
}

TEST(Fss, LinearNetworksAreCoherent) {
  FourCavityParams p;
  p.alpha = 0.0;
  std::vector<CavityNetwork> nets = {preset_llpb_four_cavity(p), preset_conventional(0.0, 0.1, 1.0),
                                     two_cavity(3.0, 0.2, 1.0, 0.0), preset_two_ring_photonic({}, 1e-5, 0.0)};
  for (const auto& net : nets) EXPECT_NEAR(std::abs(fss(net, net.reference_z()) - 1.0), 0.0, 1e-14);
}

TEST(Models, ConventionalOptimalDetuning) { EXPECT_NEAR(conventional_delta_min(10.0, 1.0), 0.0249378, 5e-8); }

TEST(Models, UpbAsymptoticRootCondition) {
  const double a = 0.001227, g = 1.0;
  const UpbPreset p = preset_upb_two_cavity(a, g, UpbMode::asymptotic);
  const cplx z(p.point.delta, -g / 2.0);
  EXPECT_LT(std::abs(z * z * z + a * p.point.J * p.point.J / 2.0), 1e-9 * a * p.point.J * p.point.J);
  EXPECT_NEAR(p.point.delta, 0.2887, 5e-5);
}

TEST(Models, UpbExactNearQuotedOperatingPoint) {
  const UpbPreset p = preset_upb_two_cavity(0.001227, 1.0);
  EXPECT_LT(std::abs(fss(p.network, p.network.reference_z())), 1e-12);
  EXPECT_NEAR(p.point.J / 17.67, 1.0, 0.01);
  EXPECT_NEAR(p.point.delta / 0.2915, 1.0, 0.02);
  EXPECT_NEAR(p.point.J_asymptotic / p.point.J, 1.0, 0.01);
}

TEST(Models, UpbRejectsNonPositiveRates) {
  EXPECT_THROW(preset_upb_two_cavity(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(preset_upb_two_cavity(0.001, 0.0), InvalidArgument);
}

TEST(Models, RingTopology) {
  const auto net = ring();
  const FourCavityParams p;
  EXPECT_DOUBLE_EQ(net.couplings(0, 1), p.J_prime / p.k);
  EXPECT_DOUBLE_EQ(net.couplings(0, 3), p.J);
  EXPECT_DOUBLE_EQ(net.couplings(1, 2), p.J);
  EXPECT_DOUBLE_EQ(net.couplings(2, 3), p.J_prime);
  EXPECT_EQ(net.drive_site, 0);
  EXPECT_EQ(net.signal_site, 1);
  EXPECT_FALSE(net.assumptions.empty());
}

TEST(Models, RingRejectsZeroRatio) {
  FourCavityParams p;
  p.k = 0.0;
  EXPECT_THROW(preset_llpb_four_cavity(p), InvalidArgument);
}

TEST(Models, PresetCouplingsSymmetricZeroDiagonal) {
  std::vector<CavityNetwork> nets = {ring(), preset_two_ring_photonic({}),
                                     preset_upb_two_cavity(0.001227, 1.0).network,
                                     preset_conventional(10.0, 0.02491, 1.0)};
  for (const auto& net : nets) {
    EXPECT_EQ((net.couplings - net.couplings.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(net.couplings.diagonal().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Models, ModeVolume) { EXPECT_NEAR(PhotonicRingParams{}.mode_volume_um3(), 5.27788, 5e-6); }

TEST(Models, KerrEstimateNearQuotedValue) {
  const double a = estimate_kerr(PhotonicRingParams{});
  EXPECT_NEAR(a / 4.7e-6, 1.0, 0.02);
  PhotonicRingParams big;
  big.R *= 2.0;
  EXPECT_NEAR(estimate_kerr(big) / a, 0.5, 1e-14);
}

TEST(Models, PhotonicReducesToRingWithoutBusLoss) {
  PhotonicRingParams p;
  p.gamma_in = p.gamma_out = 0.0;
  const auto photonic = preset_two_ring_photonic(p, 1e-5, 0.0);
  FourCavityParams q;
  q.J = p.J;
  q.J_prime = p.J_prime;
  q.k = p.J_prime / p.J_dprime;
  q.gamma = p.gamma;
  q.delta = p.delta;
  q.alpha = 0.0;
  const auto abstract = preset_llpb_four_cavity(q);
  EXPECT_LT((photonic.couplings - abstract.couplings).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((photonic.loss - abstract.loss).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(photonic.drive_site, abstract.drive_site);
  EXPECT_EQ(photonic.signal_site, abstract.signal_site);
}

TEST(Models, AtKeepsSiteOffsets) {
  const auto net = preset_two_ring_photonic({});
  const auto moved = net.at(0.3, 7.0);
  EXPECT_LT((moved.z_offsets() - net.z_offsets()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(moved.loss(moved.reference_site()), 7.0, 1e-14);
}
