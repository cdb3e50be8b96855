#include <gtest/gtest.h>

#include "fock_oracle.hpp"
#include "llpb/closed_forms.hpp"
#include "llpb/models.hpp"
#include "llpb/spectral.hpp"
#include "llpb/sweeps.hpp"
#include "llpb/weak_drive.hpp"

using namespace llpb;

namespace {

CavityNetwork ring(double delta = 0.009571, double gamma = 1.0) {
  return preset_llpb_four_cavity(FourCavityParams{}).at(delta, gamma);
}

std::vector<CavityNetwork> lossy_presets() {
  return {ring(), ring(0.05, 1.0), preset_conventional(10.0, 0.02491, 1.0),
          preset_upb_two_cavity(0.001227, 1.0).network, preset_two_ring_photonic({}),
          preset_llpb_four_cavity(s5_four_cavity_params())};
}

}  // namespace

TEST(WeakDrive, SingleCavityAmplitude) {
  const auto s = steady_state_weak_drive(preset_conventional(0.0, 0.0, 1.0));
  EXPECT_LT(std::abs(s.one_photon(0) - cplx(0.0, -2e-5)), 1e-20);
  EXPECT_NEAR(s.occupations(0), 4e-10, 1e-24);
}

TEST(WeakDrive, OccupationsFollowGreenFunction) {
  const auto net = ring();
  const auto s = steady_state_weak_drive(net);
  const CMat g = network_green(net);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(s.occupations(i), std::norm(1e-5 * g(i, 0)), 1e-12 * s.occupations(i));
}

TEST(WeakDrive, LinearTwoPhotonPartFactorizes) {
  FourCavityParams p;
  p.alpha = 0.0;
  const auto s = steady_state_weak_drive(preset_llpb_four_cavity(p));
  const CMat product = s.one_photon * s.one_photon.transpose();
  EXPECT_LT((s.pair_amplitudes - product).cwiseAbs().maxCoeff(), 1e-12 * product.cwiseAbs().maxCoeff());
}

TEST(WeakDrive, ZeroLossRejected) {
  FourCavityParams p;
  p.gamma = 0.0;
  EXPECT_THROW(steady_state_weak_drive(preset_llpb_four_cavity(p)), InvalidArgument);
}

TEST(WeakDrive, PairAmplitudesMatchFockOracle) {
  for (const auto& net : {ring(), preset_two_ring_photonic({})}) {
    const auto s = steady_state_weak_drive(net);
    const auto w = oracle::weak_state(net, {3, 3, 3, 3}, true);
    for (std::size_t p = 0; p < s.pairs.size(); ++p) {
      const auto [a, b] = s.pairs[p];
      std::vector<int> occ(4, 0);
      ++occ[std::size_t(a)];
      ++occ[std::size_t(b)];
      const cplx fock = w.psi2(Eigen::Index(w.basis.index(occ)));
      EXPECT_LT(std::abs(s.two_photon(Eigen::Index(p)) - fock), 1e-9 * s.two_photon.cwiseAbs().maxCoeff());
    }
  }
}

TEST(WeakDrive, G2ZeroMatchesFirstOrderFockOracle) {
  for (const auto& net : {ring(), ring(0.05, 1.0), ring(-0.02, 0.8), preset_two_ring_photonic({})}) {
    const double fock = oracle::g2_zero(oracle::weak_state(net, {3, 3, 3, 3}, true), 1, 1);
    EXPECT_NEAR(g2_zero_analytic(net) / fock, 1.0, 1e-7);
  }
}

TEST(WeakDrive, DelayedCorrelationMatchesFockOracle) {
  for (const auto& net : {ring(), ring(0.05, 1.2)}) {
    const auto w = oracle::weak_state(net, {3, 3, 3, 3}, true);
    const WeakDriveCorrelator corr(net);
    for (auto [i, j] : std::vector<std::pair<int, int>>{{1, 1}, {0, 1}, {1, 0}, {2, 3}})
      for (double t : {0.0, 0.3, 2.0, 7.5}) {
        const double fock = oracle::g2_tau(w, net, i, j, t);
        EXPECT_NEAR(corr.g2(i, j, t), fock, 1e-8 * std::max(1.0, fock)) << i << j << " tau " << t;
      }
  }
}

TEST(WeakDrive, FirstOrderKerrWithinOrderAlphaOfExactWeakDrive) {
  const auto net = ring(0.05, 1.0);
  const double exact = oracle::g2_zero(oracle::weak_state(net, {3, 3, 3, 3}, false), 1, 1);
  EXPECT_LT(std::abs(g2_zero_analytic(net) - exact) / exact, 10.0 * net.kerr);
}

TEST(WeakDrive, NoKerrMeansCoherentLight) {
  const auto tau = linspace(0.0, 20.0, 41);
  for (auto net : lossy_presets()) {
    net.kerr = 0.0;
    net.cross_kerr.clear();
    for (int i = 0; i < net.n_sites(); ++i)
      for (int j = 0; j < net.n_sites(); ++j) {
        const auto s = g2_tau_analytic(net, tau, i, j);
        for (double v : s.values) ASSERT_NEAR(v, 1.0, 1e-12);
      }
  }
}

TEST(WeakDrive, TailsReturnToOne) {
  for (const auto& net : lossy_presets()) {
    const double t = 40.0 / net.loss.minCoeff();
    const auto s = g2_tau_analytic(net, {0.0, t});
    EXPECT_LT(std::abs(s.values[1] - 1.0), 1e-3) << net.name;
  }
}

TEST(WeakDrive, ValuesNonnegative) {
  for (const auto& net : lossy_presets()) EXPECT_NO_THROW(g2_tau_analytic(net, linspace(0.0, 30.0, 301)).validate());
}

TEST(WeakDrive, TauZeroEqualsStaticValue) {
  for (const auto& net : lossy_presets())
    EXPECT_NEAR(g2_tau_analytic(net, {0.0}).values[0], g2_zero_analytic(net), 1e-12 * std::max(1.0, g2_zero_analytic(net)));
}

TEST(WeakDrive, RefinedZeroIsDeepMinimum) {
  const auto base = ring();
  const auto m = refine_g2_zero(base, 0.0095, 1.0);
  ASSERT_TRUE(m.converged);
  EXPECT_LT(g2_zero_analytic(base.at(m.delta, m.gamma)), 1e-6);
}

TEST(WeakDrive, SpdsOperatingPointReportsDivergence) {
  const SpdsRoot r = find_spds_zero(ring(), cplx(0.0, -0.49));
  const auto net = ring(r.z_star.real(), -2.0 * r.z_star.imag());
  const auto s = g2_tau_analytic(net, {0.0, 1.0});
  EXPECT_EQ(s.status, SeriesStatus::diverging_denominator);
}

TEST(ConventionalClosed, StaticFormula) {
  const auto s = g2_conventional_closed(10.0, 0.02491, 1.0, {0.0});
  EXPECT_NEAR(s.values[0], conventional_g2_zero(10.0, 0.02491, 1.0), 1e-15);
  EXPECT_NEAR(conventional_g2_zero(10.0, 0.0, 1.0), 0.0024938, 5e-8);
}

TEST(ConventionalClosed, LargeKerrLimit) {
  const auto tau = linspace(0.0, 10.0, 101);
  const auto s = g2_conventional_closed(1e4, 0.0, 1.0, tau);
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double e = 1.0 - std::exp(-tau[k] / 2.0);
    EXPECT_NEAR(s.values[k], e * e, 1e-3);
  }
}

TEST(ConventionalClosed, GeneralEngineAgreesToFirstOrder) {
  const auto tau = linspace(0.0, 10.0, 101);
  for (double alpha : {1e-3, 1e-2}) {
    const auto closed = g2_conventional_closed(alpha, 0.1, 1.0, tau);
    const auto engine = g2_tau_analytic(preset_conventional(alpha, 0.1, 1.0), tau);
    for (std::size_t k = 0; k < tau.size(); ++k)
      EXPECT_LT(std::abs(engine.values[k] - closed.values[k]) / closed.values[k], 10.0 * alpha);
  }
}

TEST(ConventionalClosed, QuadraticShortTimeLaw) {
  const auto tau = linspace(0.0, 0.3, 61);
  const auto fit = short_time_exponent(g2_conventional_closed(10.0, 0.02491, 1.0, tau), 0.05, 0.3, true);
  EXPECT_NEAR(fit.exponent, 2.0, 0.2);
}

TEST(UpbClosed, StartsAtZeroAndRevivesAtQuarterPeriod) {
  const auto r = g2_upb_closed(0.001227, 1.0, {0.0});
  EXPECT_EQ(r.series.values[0], 0.0);
  const double t = M_PI / (2.0 * r.point.J);
  EXPECT_NEAR(t, 0.0889, 5e-4);
  EXPECT_NEAR(g2_upb_closed_at(r.point.J, r.point.delta, 1.0, {t}).values[0], 1.0, 1e-12);
}

TEST(UpbClosed, EnvelopeBoundsCurve) {
  const auto tau = linspace(0.0, 5.0, 2001);
  const auto r = g2_upb_closed(0.001227, 1.0, tau);
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double lo = 1.0 - std::exp(-tau[k] / 2.0);
    EXPECT_GE(r.series.values[k], lo * lo - 1e-14);
  }
}

TEST(UpbClosed, WarnsOutsideSmallKerr) {
  EXPECT_TRUE(g2_upb_closed(0.5, 1.0, {0.0}).series.metadata.count("warning"));
}

TEST(UpbClosed, GeneralEngineWithinDroppedCorrections) {
  const auto tau = linspace(0.0, 10.0, 4001);
  const auto r = g2_upb_closed(0.001227, 1.0, tau);
  const auto upb = preset_upb_two_cavity(0.001227, 1.0);
  const auto engine = g2_tau_analytic(upb.network, tau);
  EXPECT_LT(compare_series(engine, r.series).sup_norm, 0.05);
}

TEST(UpbEngine, LinearAmplitudeTermCancelsAtExactZero) {
  // The collapsed amplitude starts at zero with zero slope, so doubling a
  // short delay multiplies g2 by 2^4 rather than 2^2.
  const auto upb = preset_upb_two_cavity(0.001227, 1.0);
  const auto w = oracle::weak_state(upb.network, {3, 3}, true);
  const double ratio = oracle::g2_tau(w, upb.network, 0, 0, 0.004) / oracle::g2_tau(w, upb.network, 0, 0, 0.002);
  EXPECT_NEAR(ratio, 16.0, 0.5);
  const auto tau = linspace(0.0, 0.02, 81);
  EXPECT_NEAR(short_time_exponent(g2_tau_analytic(upb.network, tau), 0.002, 0.02, true).exponent, 4.0, 0.2);
}

TEST(LlpbClosed, ZeroAtTauZero) {
  EXPECT_LT(g2_llpb_closed(FourCavityParams{}, {0.0}).values[0], 1e-6);
}

TEST(LlpbClosed, LeadingTermIsLinearInAmplitude) {
  // |c1 tau|^2 with |c1|^2 = 19 alpha J sqrt(k) / 64 survives at the
  // asymptotic zero and dominates only for tau below about 1e-3.
  const FourCavityParams p;
  const double c1 = 19.0 / 64.0 * p.alpha * p.J * std::sqrt(p.k);
  const double t = 1e-5;
  EXPECT_NEAR(g2_llpb_closed(p, {0.0, t}).values[1] / (c1 * t * t), 1.0, 1e-3);
}

TEST(LlpbEngine, QuarticShortTimeLawAtRefinedZero) {
  const auto net = ring();
  const cplx z = fss_zeros(net).zeros[0].z;
  const auto tau = linspace(0.0, 0.3, 61);
  const auto s = g2_tau_analytic(ring(z.real(), -2.0 * z.imag()), tau);
  EXPECT_LT(s.values[0], 1e-20);
  const auto fit = short_time_exponent(s, 0.05, 0.3, true);
  EXPECT_NEAR(fit.exponent, 4.0, 0.2);
  EXPECT_GT(fit.prefactor, 1.0 / 128.0);
  EXPECT_LT(fit.prefactor, 1.0 / 32.0);
}

TEST(LlpbClosed, WarnsWhenRingCouplingsComparable) {
  FourCavityParams p;
  p.J_prime = p.J;
  EXPECT_TRUE(g2_llpb_closed(p, {0.0}).metadata.count("warning"));
}

TEST(ShortTimeFit, RejectsNarrowWindow) {
  const auto s = g2_conventional_closed(10.0, 0.0, 1.0, linspace(0.0, 1.0, 11));
  EXPECT_THROW(short_time_exponent(s, 0.05, 0.3), InvalidArgument);
}

TEST(ShortTimeFit, RecoversExactPowerLaw) {
  CorrelationSeries s;
  s.tau = linspace(0.01, 1.0, 100);
  for (double t : s.tau) s.values.push_back(3.0 * std::pow(t, 4.0));
  const auto fit = short_time_exponent(s, 0.05, 0.5);
  EXPECT_NEAR(fit.exponent, 4.0, 1e-12);
  EXPECT_NEAR(fit.prefactor, 3.0, 1e-10);
}

TEST(Window, SymmetricWidthFromFirstCrossing) {
  CorrelationSeries s;
  s.tau = {0.0, 1.0, 2.0, 3.0};
  s.values = {0.0, 0.25, 0.75, 1.0};
  EXPECT_NEAR(*first_crossing(s), 1.5, 1e-15);
  EXPECT_NEAR(*antibunching_window(s), 3.0, 1e-15);
  s.values[0] = 0.6;
  EXPECT_FALSE(antibunching_window(s).has_value());
}
