#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hilbert.hpp"
#include "lindblad.hpp"
#include "network.hpp"
#include "ode.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "series.hpp"

namespace llpb {

inline constexpr double kTopFockWarning = 1e-6;

struct TrajectoryConfig {
  double beta = 0.1;
  int n_traj = 10;
  double t_relax = 100.0;
  double t_record = 1000.0;
  double sample_interval = -1.0;  // default 1 / max gamma
  std::uint64_t seed = 0;
  OdeTolerances tol{};
  FockConfig fock{};
  int threads = 0;

  void validate() const {
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be nonnegative");
    if (n_traj < 1) throw InvalidArgument("n_traj must be at least 1");
    if (!(t_relax > 0.0) || !(t_record > 0.0)) throw InvalidArgument("t_relax and t_record must be positive");
    if (sample_interval == 0.0 || sample_interval < -1.0) throw InvalidArgument("sample_interval must be positive");
    fock.validate();
  }
};

/// H' = H + (beta/2i) sum (L - L^+), L' = L + beta I. The generator is
/// unchanged; only the split into jumps and no-jump evolution moves.
inline LindbladProblem unravel_transform(const LindbladProblem& p, double beta) {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be nonnegative");
  if (beta == 0.0) return p;
  const OperatorMatrix id = identity(p.basis());
  OperatorMatrix h = p.hamiltonian();
  std::vector<OperatorMatrix> jumps;
  for (std::size_t k = 0; k < p.jumps().size(); ++k) {
    h = h + cplx(0.0, -beta / 2.0) * (p.jumps()[k] - p.jumps_adjoint()[k]);
    jumps.push_back(p.jumps()[k] + cplx(beta, 0.0) * id);
  }
  return LindbladProblem(p.basis(), OperatorMatrix(h.sparse(), h.site_tags(), true), std::move(jumps));
}

struct JumpRecord {
  double time = 0.0;
  int channel = -1;
  double threshold = 0.0;  // the drawn u
  double norm_sq = 0.0;    // ||psi||^2 at the located jump time
};

/// Norm-decay quantum-jump propagator for one stochastic pure state.
class JumpPropagator {
 public:
  JumpPropagator(const LindbladProblem& p, OdeTolerances tol, CounterRng rng)
      : p_(&p),
        rng_(rng),
        ode_([this](double, const CVec& y, CVec& dy) {
          dy.noalias() = cplx(0.0, -1.0) * p_->effective_hamiltonian().apply(y);
        }, tol) {}
  JumpPropagator(const JumpPropagator&) = delete;
  JumpPropagator& operator=(const JumpPropagator&) = delete;

  void reset(double t, CVec psi) {
    psi /= psi.norm();
    ode_.reset(t, std::move(psi));
    threshold_ = rng_.uniform();
  }

  double time() const { return ode_.time(); }
  CVec normalized() const { return ode_.state() / ode_.state().norm(); }
  const std::vector<JumpRecord>& jumps() const { return jumps_; }
  const Dop853<CVec>& integrator() const { return ode_; }

  void advance_to(double t_end) {
    while (ode_.time() < t_end) {
      const double u = threshold_;
      const bool jumped = ode_.advance_until(t_end, [u](const CVec& y) { return y.squaredNorm() - u; });
      if (!jumped) return;
      jump(u);
    }
  }

 private:
  void jump(double u) {
    const CVec& y = ode_.state();
    const auto& ls = p_->jumps();
    std::vector<CVec> out(ls.size());
    double total = 0.0;
    std::vector<double> weight(ls.size());
    for (std::size_t k = 0; k < ls.size(); ++k) {
      out[k] = ls[k].apply(y);
      weight[k] = out[k].squaredNorm();
      total += weight[k];
    }
    if (!(total > 0.0)) throw NumericalError("jump requested with zero total jump rate");
    const double r = rng_.uniform() * total;
    std::size_t k = 0;
    for (double acc = weight[0]; acc < r && k + 1 < ls.size(); acc += weight[++k]) {}
    jumps_.push_back({ode_.time(), int(k), u, y.squaredNorm()});
    reset(ode_.time(), std::move(out[k]));
  }

  const LindbladProblem* p_;
  CounterRng rng_;
  Dop853<CVec> ode_;
  double threshold_ = 1.0;
  std::vector<JumpRecord> jumps_;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  int index = 0;
  std::vector<JumpRecord> jumps;
  RVec mean_occupations;             // over collapse samples
  double max_top_fock = 0.0;
  std::size_t samples = 0;
};

/// Collapse sample times t_relax + m * dt over [t_relax, t_relax + t_record].
inline std::vector<double> sample_times(const TrajectoryConfig& cfg, double gamma_max) {
  const double dt = cfg.sample_interval > 0 ? cfg.sample_interval : 1.0 / gamma_max;
  std::vector<double> out;
  const auto m = static_cast<std::size_t>(std::floor(cfg.t_record / dt * (1 + 1e-12)));
  for (std::size_t k = 0; k <= m; ++k) out.push_back(cfg.t_relax + double(k) * dt);
  return out;
}

/// Runs one trajectory from vacuum and calls on_sample(sample index, psi_hat)
/// at every collapse time. Deterministic in (cfg.seed, index).
template <class OnSample>
TrajectoryRecord run_trajectory(const LindbladProblem& shifted, const TrajectoryConfig& cfg, int index,
                                const std::vector<double>& times, OnSample&& on_sample) {
  TrajectoryRecord rec;
  rec.seed = cfg.seed ^ std::uint64_t(index);
  rec.index = index;
  const auto& basis = shifted.basis();
  const int n = basis.sites();
  std::vector<OperatorMatrix> nums;
  for (int i = 0; i < n; ++i) nums.push_back(number(i, basis));
  rec.mean_occupations = RVec::Zero(n);

  JumpPropagator prop(shifted, cfg.tol, CounterRng(rec.seed));
  prop.reset(0.0, QuantumState::vacuum(basis).amplitudes());
  for (std::size_t s = 0; s < times.size(); ++s) {
    prop.advance_to(times[s]);
    const CVec psi = prop.normalized();
    rec.max_top_fock = std::max(rec.max_top_fock, top_fock_population(psi, basis));
    for (int i = 0; i < n; ++i) rec.mean_occupations(i) += psi.dot(nums[i].apply(psi)).real();
    on_sample(s, psi);
  }
  rec.samples = times.size();
  if (!times.empty()) rec.mean_occupations /= double(times.size());
  rec.jumps = prop.jumps();
  return rec;
}

inline TrajectoryRecord run_trajectory(const LindbladProblem& shifted, const TrajectoryConfig& cfg, int index,
                                       const std::vector<double>& times) {
  return run_trajectory(shifted, cfg, index, times, [](std::size_t, const CVec&) {});
}

struct EnsembleResult {
  CorrelationSeries series;
  RVec occupations;          // ensemble mean per site
  RVec occupation_errors;    // standard error across trajectories
  std::vector<TrajectoryRecord> trajectories;
  double max_top_fock = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1) / double(v.size()));
}

}  // namespace detail

/// Trajectory estimate of g2_ij(tau). At each collapse time the normalized
/// state is hit with a_j; the collapsed state is evolved stochastically over
/// the tau grid and its <n_i> is accumulated with weight w = ||a_j psi||^2.
///   g2(tau) = mean_r A_r(tau) / (mean_r N_ir * mean_r W_r)
/// with per-trajectory sample means A_r, N_ir, W_r. Standard errors come from
/// the spread of A_r / (N_ir W_r) across trajectories.
inline EnsembleResult ensemble_g2(const CavityNetwork& net, const TrajectoryConfig& cfg,
                                  const std::vector<double>& tau, int i = -1, int j = -1) {
  cfg.validate();
  if (i < 0) i = net.signal_site;
  if (j < 0) j = net.signal_site;
  if (tau.empty() || tau.front() < 0.0) throw InvalidArgument("tau grid must be nonempty and start at or after 0");
  for (std::size_t k = 1; k < tau.size(); ++k)
    if (!(tau[k] > tau[k - 1])) throw InvalidArgument("tau grid must be strictly ascending");

  const LindbladProblem base = LindbladProblem::from_network(net, cfg.fock);
  const LindbladProblem shifted = unravel_transform(base, cfg.beta);
  const auto& basis = base.basis();
  const OperatorMatrix aj = annihilation(j, basis), ni = number(i, basis);
  const auto times = sample_times(cfg, net.loss.maxCoeff());
  const std::size_t nt = tau.size();

  struct Partial {
    TrajectoryRecord record;
    std::vector<double> A;
    double N = 0.0, W = 0.0;
  };
  std::vector<Partial> parts(std::size_t(cfg.n_traj));

  parallel_for(parts.size(), resolve_threads(cfg.threads), [&](std::size_t r) {
    Partial& part = parts[r];
    part.A.assign(nt, 0.0);
    const std::uint64_t key = cfg.seed ^ std::uint64_t(r);
    const CounterRng collapse_streams(CounterRng::mix(key) ^ 0x636f6c6c61707365ULL);
    part.record = run_trajectory(shifted, cfg, int(r), times, [&](std::size_t s, const CVec& psi) {
      const CVec phi = aj.apply(psi);
      const double w = phi.squaredNorm();
      part.W += w;
      part.N += psi.dot(ni.apply(psi)).real();
      if (!(w > 0.0)) return;
      JumpPropagator sub(shifted, cfg.tol, collapse_streams.substream(s));
      sub.reset(0.0, phi);
      for (std::size_t k = 0; k < nt; ++k) {
        sub.advance_to(tau[k]);
        const CVec x = sub.normalized();
        part.A[k] += w * x.dot(ni.apply(x)).real();
      }
    });
    const double m = double(times.size());
    for (double& a : part.A) a /= m;
    part.N /= m;
    part.W /= m;
  });

  EnsembleResult out;
  const int n = basis.sites();
  std::vector<std::vector<double>> occ(static_cast<std::size_t>(n));
  std::vector<double> Ns, Ws;
  for (const auto& part : parts) {
    for (int s = 0; s < n; ++s) occ[std::size_t(s)].push_back(part.record.mean_occupations(s));
    Ns.push_back(part.N);
    Ws.push_back(part.W);
    out.max_top_fock = std::max(out.max_top_fock, part.record.max_top_fock);
  }
  out.occupations.resize(n);
  out.occupation_errors.resize(n);
  for (int s = 0; s < n; ++s) {
    out.occupations(s) = detail::mean(occ[std::size_t(s)]);
    out.occupation_errors(s) = detail::standard_error(occ[std::size_t(s)]);
  }
  const double N = detail::mean(Ns), W = detail::mean(Ws);
  // Occupations are squared amplitudes, so the smallest one the integrator
  // resolves is set by its absolute amplitude tolerance, not by epsilon.
  const double floor = 10.0 * cfg.tol.atol * cfg.tol.atol;
  if (!(N > floor) || !(W > floor))
    throw NumericalError("mean occupation below the resolvable floor: correlation undefined at this drive");

  auto& series = out.series;
  series.tau = tau;
  series.source = SeriesSource::wfmc;
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> A, ratio;
    for (const auto& part : parts) {
      A.push_back(part.A[k]);
      ratio.push_back(part.A[k] / (part.N * part.W));
    }
    series.values.push_back(detail::mean(A) / (N * W));
    if (parts.size() >= 2) series.std_errors.push_back(detail::standard_error(ratio));
  }
  series.metadata["engine"] = "wfmc";
  series.metadata["beta"] = std::to_string(cfg.beta);
  series.metadata["n_traj"] = std::to_string(cfg.n_traj);
  series.metadata["sample_interval"] =
      std::to_string(cfg.sample_interval > 0 ? cfg.sample_interval : 1.0 / net.loss.maxCoeff());
  series.metadata["samples_per_trajectory"] = std::to_string(times.size());
  if (parts.size() < 2) out.warnings.push_back("n_traj=1: standard errors unavailable");
  if (out.max_top_fock > kTopFockWarning)
    out.warnings.push_back("top Fock population " + std::to_string(out.max_top_fock) + " exceeds 1e-6");
  for (auto& p : parts) out.trajectories.push_back(std::move(p.record));
  series.validate();
  return out;
}

struct OccupationRow {
  double drive = 0.0;
  double n_signal = 0.0;
  double g2_0 = 0.0;
  double std_error = 0.0;
};

/// g2_ss(0) and signal occupation per drive amplitude.
inline std::vector<OccupationRow> occupation_sweep(const CavityNetwork& net, const std::vector<double>& drives,
                                                   const TrajectoryConfig& cfg) {
  std::vector<OccupationRow> rows;
  for (double F : drives) {
    CavityNetwork d = net;
    d.drive_amplitude = F;
    const EnsembleResult r = ensemble_g2(d, cfg, {0.0});
    const double se = r.series.has_errors() ? r.series.std_errors[0] : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({F, r.occupations(net.signal_site), r.series.values[0], se});
  }
  return rows;
}

}  // namespace llpb
