#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "errors.hpp"
#include "hilbert.hpp"
#include "network.hpp"
#include "ode.hpp"
#include "series.hpp"

namespace llpb {

/// Lindblad generator with Hermitian Hamiltonian H and jump operators L_k:
///   d rho/dt = -i[H, rho] + sum_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2).
/// With L_k = sqrt(gamma_k) a_k this is the cavity loss dissipator.
class LindbladProblem {
 public:
  LindbladProblem(FockBasis basis, OperatorMatrix hamiltonian, std::vector<OperatorMatrix> jumps)
      : basis_(std::move(basis)), h_(std::move(hamiltonian)), jumps_(std::move(jumps)) {
    const auto d = basis_.dimension();
    if (h_.dimension() != d) throw InvalidArgument("Hamiltonian dimension does not match the basis");
    SpMat decay(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (const auto& l : jumps_) {
      if (l.dimension() != d) throw InvalidArgument("jump operator dimension does not match the basis");
      jumps_adj_.push_back(l.adjoint());
      decay += SpMat(l.sparse().adjoint() * l.sparse());
    }
    h_eff_ = OperatorMatrix(SpMat(h_.sparse() - cplx(0.0, 0.5) * decay));
    h_eff_adj_ = h_eff_.adjoint();
  }

  /// Hermitian Hamiltonian including drive; one jump sqrt(gamma_i) a_i per lossy site.
  static LindbladProblem from_network(const CavityNetwork& net, const FockConfig& fock) {
    FockBasis basis(fock);
    OperatorMatrix h = assemble_hamiltonian(net, basis, true, Frame::hermitian);
    std::vector<OperatorMatrix> jumps;
    for (int i = 0; i < net.n_sites(); ++i)
      if (net.loss(i) > 0.0) jumps.push_back(cplx(std::sqrt(net.loss(i)), 0.0) * annihilation(i, basis));
    return LindbladProblem(std::move(basis), std::move(h), std::move(jumps));
  }

  const FockBasis& basis() const { return basis_; }
  std::size_t dimension() const { return basis_.dimension(); }
  const OperatorMatrix& hamiltonian() const { return h_; }
  const std::vector<OperatorMatrix>& jumps() const { return jumps_; }
  const std::vector<OperatorMatrix>& jumps_adjoint() const { return jumps_adj_; }
  /// H - (i/2) sum L^+ L
  const OperatorMatrix& effective_hamiltonian() const { return h_eff_; }

  void rhs(const CMat& rho, CMat& out) const {
    out.noalias() = cplx(0.0, -1.0) * h_eff_.apply(rho);
    out.noalias() += cplx(0.0, 1.0) * h_eff_adj_.apply_right(rho);
    for (std::size_t k = 0; k < jumps_.size(); ++k) out.noalias() += jumps_[k].apply(jumps_adj_[k].apply_right(rho));
  }

  /// Vectorized generator (column-major vec) of size d^2 x d^2.
  SpMat liouvillian() const {
    const auto d = static_cast<Eigen::Index>(dimension());
    SpMat id(d, d);
    id.setIdentity();
    const SpMat heff = h_eff_.sparse();
    SpMat out = SpMat(Eigen::kroneckerProduct(id, heff)) * cplx(0.0, -1.0);
    out += SpMat(Eigen::kroneckerProduct(SpMat(heff.conjugate()), id)) * cplx(0.0, 1.0);
    for (const auto& l : jumps_) out += SpMat(Eigen::kroneckerProduct(SpMat(l.sparse().conjugate()), l.sparse()));
    return out;
  }

 private:
  FockBasis basis_;
  OperatorMatrix h_;
  std::vector<OperatorMatrix> jumps_;
  std::vector<OperatorMatrix> jumps_adj_;
  OperatorMatrix h_eff_, h_eff_adj_;
};

inline DensityMatrix lindblad_rhs(const LindbladProblem& p, const DensityMatrix& rho) {
  if (rho.dimension() != p.dimension()) throw InvalidArgument("density matrix shape does not match problem");
  CMat out;
  p.rhs(rho.entries(), out);
  return DensityMatrix(std::move(out));
}

/// Evolves rho under the generator and returns it at each requested time
/// (ascending, starting at or after 0).
inline std::vector<CMat> evolve_density(const LindbladProblem& p, const CMat& rho0,
                                        const std::vector<double>& times, OdeTolerances tol = {}) {
  Dop853<CMat> ode([&p](double, const CMat& y, CMat& dy) { p.rhs(y, dy); }, tol);
  ode.reset(0.0, rho0);
  std::vector<CMat> out;
  out.reserve(times.size());
  for (double t : times) {
    ode.advance_to(t);
    out.push_back(ode.state());
  }
  return out;
}

enum class SteadyMethod { integrate, linear_solve };

struct SteadyStateOptions {
  SteadyMethod method = SteadyMethod::integrate;
  OdeTolerances tol{};
  double residual = 1e-10;   // ||d rho/dt|| < residual * ||rho||
  double min_time = -1.0;    // default 40 / min gamma
  double max_time = -1.0;    // default 1e4 / min gamma
  std::size_t max_linear_dimension = 4096;  // of the vectorized generator
  int refinement_steps = 2;
};

namespace detail {

inline CMat hermitize_normalize(CMat rho) {
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const cplx tr = rho.trace();
  if (std::abs(tr) == 0.0) throw NumericalError("steady state has zero trace");
  return rho / tr.real();
}

}  // namespace detail

/// Steady state of the generator. The integrate mode evolves from `rho0`
/// (vacuum when empty) in chunks of the slowest loss time until the
/// residual criterion holds after at least `min_time`; the linear mode
/// solves L vec(rho) = 0 with one row replaced by the trace condition.
inline DensityMatrix steady_state(const LindbladProblem& p, SteadyStateOptions opt = {},
                                  const CMat& rho0 = CMat()) {
  const auto d = static_cast<Eigen::Index>(p.dimension());
  if (p.jumps().empty()) throw InvalidArgument("steady state requires loss on at least one site");

  if (opt.method == SteadyMethod::linear_solve) {
    if (std::size_t(d) * std::size_t(d) > opt.max_linear_dimension)
      throw InvalidArgument("vectorized generator exceeds linear-solve limit of " +
                            std::to_string(opt.max_linear_dimension));
    SpMat L = p.liouvillian();
    // Row 0 (the vacuum population equation) becomes tr(rho) = 1.
    SpMat A(L.rows(), L.cols());
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int r = 1; r < L.outerSize(); ++r)
      for (SpMat::InnerIterator it(L, r); it; ++it) trip.emplace_back(r, int(it.col()), it.value());
    for (Eigen::Index i = 0; i < d; ++i) trip.emplace_back(0, int(i + i * d), 1.0);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<cplx> Ac(A);
    Ac.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(Ac);
    if (lu.info() != Eigen::Success) throw NumericalError("steady-state generator is singular: degenerate null space");
    CVec b = CVec::Zero(d * d);
    b(0) = 1.0;
    CVec x = lu.solve(b);
    for (int k = 0; k < opt.refinement_steps; ++k) x += lu.solve(CVec(b - Ac * x));
    if (!x.allFinite()) throw NumericalError("steady-state solve produced non-finite values");
    return DensityMatrix(detail::hermitize_normalize(Eigen::Map<CMat>(x.data(), d, d)));
  }

  double gmin = std::numeric_limits<double>::infinity();
  for (const auto& l : p.jumps()) {
    // L = sqrt(gamma) a has <1|L^+ L|1> = gamma on the site it acts on.
    const SpMat ll = l.sparse().adjoint() * l.sparse();
    double g = 0.0;
    for (int k = 0; k < ll.outerSize(); ++k)
      for (SpMat::InnerIterator it(ll, k); it; ++it)
        if (it.row() == it.col() && it.value().real() > 0.0) g = g == 0.0 ? it.value().real() : std::min(g, it.value().real());
    if (g > 0.0) gmin = std::min(gmin, g);
  }
  const double t_chunk = 1.0 / gmin;
  const double t_min = opt.min_time >= 0 ? opt.min_time : 40.0 / gmin;
  const double t_max = opt.max_time >= 0 ? opt.max_time : 1e4 / gmin;

  CMat start = rho0;
  if (start.size() == 0) {
    start = CMat::Zero(d, d);
    start(0, 0) = 1.0;
  }
  Dop853<CMat> ode([&p](double, const CMat& y, CMat& dy) { p.rhs(y, dy); }, opt.tol);
  ode.reset(0.0, start);
  CMat drho;
  while (true) {
    ode.advance_to(ode.time() + t_chunk);
    p.rhs(ode.state(), drho);
    if (ode.time() >= t_min && drho.norm() < opt.residual * ode.state().norm()) break;
    if (ode.time() > t_max) throw NumericalError("steady-state integration did not converge");
  }
  return DensityMatrix(detail::hermitize_normalize(ode.state()));
}

/// <a_j^+ a_i^+ a_i a_j> / (n_i n_j) evaluated directly on rho.
inline double static_g2(const LindbladProblem& p, const DensityMatrix& rho, int i, int j) {
  const auto& basis = p.basis();
  const OperatorMatrix aj = annihilation(j, basis);
  const OperatorMatrix ni = number(i, basis), nj = number(j, basis);
  const double n_i = rho.expectation(ni), n_j = rho.expectation(nj);
  if (!(n_i > 0.0) || !(n_j > 0.0)) throw NumericalError("zero occupation: g2 undefined");
  const CMat collapsed = aj.apply(CMat(aj.adjoint().apply_right(rho.entries())));
  return ni.apply(collapsed).trace().real() / (n_i * n_j);
}

/// Quantum-regression g2_ij(tau) = tr[n_i rho_j(tau)] / (n_i n_j) with the
/// unnormalized rho_j(0) = a_j rho a_j^+.
inline CorrelationSeries regression_g2(const LindbladProblem& p, const DensityMatrix& rho, int j, int i,
                                       const std::vector<double>& tau, OdeTolerances tol = {}) {
  const auto& basis = p.basis();
  const OperatorMatrix aj = annihilation(j, basis);
  const OperatorMatrix ni = number(i, basis), nj = number(j, basis);
  const double n_i = rho.expectation(ni), n_j = rho.expectation(nj);
  if (!(n_i > 0.0) || !(n_j > 0.0)) throw NumericalError("zero occupation: g2 undefined");
  const CMat rho_j = aj.apply(CMat(aj.adjoint().apply_right(rho.entries())));
  const auto states = evolve_density(p, rho_j, tau, tol);
  CorrelationSeries out;
  out.tau = tau;
  out.source = SeriesSource::regression;
  for (const auto& r : states) out.values.push_back(ni.apply(r).trace().real() / (n_i * n_j));
  out.validate();
  return out;
}

}  // namespace llpb
