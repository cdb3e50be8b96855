#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "network.hpp"
#include "types.hpp"

namespace llpb {

/// Per-site local dimensions of the truncated Fock space.
///
/// cutoffs[j] is the number of levels kept on site j, so occupations run
/// over 0..cutoffs[j]-1.
struct FockConfig {
  std::vector<int> cutoffs;
  std::size_t max_dimension = std::size_t{1} << 16;

  std::size_t dimension() const {
    std::size_t d = 1;
    for (int c : cutoffs) d *= static_cast<std::size_t>(c);
    return d;
  }

  void validate() const {
    if (cutoffs.empty()) throw InvalidArgument("Fock config has no sites");
    std::size_t d = 1;
    for (std::size_t j = 0; j < cutoffs.size(); ++j) {
      if (cutoffs[j] < 2)
        throw InvalidArgument("Fock cutoff on site " + std::to_string(j + 1) + " is below 2");
      d *= static_cast<std::size_t>(cutoffs[j]);
      if (d > max_dimension)
        throw InvalidArgument("Fock space dimension exceeds budget of " +
                              std::to_string(max_dimension));
    }
  }
};

/// Product basis in site-major order: the last site varies fastest.
///
/// index(n_0, ..., n_{N-1}) = sum_j n_j * stride_j with
/// stride_{N-1} = 1 and stride_j = stride_{j+1} * cutoff_{j+1}.
class FockBasis {
 public:
  explicit FockBasis(FockConfig config) : config_(std::move(config)) {
    config_.validate();
    const int n = sites();
    strides_.assign(n, 1);
    for (int j = n - 2; j >= 0; --j) strides_[j] = strides_[j + 1] * config_.cutoffs[j + 1];
    dim_ = config_.dimension();
  }

  const FockConfig& config() const { return config_; }
  int sites() const { return static_cast<int>(config_.cutoffs.size()); }
  std::size_t dimension() const { return dim_; }
  int cutoff(int site) const { return config_.cutoffs[site]; }
  std::size_t stride(int site) const { return strides_[site]; }

  std::size_t index(const std::vector<int>& occ) const {
    if (static_cast<int>(occ.size()) != sites())
      throw InvalidArgument("occupation tuple has wrong length");
    std::size_t idx = 0;
    for (int j = 0; j < sites(); ++j) {
      if (occ[j] < 0 || occ[j] >= config_.cutoffs[j])
        throw InvalidArgument("occupation outside truncated space");
      idx += static_cast<std::size_t>(occ[j]) * strides_[j];
    }
    return idx;
  }

  std::vector<int> occupations(std::size_t idx) const {
    if (idx >= dim_) throw InvalidArgument("basis index out of range");
    std::vector<int> occ(sites());
    for (int j = 0; j < sites(); ++j) {
      occ[j] = static_cast<int>(idx / strides_[j]);
      idx %= strides_[j];
    }
    return occ;
  }

  int occupation(std::size_t idx, int site) const {
    return static_cast<int>((idx / strides_[site]) % config_.cutoffs[site]);
  }

 private:
  FockConfig config_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 0;
};

/// Operator on the product space. Always holds the sparse form; spaces of
/// dimension <= kDenseThreshold also keep a dense copy used for products.
/// Ladder operators fill O(sites/d) of the matrix, so above that size the
/// sparse product wins.
class OperatorMatrix {
 public:
  static constexpr std::size_t kDenseThreshold = 64;

  OperatorMatrix() = default;

  explicit OperatorMatrix(SpMat m, std::vector<int> site_tags = {}, bool hermitian = false)
      : sparse_(std::move(m)), site_tags_(std::move(site_tags)) {
    if (sparse_.rows() != sparse_.cols()) throw InvalidArgument("operator is not square");
    sparse_.makeCompressed();
    if (dimension() <= kDenseThreshold) dense_ = CMat(sparse_);
    if (hermitian) {
      if (!is_hermitian(1e-12)) throw InvalidArgument("operator flagged Hermitian is not");
      hermitian_ = true;
    }
  }

  std::size_t dimension() const { return static_cast<std::size_t>(sparse_.rows()); }
  bool is_dense() const { return dense_.has_value(); }
  bool hermitian_flag() const { return hermitian_; }
  const std::vector<int>& site_tags() const { return site_tags_; }
  const SpMat& sparse() const { return sparse_; }
  CMat to_dense() const { return dense_ ? *dense_ : CMat(sparse_); }

  bool is_hermitian(double tol) const {
    const SpMat diff = sparse_ - SpMat(sparse_.adjoint());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (SpMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst <= tol;
  }

  OperatorMatrix adjoint() const {
    return OperatorMatrix(SpMat(sparse_.adjoint()), site_tags_);
  }

  /// this * x for a vector or a matrix with dimension() rows.
  template <class Derived>
  auto apply(const Eigen::MatrixBase<Derived>& x) const {
    using R = Eigen::Matrix<cplx, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
    R out;
    if (dense_) out.noalias() = *dense_ * x;
    else out.noalias() = sparse_ * x;
    return out;
  }

  /// x * this for a matrix with dimension() columns.
  CMat apply_right(const CMat& x) const {
    CMat out;
    if (dense_) out.noalias() = x * *dense_;
    else out.noalias() = x * sparse_;
    return out;
  }

  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
    return OperatorMatrix(SpMat(a.sparse_ + b.sparse_), merge_tags(a.site_tags_, b.site_tags_));
  }
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
    return OperatorMatrix(SpMat(a.sparse_ - b.sparse_), merge_tags(a.site_tags_, b.site_tags_));
  }
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
    return OperatorMatrix(SpMat(a.sparse_ * b.sparse_), merge_tags(a.site_tags_, b.site_tags_));
  }
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a) {
    return OperatorMatrix(SpMat(s * a.sparse_), a.site_tags_);
  }

 private:
  static std::vector<int> merge_tags(std::vector<int> a, const std::vector<int>& b) {
    for (int t : b)
      if (std::find(a.begin(), a.end(), t) == a.end()) a.push_back(t);
    std::sort(a.begin(), a.end());
    return a;
  }

  SpMat sparse_;
  std::optional<CMat> dense_;
  std::vector<int> site_tags_;
  bool hermitian_ = false;
};

/// Pure state over the product basis. The cached norm is refreshed by every
/// mutating member.
class QuantumState {
 public:
  QuantumState() = default;
  explicit QuantumState(CVec amplitudes) : amp_(std::move(amplitudes)), norm_(amp_.norm()) {}

  static QuantumState vacuum(const FockBasis& basis) {
    CVec v = CVec::Zero(static_cast<Eigen::Index>(basis.dimension()));
    v(0) = 1.0;
    return QuantumState(std::move(v));
  }

  const CVec& amplitudes() const { return amp_; }
  double norm() const { return norm_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amp_.size()); }

  void set(CVec amplitudes) {
    amp_ = std::move(amplitudes);
    norm_ = amp_.norm();
  }
  void normalize() {
    if (norm_ == 0.0) throw NumericalError("cannot normalize a zero state");
    amp_ /= norm_;
    norm_ = amp_.norm();
  }

  double expectation(const OperatorMatrix& op) const {
    return (amp_.dot(op.apply(amp_))).real() / (norm_ * norm_);
  }

 private:
  CVec amp_;
  double norm_ = 0.0;
};

/// Density matrix over the product basis.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(CMat entries) : rho_(std::move(entries)) {
    if (rho_.rows() != rho_.cols()) throw InvalidArgument("density matrix is not square");
  }

  static DensityMatrix pure(const QuantumState& psi) {
    const CVec v = psi.amplitudes() / psi.norm();
    return DensityMatrix(v * v.adjoint());
  }

  const CMat& entries() const { return rho_; }
  std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }
  cplx trace() const { return rho_.trace(); }

  double expectation(const OperatorMatrix& op) const {
    return op.apply(rho_).trace().real();
  }

  double hermiticity_defect() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

  double min_eigenvalue() const {
    const CMat h = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  double trace_distance(const DensityMatrix& other) const {
    const CMat d = rho_ - other.rho_;
    const CMat h = 0.5 * (d + d.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
  }

 private:
  CMat rho_;
};

/// Annihilation operator of one site embedded in the product space.
inline OperatorMatrix annihilation(int site, const FockBasis& basis) {
  if (site < 0 || site >= basis.sites()) throw InvalidArgument("site index out of range");
  const auto dim = basis.dimension();
  const auto stride = basis.stride(site);
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(dim);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const int n = basis.occupation(idx, site);
    if (n > 0)
      trip.emplace_back(static_cast<int>(idx - stride), static_cast<int>(idx), std::sqrt(double(n)));
  }
  SpMat m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(trip.begin(), trip.end());
  return OperatorMatrix(std::move(m), {site});
}

inline OperatorMatrix creation(int site, const FockBasis& basis) {
  return annihilation(site, basis).adjoint();
}

inline OperatorMatrix number(int site, const FockBasis& basis) {
  const auto dim = basis.dimension();
  SpMat m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const int n = basis.occupation(idx, site);
    if (n > 0) trip.emplace_back(int(idx), int(idx), double(n));
  }
  m.setFromTriplets(trip.begin(), trip.end());
  return OperatorMatrix(std::move(m), {site}, true);
}

inline OperatorMatrix identity(const FockBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  SpMat m(dim, dim);
  m.setIdentity();
  return OperatorMatrix(std::move(m));
}

/// Which diagonal energy each site carries.
enum class Frame {
  effective,  // z_i = Delta_i - i*gamma_i/2 (non-Hermitian)
  hermitian   // Delta_i only; losses belong to the dissipator
};

/// H = sum J_ij a_i^+ a_j + sum z_i n_i + alpha sum a_i^+ a_i^+ a_i a_i
///     + sum 2 alpha_x n_i n_j [+ F a_d^+ + F^* a_d]
///
/// Assembled directly from occupations, so every term is diagonal except
/// hopping and drive.
inline OperatorMatrix assemble_hamiltonian(const CavityNetwork& net, const FockBasis& basis,
                                           bool include_drive, Frame frame = Frame::effective) {
  net.validate();
  if (net.n_sites() != basis.sites())
    throw InvalidArgument("network has " + std::to_string(net.n_sites()) +
                          " sites but Fock config has " + std::to_string(basis.sites()));
  const auto dim = basis.dimension();
  const int n = net.n_sites();
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(dim * (1 + 2 * n * n));

  for (std::size_t idx = 0; idx < dim; ++idx) {
    const auto occ = basis.occupations(idx);
    cplx diag = 0.0;
    for (int i = 0; i < n; ++i) {
      const cplx zi = frame == Frame::effective ? net.z(i) : cplx(net.detuning(i), 0.0);
      diag += zi * double(occ[i]) + net.kerr * double(occ[i]) * double(occ[i] - 1);
    }
    for (const auto& c : net.cross_kerr) diag += 2.0 * c.alpha_x * double(occ[c.i]) * double(occ[c.j]);
    if (diag != 0.0) trip.emplace_back(int(idx), int(idx), diag);

    // a_i^+ a_j moves one photon from j to i.
    for (int i = 0; i < n; ++i) {
      if (occ[i] + 1 >= basis.cutoff(i)) continue;
      for (int j = 0; j < n; ++j) {
        const double J = net.couplings(i, j);
        if (i == j || J == 0.0 || occ[j] == 0) continue;
        const std::size_t to = idx + basis.stride(i) - basis.stride(j);
        trip.emplace_back(int(to), int(idx), J * std::sqrt(double(occ[i] + 1) * double(occ[j])));
      }
    }

    if (include_drive) {
      const int d = net.drive_site;
      const cplx F = net.drive_amplitude;
      if (occ[d] + 1 < basis.cutoff(d))
        trip.emplace_back(int(idx + basis.stride(d)), int(idx), F * std::sqrt(double(occ[d] + 1)));
      if (occ[d] > 0)
        trip.emplace_back(int(idx - basis.stride(d)), int(idx), std::conj(F) * std::sqrt(double(occ[d])));
    }
  }

  SpMat m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(trip.begin(), trip.end());
  std::vector<int> tags(n);
  for (int i = 0; i < n; ++i) tags[i] = i;
  return OperatorMatrix(std::move(m), std::move(tags));
}

/// Sum of populations of basis states where some site sits at its top level.
inline double top_fock_population(const CVec& psi, const FockBasis& basis) {
  double acc = 0.0;
  for (std::size_t idx = 0; idx < basis.dimension(); ++idx)
    for (int j = 0; j < basis.sites(); ++j)
      if (basis.occupation(idx, j) == basis.cutoff(j) - 1) {
        acc += std::norm(psi(Eigen::Index(idx)));
        break;
      }
  return acc;
}

}  // namespace llpb
