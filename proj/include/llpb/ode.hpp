#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Core>

#include "errors.hpp"

namespace llpb {

/// Componentwise error control: scale_i = atol_eff + rtol * |y_i|.
///
/// With `atol_relative` the absolute tolerance is multiplied by max|y0| at
/// every reset, so an unnormalized initial state (e.g. a collapsed density
/// matrix with trace ~1e-10) is controlled like a normalized one.
struct OdeTolerances {
  double rtol = 1e-12;
  double atol = 1e-21;
  bool atol_relative = true;
};

namespace dop853 {
// Dormand-Prince 8(5,3) tableau.
inline constexpr int kStages = 12;
inline constexpr std::array<double, 12> C = {
    0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274,
    0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077,
    0.6512820512820513, 0.6, 0.8571428571428571, 1.0};
inline constexpr std::array<std::array<double, 12>, 12> A = {{
    {},
    {0.05260015195876773},
    {0.0197250569845379, 0.0591751709536137},
    {0.02958758547680685, 0.0, 0.08876275643042054},
    {0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792},
    {0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242},
    {0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125},
    {0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328,
     -0.015319437748624402, 0.008273789163814023},
    {0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726,
     27.59209969944671, 20.154067550477894, -43.48988418106996},
    {0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843,
     21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627},
    {-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295,
     -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523,
     -3.0467644718982196},
    {2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625,
     -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063,
     12.360567175794303, 0.6433927460157636},
}};
inline constexpr std::array<double, 12> B = {
    0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003,
    -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034,
    0.04471061572777259};
inline constexpr std::array<double, 13> E3 = {
    -0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003,
    -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034,
    0.02265179219836082, 0.0};
inline constexpr std::array<double, 13> E5 = {
    0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502,
    1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571,
    -0.022355307863886294, 0.0};
inline constexpr double kSafety = 0.9;
inline constexpr double kMinFactor = 0.2;
inline constexpr double kMaxFactor = 10.0;
}  // namespace dop853

/// Adaptive DOP853 integrator over an Eigen state (complex vector or
/// matrix). The step size persists across calls, so a trajectory can be
/// advanced grid point by grid point without restarting the controller.
template <class State>
class Dop853 {
 public:
  using Rhs = std::function<void(double, const State&, State&)>;
  using RealState = Eigen::Matrix<double, State::RowsAtCompileTime, State::ColsAtCompileTime>;

  Dop853(Rhs f, OdeTolerances tol = {}, double max_step = std::numeric_limits<double>::infinity())
      : f_(std::move(f)), tol_(tol), max_step_(max_step) {}

  void reset(double t, State y) {
    t_ = t;
    y_ = std::move(y);
    atol_ = tol_.atol;
    if (tol_.atol_relative) {
      const double m = y_.size() ? y_.cwiseAbs().maxCoeff() : 0.0;
      if (m > 0.0) atol_ *= m;
    }
    f_(t_, y_, k_[0]);
    ++evals_;
    fsal_ = true;
    h_abs_ = initial_step();
  }

  double time() const { return t_; }
  const State& state() const { return y_; }
  State& mutable_state() {
    fsal_ = false;
    return y_;
  }
  /// Call after editing the state in place (e.g. a quantum jump).
  void state_changed() {
    f_(t_, y_, k_[0]);
    ++evals_;
    fsal_ = true;
  }

  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }
  std::size_t rhs_evaluations() const { return evals_; }

  void advance_to(double t_end) {
    while (t_ < t_end) step_towards(t_end);
  }

  /// Advances until g(y) <= 0 or t_end. On a crossing the state is placed at
  /// the first time where g <= 0, located by bisection to `time_rtol`
  /// relative (to max(1,|t|)). Returns true on a crossing.
  template <class G>
  bool advance_until(double t_end, G&& g, double time_rtol = 1e-12) {
    while (t_ < t_end) {
      const double t0 = t_;
      y_prev_ = y_;
      k0_prev_ = k_[0];
      step_towards(t_end);
      if (g(y_) <= 0.0) {
        locate(t0, t_ - t0, g, time_rtol);
        return true;
      }
    }
    return false;
  }

 private:
  void ensure_fsal() {
    if (!fsal_) {
      f_(t_, y_, k_[0]);
      ++evals_;
      fsal_ = true;
    }
  }

  double rms_scaled(const State& x, const RealState& scale) const {
    return std::sqrt((x.cwiseAbs().array() / scale.array()).square().sum() / double(x.size()));
  }

  // Hairer's starting step heuristic.
  double initial_step() {
    RealState scale = (atol_ + tol_.rtol * y_.cwiseAbs().array()).matrix();
    const double d0 = rms_scaled(y_, scale), d1 = rms_scaled(k_[0], scale);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, max_step_);
    State y1 = y_ + h0 * k_[0];
    State f1;
    f_(t_ + h0, y1, f1);
    ++evals_;
    const double d2 = rms_scaled(State(f1 - k_[0]), scale) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                    : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    return std::min({100.0 * h0, h1, max_step_});
  }

  // Stages 1..11 and the 8th-order update for a step of size h from (t_, y_).
  void stages(double h, State& y_new) {
    for (int s = 1; s < dop853::kStages; ++s) {
      acc_ = dop853::A[s][0] * k_[0];
      for (int j = 1; j < s; ++j)
        if (dop853::A[s][j] != 0.0) acc_ += dop853::A[s][j] * k_[j];
      tmp_ = y_ + h * acc_;
      f_(t_ + dop853::C[s] * h, tmp_, k_[s]);
      ++evals_;
    }
    acc_ = dop853::B[0] * k_[0];
    for (int j = 1; j < dop853::kStages; ++j)
      if (dop853::B[j] != 0.0) acc_ += dop853::B[j] * k_[j];
    y_new = y_ + h * acc_;
  }

  double error_norm(double h, const State& y_new) {
    f_(t_ + h, y_new, k_[12]);
    ++evals_;
    const RealState scale =
        (atol_ + tol_.rtol * y_.cwiseAbs().array().max(y_new.cwiseAbs().array())).matrix();
    State e5 = dop853::E5[0] * k_[0], e3 = dop853::E3[0] * k_[0];
    for (int j = 1; j < 13; ++j) {
      if (dop853::E5[j] != 0.0) e5 += dop853::E5[j] * k_[j];
      if (dop853::E3[j] != 0.0) e3 += dop853::E3[j] * k_[j];
    }
    const double n5 = (e5.cwiseAbs().array() / scale.array()).square().sum();
    const double n3 = (e3.cwiseAbs().array() / scale.array()).square().sum();
    if (n5 == 0.0 && n3 == 0.0) return 0.0;
    const double denom = n5 + 0.01 * n3;
    return std::abs(h) * n5 / std::sqrt(denom * double(y_new.size()));
  }

  void step_towards(double t_end) {
    ensure_fsal();
    const double min_step = 10.0 * std::abs(std::nextafter(t_, t_end) - t_);
    bool rejected = false;
    while (true) {
      if (h_abs_ < min_step) throw NumericalError("integrator step size underflow");
      double h = std::min(h_abs_, max_step_);
      bool clipped = false;
      if (t_ + h >= t_end) {
        h = t_end - t_;
        clipped = true;
      }
      stages(h, ynew_);
      const double err = error_norm(h, ynew_);
      if (!std::isfinite(err)) throw NumericalError("integrator produced non-finite values");
      if (err < 1.0) {
        double factor = err == 0.0 ? dop853::kMaxFactor
                                   : std::min(dop853::kMaxFactor, dop853::kSafety * std::pow(err, -1.0 / 8.0));
        if (rejected) factor = std::min(1.0, factor);
        const double next = h * factor;
        h_abs_ = clipped ? std::max(h_abs_, next) : next;
        t_ = clipped ? t_end : t_ + h;
        std::swap(y_, ynew_);
        std::swap(k_[0], k_[12]);
        fsal_ = true;
        ++accepted_;
        return;
      }
      h_abs_ = h * std::max(dop853::kMinFactor, dop853::kSafety * std::pow(err, -1.0 / 8.0));
      rejected = true;
      ++rejected_;
    }
  }

  // Bisection on the step size from the start of the last step.
  template <class G>
  void locate(double t0, double h, G& g, double time_rtol) {
    State y_hi = y_;
    t_ = t0;
    y_ = y_prev_;
    k_[0] = k0_prev_;
    double lo = 0.0, hi = h;
    const double tol = time_rtol * std::max(1.0, std::abs(t0));
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      stages(mid, ynew_);
      if (g(ynew_) <= 0.0) {
        hi = mid;
        y_hi = ynew_;
      } else {
        lo = mid;
      }
    }
    t_ = t0 + hi;
    y_ = std::move(y_hi);
    fsal_ = false;
  }

  Rhs f_;
  OdeTolerances tol_;
  double max_step_;
  double atol_ = 0.0;
  double t_ = 0.0;
  double h_abs_ = 0.0;
  bool fsal_ = false;
  State y_, ynew_, acc_, tmp_, y_prev_, k0_prev_;
  std::array<State, 13> k_;
  std::size_t accepted_ = 0, rejected_ = 0, evals_ = 0;
};

}  // namespace llpb
