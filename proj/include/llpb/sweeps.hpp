#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "io.hpp"
#include "lindblad.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
#include "weak_drive.hpp"
#include "wfmc.hpp"

namespace llpb {

enum class Engine { analytic, regression, wfmc };

inline const char* to_string(Engine e) {
  switch (e) {
    case Engine::analytic: return "analytic";
    case Engine::regression: return "regression";
    case Engine::wfmc: return "wfmc";
  }
  return "?";
}

inline Engine parse_engine(const std::string& s, const std::string& key = "engine") {
  if (s == "analytic") return Engine::analytic;
  if (s == "regression") return Engine::regression;
  if (s == "wfmc") return Engine::wfmc;
  throw ConfigError(key, "unknown engine '" + s + "' (analytic, regression, wfmc)");
}

/// g2(0) over a (Delta, gamma) grid, stored [gamma][Delta].
struct SweepGrid {
  std::vector<double> delta_values;
  std::vector<double> gamma_values;
  RMat g2;
  Engine engine = Engine::analytic;
  std::map<std::string, std::string> metadata;

  struct Cell {
    std::size_t gamma_index = 0, delta_index = 0;
    double delta = 0.0, gamma = 0.0, value = 0.0;
  };

  void validate() const {
    if (delta_values.empty() || gamma_values.empty()) throw InvalidArgument("sweep axes must be nonempty");
    if (std::size_t(g2.rows()) != gamma_values.size() || std::size_t(g2.cols()) != delta_values.size())
      throw InvalidArgument("sweep matrix shape differs from its axes");
    if ((g2.array() < 0.0).any() || g2.array().isNaN().any()) throw InvalidArgument("negative or NaN sweep entry");
  }

  Cell argmin() const {
    Eigen::Index r = 0, c = 0;
    const double v = g2.minCoeff(&r, &c);
    return {std::size_t(r), std::size_t(c), delta_values[std::size_t(c)], gamma_values[std::size_t(r)], v};
  }

  CsvTable table(const std::string& hash) const {
    CsvTable t{hash, {"gamma", "delta", "g2_0"}, {}};
    for (std::size_t r = 0; r < gamma_values.size(); ++r)
      for (std::size_t c = 0; c < delta_values.size(); ++c)
        t.rows.push_back({format_double(gamma_values[r]), format_double(delta_values[c]),
                          format_double(g2(Eigen::Index(r), Eigen::Index(c)))});
    return t;
  }
};

/// Engine settings for sweeps that need a Fock space.
struct EngineOptions {
  FockConfig fock{};
  TrajectoryConfig trajectory{};
  SteadyStateOptions steady{};
  int threads = 0;
};

/// g2_ss(0) of one network under the chosen engine. Analytic values at an
/// SPDS pole (G_sd = 0) are reported as +inf.
inline double g2_zero(const CavityNetwork& net, Engine engine, const EngineOptions& opt) {
  const int s = net.signal_site;
  switch (engine) {
    case Engine::analytic:
      try {
        return g2_zero_analytic(net);
      } catch (const PoleProximityError&) {
        return std::numeric_limits<double>::infinity();
      }
    case Engine::regression: {
      const LindbladProblem p = LindbladProblem::from_network(net, opt.fock);
      return static_g2(p, steady_state(p, opt.steady), s, s);
    }
    case Engine::wfmc: {
      TrajectoryConfig cfg = opt.trajectory;
      cfg.fock = opt.fock;
      cfg.threads = 1;  // parallelism lives at the grid level
      return ensemble_g2(net, cfg, {0.0}).series.values[0];
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline SweepGrid sweep_g2_zero(const CavityNetwork& net, const std::vector<double>& deltas,
                               const std::vector<double>& gammas, Engine engine, const EngineOptions& opt = {}) {
  SweepGrid grid;
  grid.delta_values = deltas;
  grid.gamma_values = gammas;
  grid.engine = engine;
  grid.g2.resize(Eigen::Index(gammas.size()), Eigen::Index(deltas.size()));
  const std::size_t nd = deltas.size();
  parallel_for(gammas.size() * nd, resolve_threads(opt.threads), [&](std::size_t k) {
    const std::size_t r = k / nd, c = k % nd;
    grid.g2(Eigen::Index(r), Eigen::Index(c)) = g2_zero(net.at(deltas[c], gammas[r]), engine, opt);
  });
  grid.metadata["engine"] = to_string(engine);
  grid.validate();
  return grid;
}

struct RefinedMinimum {
  double delta = 0.0;
  double gamma = 0.0;
  double value = 0.0;  // analytic g2(0) at the refined point
  int iterations = 0;
  bool converged = false;
};

/// Refines a grid minimum to the exact analytic zero f_ss(Delta, gamma) = 0
/// by 2D Newton iteration on (Re f, Im f).
inline RefinedMinimum refine_g2_zero(const CavityNetwork& net, double delta0, double gamma0,
                                     int max_iterations = 50) {
  auto f = [&net](double d, double g) {
    const CavityNetwork m = net.at(d, g);
    return fss(m, m.reference_z());
  };
  RefinedMinimum out{delta0, gamma0, 0.0, 0, false};
  for (int it = 1; it <= max_iterations; ++it) {
    out.iterations = it;
    const cplx f0 = f(out.delta, out.gamma);
    if (std::abs(f0) < 1e-12) {
      out.converged = true;
      break;
    }
    const double hd = 1e-7 * std::max(1e-3, std::abs(out.delta)), hg = 1e-7 * out.gamma;
    const cplx fd = (f(out.delta + hd, out.gamma) - f(out.delta - hd, out.gamma)) / (2 * hd);
    const cplx fg = (f(out.delta, out.gamma + hg) - f(out.delta, out.gamma - hg)) / (2 * hg);
    Eigen::Matrix2d jac;
    jac << fd.real(), fg.real(), fd.imag(), fg.imag();
    const Eigen::Vector2d step = jac.partialPivLu().solve(Eigen::Vector2d(f0.real(), f0.imag()));
    if (!step.allFinite()) break;
    out.delta -= step(0);
    out.gamma -= step(1);
    if (!(out.gamma > 0.0)) break;
  }
  out.value = out.gamma > 0.0 ? g2_zero_analytic(net.at(out.delta, out.gamma))
                              : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace llpb
