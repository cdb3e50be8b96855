#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "closed_forms.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "lindblad.hpp"
#include "models.hpp"
#include "spectral.hpp"
#include "sweeps.hpp"
#include "weak_drive.hpp"
#include "wfmc.hpp"

#ifndef LLPB_GIT_DESCRIBE
#define LLPB_GIT_DESCRIBE "unknown"
#endif

namespace llpb {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitTolerance = 4 };

/// Parsed command line. Unset optionals fall back to the config file.
struct CliOptions {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> engine;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::vector<std::string> inputs;  // compare
  std::optional<double> tolerance;  // compare
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"model", "spds", "g2tau", "sweep", "occupation", "compare"};
  return names;
}

namespace app_detail {

using nlohmann::json;

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json network_json(const CavityNetwork& net) {
  json j;
  j["name"] = net.name;
  j["sites"] = net.n_sites();
  json c = json::array();
  for (int i = 0; i < net.n_sites(); ++i) {
    json row = json::array();
    for (int k = 0; k < net.n_sites(); ++k) row.push_back(net.couplings(i, k));
    c.push_back(row);
  }
  j["couplings"] = c;
  j["detuning"] = std::vector<double>(net.detuning.data(), net.detuning.data() + net.detuning.size());
  j["loss"] = std::vector<double>(net.loss.data(), net.loss.data() + net.loss.size());
  j["kerr"] = net.kerr;
  json ck = json::array();
  for (const auto& x : net.cross_kerr) ck.push_back({{"i", x.i + 1}, {"j", x.j + 1}, {"alpha_x", x.alpha_x}});
  j["cross_kerr"] = ck;
  j["drive_site"] = net.drive_site + 1;
  j["signal_site"] = net.signal_site + 1;
  j["drive_amplitude"] = complex_json(net.drive_amplitude);
  j["unit"] = to_string(net.unit);
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json trajectory_json(const TrajectoryConfig& t) {
  return {{"beta", t.beta},
          {"n_traj", t.n_traj},
          {"t_relax", t.t_relax},
          {"t_record", t.t_record},
          {"sample_interval", t.sample_interval > 0 ? json(t.sample_interval) : json("1/gamma_max")},
          {"rtol", t.tol.rtol},
          {"atol", t.tol.atol},
          {"atol_relative", t.tol.atol_relative}};
}

/// Run manifest. Stable keys: schema, command, engine, preset, network,
/// parameters, seed, threads, git_describe, assumptions, outputs, out_dir,
/// timestamp, manifest_hash. The hash skips timestamp, threads and out_dir.
struct Manifest {
  json body;

  Manifest(const std::string& command, const RunConfig& c, const CavityNetwork& net, unsigned threads) {
    body["schema"] = "llpb-run/1";
    body["command"] = command;
    body["engine"] = to_string(c.engine);
    body["preset"] = c.preset;
    body["network"] = network_json(net);
    body["parameters"] = json::object();
    body["seed"] = c.seed;
    body["threads"] = threads;
    body["git_describe"] = LLPB_GIT_DESCRIBE;
    body["assumptions"] = net.assumptions;
    body["outputs"] = json::array();
    body["out_dir"] = c.out_dir;
  }

  void assume(const std::string& flag) { body["assumptions"].push_back(flag); }

  std::string hash() const { return manifest_hash(body); }

  json finalize() const {
    json out = body;
    out["manifest_hash"] = hash();
    out["timestamp"] = utc_timestamp();
    return out;
  }
};

inline std::filesystem::path prepare_out(const RunConfig& c) {
  std::filesystem::path dir(c.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("--out", "cannot create directory " + c.out_dir + ": " + ec.message());
  return dir;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline void apply_cli(RunConfig& c, const CliOptions& o) {
  if (o.engine) c.engine = parse_engine(*o.engine, "--engine");
  if (o.seed) c.seed = *o.seed;
  if (o.threads) {
    if (*o.threads < 1) throw ConfigError("--threads", "must be at least 1");
    c.threads = *o.threads;
  }
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (!o.inputs.empty()) c.compare_inputs = o.inputs;
  if (o.tolerance) c.compare_tolerance = *o.tolerance;
  c.trajectory.seed = c.seed;
  c.trajectory.threads = c.threads;
}

inline json spds_report(const CavityNetwork& net) {
  json r;
  json dyson = json::array();
  std::optional<cplx> seed;
  for (const auto& cand : dyson_spds_estimate(net)) {
    dyson.push_back({{"z", complex_json(cand.z)}, {"loss_compatible", cand.loss_compatible}, {"label", cand.label}});
    if (cand.loss_compatible && !seed) seed = cand.z;
  }
  r["dyson_estimate"] = dyson;
  if (!seed) throw NumericalError("no loss-compatible Dyson root");
  const SpdsRoot root = find_spds_zero(net, *seed);
  r["refined_root"] = {{"z", complex_json(root.z_star)},
                       {"residual", root.residual},
                       {"status", to_string(root.status)},
                       {"iterations", root.iterations}};
  if (net.kerr != 0.0 || !net.cross_kerr.empty()) {
    const FssZeros z = fss_zeros(net, *seed);
    r["pole"] = complex_json(z.pole.z_star);
    r["delta_z_closed"] = complex_json(z.delta_z_closed);
    json pair = json::array();
    for (const auto& zz : z.zeros)
      pair.push_back({{"z", complex_json(zz.z)}, {"residual", zz.residual}, {"status", to_string(zz.status)}});
    r["zero_pair"] = pair;
    json closed = json::array();
    for (cplx zc : z.closed_zeros) closed.push_back(complex_json(zc));
    r["closed_zero_pair"] = closed;
  }
  return r;
}

}  // namespace app_detail

/// Executes one subcommand. Returns a process exit code; messages go to err.
inline int run(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  using app_detail::json;
  try {
    RunConfig c = opt.config_path ? load_config(*opt.config_path) : RunConfig{};
    app_detail::apply_cli(c, opt);

    if (opt.command == "compare") {
      if (c.compare_inputs.size() < 2) throw ConfigError("compare.inputs", "need at least two series");
      std::vector<CorrelationSeries> series;
      for (const auto& p : c.compare_inputs) series.push_back(read_series_csv(p));
      json report;
      report["tolerance"] = c.compare_tolerance;
      report["reference"] = c.compare_inputs[0];
      report["comparisons"] = json::array();
      bool pass = true;
      for (std::size_t k = 1; k < series.size(); ++k) {
        const Discrepancy d = compare_series(series[0], series[k]);
        pass = pass && d.sup_norm <= c.compare_tolerance;
        json z = json::array();
        for (std::size_t m = 0; m < d.tau.size(); ++m) z.push_back({d.tau[m], d.z_score[m]});
        report["comparisons"].push_back({{"input", c.compare_inputs[k]},
                                         {"sup_norm", d.sup_norm},
                                         {"rms", d.rms},
                                         {"max_abs_z", d.max_abs_z},
                                         {"z_scores", z},
                                         {"pass", d.sup_norm <= c.compare_tolerance}});
      }
      report["pass"] = pass;
      out << report.dump(2) << '\n';
      return pass ? kExitOk : kExitTolerance;
    }

    const CavityNetwork net = build_network(c);
    const unsigned threads = resolve_threads(c.threads);
    app_detail::Manifest manifest(opt.command, c, net, threads);
    auto& params = manifest.body["parameters"];
    const auto dir = app_detail::prepare_out(c);
    const int i = c.measure_site >= 0 ? c.measure_site : net.signal_site;
    const int j = c.collapse_site >= 0 ? c.collapse_site : net.signal_site;
    if (i >= net.n_sites()) throw ConfigError("run.measure_site", "out of range");
    if (j >= net.n_sites()) throw ConfigError("run.collapse_site", "out of range");

    EngineOptions eo;
    eo.threads = c.threads;
    eo.trajectory = c.trajectory;
    eo.steady.method = c.steady_method;
    if (c.engine != Engine::analytic) {
      eo.fock = resolve_fock(c, net);
      params["fock_cutoffs"] = eo.fock.cutoffs;
      if (!c.fock) manifest.assume("fock cutoffs default 16 on the driven site, 8 elsewhere");
    }
    if (c.engine == Engine::wfmc) {
      params["trajectory"] = app_detail::trajectory_json(c.trajectory);
      if (c.trajectory.sample_interval <= 0) manifest.assume("collapse sample interval 1/gamma_max");
    }

    json result;
    if (opt.command == "model") {
      result = app_detail::network_json(net);
      result["z"] = json::array();
      for (int s = 0; s < net.n_sites(); ++s) result["z"].push_back(app_detail::complex_json(net.z(s)));
      manifest.body["outputs"].push_back("model.json");
      app_detail::write_json(dir / "model.json", result);
    } else if (opt.command == "spds") {
      result = app_detail::spds_report(net);
      manifest.body["outputs"].push_back("spds.json");
      app_detail::write_json(dir / "spds.json", result);
    } else if (opt.command == "g2tau") {
      params["tau"] = {{"start", c.tau.front()}, {"stop", c.tau.back()}, {"points", c.tau.size()}};
      params["measure_site"] = i + 1;
      params["collapse_site"] = j + 1;
      CorrelationSeries s;
      if (c.engine == Engine::analytic) {
        s = g2_tau_analytic(net, c.tau, i, j);
      } else if (c.engine == Engine::regression) {
        const LindbladProblem p = LindbladProblem::from_network(net, eo.fock);
        s = regression_g2(p, steady_state(p, eo.steady), j, i, c.tau);
      } else {
        TrajectoryConfig t = c.trajectory;
        t.fock = eo.fock;
        const EnsembleResult r = ensemble_g2(net, t, c.tau, i, j);
        for (const auto& w : r.warnings) err << "warning: " << w << '\n';
        result["max_top_fock"] = r.max_top_fock;
        json seeds = json::array();
        for (const auto& tr : r.trajectories) seeds.push_back({{"seed", tr.seed}, {"jumps", tr.jumps.size()}});
        result["trajectories"] = seeds;
        s = r.series;
      }
      if (s.status == SeriesStatus::diverging_denominator)
        throw NumericalError("G_id G_jd vanishes at this operating point: g2 diverges");
      manifest.body["outputs"].push_back("g2tau.csv");
      const std::string h = manifest.hash();
      write_series_csv((dir / "g2tau.csv").string(), s, h);
      if (const auto w = antibunching_window(s)) result["antibunching_window"] = *w;
      result["g2_0"] = s.values.front();
    } else if (opt.command == "sweep") {
      params["delta"] = {{"min", c.deltas.front()}, {"max", c.deltas.back()}, {"points", c.deltas.size()}};
      params["gamma"] = {{"min", c.gammas.front()}, {"max", c.gammas.back()}, {"points", c.gammas.size()}};
      const SweepGrid g = sweep_g2_zero(net, c.deltas, c.gammas, c.engine, eo);
      manifest.body["outputs"].push_back("sweep.csv");
      write_csv((dir / "sweep.csv").string(), g.table(manifest.hash()));
      const auto m = g.argmin();
      result["grid_minimum"] = {{"delta", m.delta}, {"gamma", m.gamma}, {"g2_0", m.value}};
      if (c.engine == Engine::analytic && net.kerr != 0.0) {
        const RefinedMinimum r = refine_g2_zero(net, m.delta, m.gamma);
        result["refined_minimum"] = {
            {"delta", r.delta}, {"gamma", r.gamma}, {"g2_0", r.value}, {"converged", r.converged}};
      }
    } else if (opt.command == "occupation") {
      if (c.drives.empty()) throw ConfigError("occupation.drives", "required for the occupation command");
      params["drives"] = c.drives;
      CsvTable t{{}, {"F_d", "n_signal", "g2_0", "stderr"}, {}};
      if (c.engine == Engine::wfmc) {
        TrajectoryConfig tc = c.trajectory;
        tc.fock = eo.fock;
        for (const auto& row : occupation_sweep(net, c.drives, tc))
          t.rows.push_back({format_double(row.drive), format_double(row.n_signal), format_double(row.g2_0),
                            format_double(row.std_error)});
      } else {
        for (double F : c.drives) {
          CavityNetwork d = net;
          d.drive_amplitude = F;
          double n_s = 0.0, g0 = 0.0;
          if (c.engine == Engine::analytic) {
            n_s = steady_state_weak_drive(d).occupations(d.signal_site);
            g0 = g2_zero_analytic(d);
          } else {
            const LindbladProblem p = LindbladProblem::from_network(d, eo.fock);
            const DensityMatrix rho = steady_state(p, eo.steady);
            n_s = rho.expectation(number(d.signal_site, p.basis()));
            g0 = static_g2(p, rho, d.signal_site, d.signal_site);
          }
          t.rows.push_back({format_double(F), format_double(n_s), format_double(g0), std::string()});
        }
      }
      manifest.body["outputs"].push_back("occupation.csv");
      t.manifest_hash = manifest.hash();
      write_csv((dir / "occupation.csv").string(), t);
    } else {
      throw ConfigError("command", "unknown subcommand '" + opt.command + "'");
    }

    json final = manifest.finalize();
    final["result"] = result;
    app_detail::write_json(dir / "manifest.json", final);
    out << final.dump(2) << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure in " << opt.command << ": " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace llpb
