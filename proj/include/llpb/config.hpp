#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "models.hpp"
#include "network.hpp"
#include "series.hpp"
#include "sweeps.hpp"
#include "wfmc.hpp"

namespace llpb {

/// Everything one CLI run needs. Parsed from an INI file (see
/// configs/README.md for the schema); CLI flags override [run] keys.
struct RunConfig {
  std::string preset = "llpb-four-cavity";
  std::map<std::string, std::string> model;    // [model] overrides
  std::map<std::string, std::string> network;  // [network] for preset = custom
  Engine engine = Engine::analytic;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";
  int measure_site = -1;  // 0-based; -1 means the signal site
  int collapse_site = -1;

  std::optional<FockConfig> fock;
  std::vector<double> tau = linspace(0.0, 20.0, 201);
  std::vector<double> deltas = linspace(-0.03, 0.03, 121);
  std::vector<double> gammas = linspace(0.9, 1.1, 81);
  std::vector<double> drives;
  TrajectoryConfig trajectory{};
  SteadyMethod steady_method = SteadyMethod::integrate;
  std::vector<std::string> compare_inputs;
  double compare_tolerance = 0.05;
};

namespace config_detail {

inline double number(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const InvalidArgument&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

template <class Int>
Int integer(const std::string& key, const std::string& v) {
  Int x{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

inline std::vector<std::string> list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> numbers(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : list(v)) out.push_back(number(key, s));
  if (out.empty()) throw ConfigError(key, "list is empty");
  return out;
}

/// start/stop/points triple into an ascending grid.
inline std::vector<double> axis(const std::string& key, double lo, double hi, long n) {
  if (n < 1) throw ConfigError(key, "point count must be at least 1");
  if (n > 1 && !(hi > lo)) throw ConfigError(key, "range must be ascending");
  return n == 1 ? std::vector<double>{lo} : linspace(lo, hi, std::size_t(n));
}

}  // namespace config_detail

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"run", {"preset", "engine", "seed", "threads", "out", "measure_site", "collapse_site"}},
      {"model",
       {"k", "J", "J_prime", "J_dprime", "alpha", "delta", "gamma", "gamma_in", "gamma_out", "drive", "upb_mode",
        "R", "w", "t", "n_core", "n_clad", "n2", "wavelength_nm"}},
      {"network",
       {"sites", "couplings", "detuning", "loss", "kerr", "cross_kerr", "drive_site", "signal_site", "drive", "unit"}},
      {"fock", {"cutoffs"}},
      {"tau", {"start", "stop", "points"}},
      {"sweep", {"delta_min", "delta_max", "delta_points", "gamma_min", "gamma_max", "gamma_points"}},
      {"occupation", {"drives"}},
      {"wfmc", {"beta", "n_traj", "t_relax", "t_record", "sample_interval", "rtol", "atol"}},
      {"master", {"steady_method"}},
      {"compare", {"inputs", "tolerance"}},
  };
  return schema;
}

inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  using namespace config_detail;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  const auto& schema = config_schema();
  std::map<std::string, std::map<std::string, std::string>> kv;
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) {
      if (body.empty() && !body.data().empty()) throw ConfigError(section, "keys must live in a section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
      kv[section][key] = trim(value.data());
    }
  }
  auto get = [&kv](const std::string& s, const std::string& k) -> std::optional<std::string> {
    const auto a = kv.find(s);
    if (a == kv.end()) return std::nullopt;
    const auto b = a->second.find(k);
    if (b == a->second.end()) return std::nullopt;
    return b->second;
  };

  RunConfig c;
  if (auto v = get("run", "preset")) c.preset = *v;
  if (auto v = get("run", "engine")) c.engine = parse_engine(*v, "run.engine");
  if (auto v = get("run", "seed")) c.seed = integer<std::uint64_t>("run.seed", *v);
  if (auto v = get("run", "threads")) c.threads = integer<int>("run.threads", *v);
  if (auto v = get("run", "out")) c.out_dir = *v;
  if (auto v = get("run", "measure_site")) c.measure_site = integer<int>("run.measure_site", *v) - 1;
  if (auto v = get("run", "collapse_site")) c.collapse_site = integer<int>("run.collapse_site", *v) - 1;
  if (kv.count("model")) c.model = kv["model"];
  if (kv.count("network")) c.network = kv["network"];

  if (auto v = get("fock", "cutoffs")) {
    FockConfig f;
    for (const auto& s : list(*v)) f.cutoffs.push_back(integer<int>("fock.cutoffs", s));
    try {
      f.validate();
    } catch (const Error& e) {
      throw ConfigError("fock.cutoffs", e.what());
    }
    c.fock = f;
  }

  if (kv.count("tau")) {
    const double a = number("tau.start", get("tau", "start").value_or("0"));
    const double b = number("tau.stop", get("tau", "stop").value_or("20"));
    const long n = integer<long>("tau.points", get("tau", "points").value_or("201"));
    c.tau = axis("tau", a, b, n);
    if (c.tau.front() < 0.0) throw ConfigError("tau.start", "delays must be nonnegative");
  }
  if (kv.count("sweep")) {
    c.deltas = axis("sweep.delta", number("sweep.delta_min", get("sweep", "delta_min").value_or("-0.03")),
                    number("sweep.delta_max", get("sweep", "delta_max").value_or("0.03")),
                    integer<long>("sweep.delta_points", get("sweep", "delta_points").value_or("121")));
    c.gammas = axis("sweep.gamma", number("sweep.gamma_min", get("sweep", "gamma_min").value_or("0.9")),
                    number("sweep.gamma_max", get("sweep", "gamma_max").value_or("1.1")),
                    integer<long>("sweep.gamma_points", get("sweep", "gamma_points").value_or("81")));
    if (!(c.gammas.front() > 0.0)) throw ConfigError("sweep.gamma_min", "loss must be positive");
  }
  if (auto v = get("occupation", "drives")) {
    c.drives = numbers("occupation.drives", *v);
    for (double F : c.drives)
      if (!(F > 0.0)) throw ConfigError("occupation.drives", "drive amplitudes must be positive");
  }

  auto& t = c.trajectory;
  if (auto v = get("wfmc", "beta")) t.beta = number("wfmc.beta", *v);
  if (auto v = get("wfmc", "n_traj")) t.n_traj = integer<int>("wfmc.n_traj", *v);
  if (auto v = get("wfmc", "t_relax")) t.t_relax = number("wfmc.t_relax", *v);
  if (auto v = get("wfmc", "t_record")) t.t_record = number("wfmc.t_record", *v);
  if (auto v = get("wfmc", "sample_interval")) t.sample_interval = number("wfmc.sample_interval", *v);
  if (auto v = get("wfmc", "rtol")) t.tol.rtol = number("wfmc.rtol", *v);
  if (auto v = get("wfmc", "atol")) t.tol.atol = number("wfmc.atol", *v);
  if (t.beta < 0.0) throw ConfigError("wfmc.beta", "must be nonnegative");
  if (t.n_traj < 1) throw ConfigError("wfmc.n_traj", "must be at least 1");
  if (!(t.t_relax > 0.0)) throw ConfigError("wfmc.t_relax", "must be positive");
  if (!(t.t_record > 0.0)) throw ConfigError("wfmc.t_record", "must be positive");
  if (get("wfmc", "sample_interval") && !(t.sample_interval > 0.0))
    throw ConfigError("wfmc.sample_interval", "must be positive");
  if (!(t.tol.rtol > 0.0)) throw ConfigError("wfmc.rtol", "must be positive");
  if (!(t.tol.atol > 0.0)) throw ConfigError("wfmc.atol", "must be positive");

  if (auto v = get("master", "steady_method")) {
    if (*v == "integrate") c.steady_method = SteadyMethod::integrate;
    else if (*v == "linear-solve") c.steady_method = SteadyMethod::linear_solve;
    else throw ConfigError("master.steady_method", "expected integrate or linear-solve");
  }
  if (auto v = get("compare", "inputs")) c.compare_inputs = list(*v);
  if (auto v = get("compare", "tolerance")) c.compare_tolerance = number("compare.tolerance", *v);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  return parse_config(in);
}

namespace config_detail {

/// "1-2:0.5, 2-3:0.1" (1-based sites) into (i, j, value) triples.
inline std::vector<std::tuple<int, int, double>> pairs(const std::string& key, const std::string& v, int n) {
  std::vector<std::tuple<int, int, double>> out;
  for (const auto& item : list(v)) {
    const auto dash = item.find('-'), colon = item.find(':');
    if (dash == std::string::npos || colon == std::string::npos || colon < dash)
      throw ConfigError(key, "expected entries of the form i-j:value, got '" + item + "'");
    const int i = integer<int>(key, trim(item.substr(0, dash))) - 1;
    const int j = integer<int>(key, trim(item.substr(dash + 1, colon - dash - 1))) - 1;
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ConfigError(key, "site pair out of range in '" + item + "'");
    out.emplace_back(i, j, number(key, trim(item.substr(colon + 1))));
  }
  return out;
}

inline RVec per_site(const std::string& key, const std::string& v, int n) {
  const auto xs = numbers(key, v);
  if (xs.size() == 1) return RVec::Constant(n, xs[0]);
  if (int(xs.size()) != n) throw ConfigError(key, "expected 1 or " + std::to_string(n) + " values");
  RVec out(n);
  for (int i = 0; i < n; ++i) out(i) = xs[std::size_t(i)];
  return out;
}

}  // namespace config_detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"conventional", "upb-two-cavity", "llpb-four-cavity",
                                                 "s5-four-cavity", "two-ring-photonic", "custom"};
  return names;
}

/// Network for the configured preset with [model] overrides applied, or the
/// explicit [network] section when preset = custom.
inline CavityNetwork build_network(const RunConfig& c) {
  using namespace config_detail;
  std::set<std::string> used;
  auto opt = [&](const std::string& k) -> std::optional<double> {
    const auto it = c.model.find(k);
    if (it == c.model.end()) return std::nullopt;
    used.insert(k);
    return number("model." + k, it->second);
  };
  auto val = [&](const std::string& k, double def) { return opt(k).value_or(def); };
  auto finish = [&](CavityNetwork net) {
    for (const auto& [k, v] : c.model)
      if (!used.count(k)) throw ConfigError("model." + k, "not a parameter of preset '" + c.preset + "'");
    return net;
  };
  const std::optional<double> drive = opt("drive");
  const cplx F = drive ? cplx(*drive, 0.0) : cplx(kDefaultDrive, 0.0);
  if (c.preset != "custom" && !c.network.empty()) throw ConfigError("network", "only valid with preset = custom");

  try {
    if (c.preset == "conventional") {
      return finish(preset_conventional(val("alpha", 10.0), val("delta", 0.02491), val("gamma", 1.0), F));
    }
    if (c.preset == "upb-two-cavity") {
      UpbMode mode = UpbMode::exact;
      if (const auto it = c.model.find("upb_mode"); it != c.model.end()) {
        used.insert("upb_mode");
        if (it->second == "asymptotic") mode = UpbMode::asymptotic;
        else if (it->second != "exact") throw ConfigError("model.upb_mode", "expected exact or asymptotic");
      }
      return finish(preset_upb_two_cavity(val("alpha", 0.001227), val("gamma", 1.0), mode, F).network);
    }
    if (c.preset == "llpb-four-cavity" || c.preset == "s5-four-cavity") {
      FourCavityParams p = c.preset == "s5-four-cavity" ? s5_four_cavity_params() : FourCavityParams{};
      p.k = val("k", p.k);
      p.J = val("J", p.J);
      p.J_prime = val("J_prime", p.J_prime);
      p.alpha = val("alpha", p.alpha);
      p.delta = val("delta", p.delta);
      p.gamma = val("gamma", p.gamma);
      CavityNetwork net = preset_llpb_four_cavity(p, F);
      net.name = c.preset;
      return finish(net);
    }
    if (c.preset == "two-ring-photonic") {
      PhotonicRingParams p;
      p.R = val("R", p.R);
      p.w = val("w", p.w);
      p.t = val("t", p.t);
      p.n_core = val("n_core", p.n_core);
      p.n_clad = val("n_clad", p.n_clad);
      p.n2 = val("n2", p.n2);
      p.wavelength_nm = val("wavelength_nm", p.wavelength_nm);
      p.gamma = val("gamma", p.gamma);
      p.gamma_in = val("gamma_in", p.gamma_in);
      p.gamma_out = val("gamma_out", p.gamma_out);
      p.J = val("J", p.J);
      p.J_prime = val("J_prime", p.J_prime);
      p.J_dprime = val("J_dprime", p.J_dprime);
      p.delta = val("delta", p.delta);
      CavityNetwork net = preset_two_ring_photonic(p, F, opt("alpha"));
      if (!c.model.count("J")) net.assumptions.push_back("inter-ring J=1 ueV assumed");
      return finish(net);
    }
    if (c.preset == "custom") {
      if (!c.model.empty()) throw ConfigError("model", "use [network] with preset = custom");
      auto req = [&](const std::string& k) {
        const auto it = c.network.find(k);
        if (it == c.network.end()) throw ConfigError("network." + k, "required for preset = custom");
        return it->second;
      };
      auto has = [&](const std::string& k) { return c.network.count(k) > 0; };
      const int n = integer<int>("network.sites", req("sites"));
      if (n < 1) throw ConfigError("network.sites", "must be at least 1");
      CavityNetwork net;
      net.name = "custom";
      net.couplings = RMat::Zero(n, n);
      if (has("couplings"))
        for (auto [i, j, v] : pairs("network.couplings", req("couplings"), n)) net.couplings(i, j) = net.couplings(j, i) = v;
      net.detuning = has("detuning") ? per_site("network.detuning", req("detuning"), n) : RVec::Zero(n);
      net.loss = per_site("network.loss", req("loss"), n);
      net.kerr = has("kerr") ? number("network.kerr", req("kerr")) : 0.0;
      if (has("cross_kerr"))
        for (auto [i, j, v] : pairs("network.cross_kerr", req("cross_kerr"), n)) net.cross_kerr.push_back({i, j, v});
      net.drive_site = has("drive_site") ? integer<int>("network.drive_site", req("drive_site")) - 1 : 0;
      net.signal_site = has("signal_site") ? integer<int>("network.signal_site", req("signal_site")) - 1 : 0;
      if (net.drive_site < 0 || net.drive_site >= n) throw ConfigError("network.drive_site", "out of range");
      if (net.signal_site < 0 || net.signal_site >= n) throw ConfigError("network.signal_site", "out of range");
      if (has("drive")) {
        net.drive_amplitude = number("network.drive", req("drive"));
      } else {
        net.drive_amplitude = kDefaultDrive;
        net.assumptions.push_back("drive_amplitude=1e-5 assumed");
      }
      if (has("unit")) {
        const auto u = req("unit");
        if (u == "ueV") net.unit = RateUnit::micro_ev;
        else if (u != "gamma") throw ConfigError("network.unit", "expected gamma or ueV");
      }
      try {
        net.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError("network", e.what());
      }
      return net;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("model", e.what());
  }
  throw ConfigError("run.preset", "unknown preset '" + c.preset + "'");
}

/// Configured cutoffs, else 16 on the driven site and 8 elsewhere.
inline FockConfig resolve_fock(const RunConfig& c, const CavityNetwork& net) {
  if (c.fock) {
    if (int(c.fock->cutoffs.size()) != net.n_sites())
      throw ConfigError("fock.cutoffs", "expected " + std::to_string(net.n_sites()) + " entries");
    return *c.fock;
  }
  FockConfig f;
  f.cutoffs.assign(std::size_t(net.n_sites()), 8);
  f.cutoffs[std::size_t(net.drive_site)] = 16;
  return f;
}

}  // namespace llpb
