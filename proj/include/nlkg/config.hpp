#pragma once

// Run configuration: JSON ingestion with per-field validation, a canonical
// serialization and content hashes for caching.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlkg/integrator.hpp"
#include "nlkg/nonlinearity.hpp"
#include "nlkg/resonance_scan.hpp"
#include "nlkg/rng.hpp"
#include "nlkg/spectral_basis.hpp"

namespace nlkg {

using json = nlohmann::json;

struct RunConfig {
  std::uint64_t seed = 1;
  double c = 1.0;

  struct {
    double s = 2.0;
    double M = 1.0;
    int K = 16;
    std::optional<std::uint64_t> seed;  // defaults to the run seed
    std::vector<double> v_unit;         // explicit v'_k; empty: draw from the seed
  } potential;

  NonlinearitySpec nonlinearity{{{3, 1.0}}, 0.5, 1.0};

  struct {
    double rho = 0.5;
    int N = 12;
  } norms;

  struct {
    double gamma = 0.01;
    std::optional<double> tau;  // default from s
    int r = 1;
    int N = 4;
    int K = 6;
    double n = 1.0;
    std::uint64_t samples = 10000;
    std::vector<double> gammas{0.02, 0.01, 0.005};
  } nonres;

  struct {
    int r = 4;
    int N = 8;
    int K = 12;
    MomentumProjection momentum_projection = MomentumProjection::strict;
    double gamma_floor = 1e-8;
    std::vector<double> epsilons{1e-2, 3e-3, 1e-3};
    int probe_samples = 4;
  } normal_form;

  struct {
    double dt = 0.01;
    double T = 1000.0;
    double R = 1e-2;
    int record_stride = 100;
    Scheme scheme = Scheme::strang;
    std::string backend = "spectral";
  } sim;

  struct {
    std::string dir = "out";
    std::vector<std::string> formats{"csv", "json"};
  } output;

  double tau() const { return nonres.tau.value_or(default_tau(potential.s)); }
  std::uint64_t potential_seed() const { return potential.seed.value_or(seed); }

  PotentialSpec potential_spec(int K) const {
    PotentialSpec p{potential.s, potential.M, {}};
    if (!potential.v_unit.empty()) {
      if (static_cast<int>(potential.v_unit.size()) < K)
        throw ValidationError("potential.v_unit has fewer entries than the truncation");
      p.unit_coeffs.assign(potential.v_unit.begin(), potential.v_unit.begin() + K);
    } else {
      CounterRng rng(potential_seed(), streams::potential);
      p.unit_coeffs.resize(static_cast<std::size_t>(K));
      for (auto& u : p.unit_coeffs) u = rng.uniform() - 0.5;
    }
    return p;
  }

  FrequencyTable frequencies(int K) const { return FrequencyTable(c, potential_spec(K)); }
  FrequencyTable frequencies() const { return frequencies(potential.K); }

  SimConfig sim_config() const {
    SimConfig s;
    s.K = potential.K;
    s.dt = sim.dt;
    s.T = sim.T;
    s.rho = norms.rho;
    s.N = norms.N;
    s.R = sim.R;
    s.seed = seed;
    s.record_stride = sim.record_stride;
    s.scheme = sim.scheme;
    return s;
  }

  NonresParams nonres_params() const { return {nonres.gamma, tau(), nonres.r, nonres.N}; }

  void validate() const;
  json to_json() const;
  static RunConfig from_json(const json& j);
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(field(key) + " has the wrong type");
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  Reader sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    static const json null;
    return j_.contains(key) ? j_.at(key) : null;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ValidationError("unknown config field " + field(k.c_str()));
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  detail::Reader root(j, "");
  root.get("seed", c.seed);
  root.get("c", c.c);

  auto pot = root.sub("potential");
  pot.get("s", c.potential.s);
  pot.get("M", c.potential.M);
  pot.get("K", c.potential.K);
  pot.get("seed", c.potential.seed);
  pot.get("v_unit", c.potential.v_unit);
  pot.finish();

  auto nl = root.sub("nonlinearity");
  const json& taylor = nl.raw("taylor");
  if (!taylor.is_null()) {
    detail::require(taylor.is_array(), "nonlinearity.taylor must be a list of [power, coefficient]");
    c.nonlinearity.taylor.clear();
    for (const auto& e : taylor) {
      detail::require(e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number(),
                      "nonlinearity.taylor entries must be [power, coefficient]");
      c.nonlinearity.taylor.emplace_back(e[0].get<int>(), e[1].get<double>());
    }
  }
  nl.get("R0", c.nonlinearity.R0);
  nl.get("M", c.nonlinearity.M);
  nl.finish();

  auto nm = root.sub("norms");
  nm.get("rho", c.norms.rho);
  nm.get("N", c.norms.N);
  nm.finish();

  auto nr = root.sub("nonres");
  nr.get("gamma", c.nonres.gamma);
  nr.get("tau", c.nonres.tau);
  nr.get("r", c.nonres.r);
  nr.get("N", c.nonres.N);
  nr.get("K", c.nonres.K);
  nr.get("n", c.nonres.n);
  nr.get("samples", c.nonres.samples);
  nr.get("gammas", c.nonres.gammas);
  nr.finish();

  auto nf = root.sub("normal_form");
  nf.get("r", c.normal_form.r);
  nf.get("N", c.normal_form.N);
  nf.get("K", c.normal_form.K);
  std::string proj = to_string(c.normal_form.momentum_projection);
  nf.get("momentum_projection", proj);
  c.normal_form.momentum_projection = parse_projection(proj);
  nf.get("gamma_floor", c.normal_form.gamma_floor);
  nf.get("epsilons", c.normal_form.epsilons);
  nf.get("probe_samples", c.normal_form.probe_samples);
  nf.finish();

  auto sm = root.sub("sim");
  sm.get("dt", c.sim.dt);
  sm.get("T", c.sim.T);
  sm.get("R", c.sim.R);
  sm.get("record_stride", c.sim.record_stride);
  std::string scheme = c.sim.scheme == Scheme::strang ? "strang" : "yoshida4";
  sm.get("scheme", scheme);
  c.sim.scheme = parse_scheme(scheme);
  sm.get("backend", c.sim.backend);
  sm.finish();

  auto out = root.sub("output");
  out.get("dir", c.output.dir);
  out.get("formats", c.output.formats);
  out.finish();

  root.finish();
  c.validate();
  return c;
}

inline void RunConfig::validate() const {
  using detail::require;
  require(c >= 1.0, "c must be >= 1");
  require(potential.K >= 1, "potential.K must be >= 1");
  require(potential.s > 0.0, "potential.s must be positive");
  require(potential.M > 0.0, "potential.M must be positive");
  for (double u : potential.v_unit)
    require(u >= -0.5 && u <= 0.5, "potential.v_unit entries must lie in [-1/2, 1/2]");
  require(potential.v_unit.empty() || static_cast<int>(potential.v_unit.size()) >= potential.K,
          "potential.v_unit must have at least potential.K entries");
  nonlinearity.validate();
  require(norms.rho > 0.0, "norms.rho must be positive");
  require(norms.N >= 1 && norms.N <= potential.K, "norms.N must lie in [1, potential.K]");
  require(nonres.gamma >= 0.0, "nonres.gamma must be >= 0");
  require(tau() >= 0.0, "nonres.tau must be >= 0");
  require(nonres.r >= 1, "nonres.r must be >= 1");
  require(nonres.N >= 1 && nonres.N <= nonres.K, "nonres.N must lie in [1, nonres.K]");
  require(nonres.K >= 1 && nonres.K <= potential.K, "nonres.K must lie in [1, potential.K]");
  require(nonres.n >= 1.0, "nonres.n must be >= 1");
  require(nonres.samples >= 100, "nonres.samples must be >= 100");
  for (double g : nonres.gammas) require(g >= 0.0, "nonres.gammas entries must be >= 0");
  require(normal_form.r >= 3 && normal_form.r <= 12, "normal_form.r must lie in [3, 12]");
  require(normal_form.N >= 1 && normal_form.N <= normal_form.K,
          "normal_form.N must lie in [1, normal_form.K]");
  require(normal_form.K >= 1 && normal_form.K <= potential.K,
          "normal_form.K must lie in [1, potential.K]");
  require(normal_form.gamma_floor > 0.0, "normal_form.gamma_floor must be positive");
  for (double e : normal_form.epsilons)
    require(e > 0.0 && e < 1.0, "normal_form.epsilons entries must lie in (0, 1)");
  require(normal_form.probe_samples >= 1, "normal_form.probe_samples must be >= 1");
  require(sim.dt > 0.0, "sim.dt must be positive");
  require(sim.T > 0.0, "sim.T must be positive");
  require(sim.R >= 0.0, "sim.R must be >= 0");
  require(sim.record_stride >= 1, "sim.record_stride must be >= 1");
  require(sim.backend == "spectral" || sim.backend == "polynomial",
          "sim.backend must be 'spectral' or 'polynomial'");
  require(sim.backend != "spectral" || nonlinearity.odd(),
          "sim.backend 'spectral' needs an odd nonlinearity");
  require(!output.dir.empty(), "output.dir must not be empty");
  for (const auto& f : output.formats)
    require(f == "csv" || f == "json", "output.formats entries must be 'csv' or 'json'");
}

inline json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["c"] = c;
  j["potential"] = {{"s", potential.s}, {"M", potential.M}, {"K", potential.K},
                    {"seed", potential_seed()}, {"v_unit", potential.v_unit}};
  json taylor = json::array();
  for (const auto& [m, f] : nonlinearity.taylor) taylor.push_back({m, f});
  j["nonlinearity"] = {{"taylor", taylor}, {"R0", nonlinearity.R0}, {"M", nonlinearity.M}};
  j["norms"] = {{"rho", norms.rho}, {"N", norms.N}};
  j["nonres"] = {{"gamma", nonres.gamma}, {"tau", tau()}, {"r", nonres.r},
                 {"N", nonres.N}, {"K", nonres.K}, {"n", nonres.n},
                 {"samples", nonres.samples}, {"gammas", nonres.gammas}};
  j["normal_form"] = {{"r", normal_form.r},
                      {"N", normal_form.N},
                      {"K", normal_form.K},
                      {"momentum_projection", to_string(normal_form.momentum_projection)},
                      {"gamma_floor", normal_form.gamma_floor},
                      {"epsilons", normal_form.epsilons},
                      {"probe_samples", normal_form.probe_samples}};
  j["sim"] = {{"dt", sim.dt},
              {"T", sim.T},
              {"R", sim.R},
              {"record_stride", sim.record_stride},
              {"scheme", sim.scheme == Scheme::strang ? "strang" : "yoshida4"},
              {"backend", sim.backend}};
  j["output"] = {{"dir", output.dir}, {"formats", output.formats}};
  return j;
}

/// Sorted keys, no whitespace, shortest round-trip numbers.
inline std::string canonical_dump(const json& j) { return j.dump(); }

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string cache_key(const json& section) { return hex64(fnv1a64(canonical_dump(section))); }

/// The resolved fields each artifact depends on.
inline json artifact_inputs(const RunConfig& cfg, const std::string& subcommand) {
  const json j = cfg.to_json();
  json s;
  s["artifact"] = subcommand;
  if (subcommand == "frequencies") {
    s["c"] = j["c"];
    s["potential"] = j["potential"];
  } else if (subcommand == "expand" || subcommand == "normal-form") {
    s["c"] = j["c"];
    s["potential"] = j["potential"];
    s["nonlinearity"] = j["nonlinearity"];
    s["normal_form"] = j["normal_form"];
    if (subcommand == "normal-form") s["nonres_tau"] = j["nonres"]["tau"];
  } else if (subcommand == "scan" || subcommand == "divisor-atlas") {
    s["c"] = j["c"];
    s["potential"] = j["potential"];
    s["nonres"] = j["nonres"];
  } else if (subcommand == "simulate") {
    s["c"] = j["c"];
    s["potential"] = j["potential"];
    s["nonlinearity"] = j["nonlinearity"];
    s["norms"] = j["norms"];
    s["sim"] = j["sim"];
    s["seed"] = j["seed"];
    if (cfg.sim.backend == "polynomial") s["normal_form"] = j["normal_form"];
  } else {
    s = j;
    s.erase("output");
    s["artifact"] = subcommand;
  }
  return s;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace nlkg
