// Command-line front end.
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 acceptance
// failure. NLKG_OUTPUT_DIR overrides output.dir from the config; --out
// overrides both.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "nlkg/acceptance.hpp"
#include "nlkg/config.hpp"
#include "nlkg/integrator.hpp"
#include "nlkg/nonlinearity.hpp"
#include "nlkg/normal_form.hpp"
#include "nlkg/resonance_scan.hpp"

namespace fs = std::filesystem;
using namespace nlkg;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAcceptance = 3;

/// Output directory for one subcommand. Files are written into a staging
/// directory that replaces the final one only on success.
class Artifacts {
 public:
  Artifacts(const RunConfig& cfg, const fs::path& root, const std::string& sub)
      : final_(root / sub),
        staging_(root / ("." + sub + ".partial")),
        hash_(cache_key(artifact_inputs(cfg, sub))) {
    fs::remove_all(staging_);
    fs::create_directories(staging_);
    json resolved = cfg.to_json();
    resolved["output"]["dir"] = root.string();
    write_json("config.resolved.json", resolved);
  }
  Artifacts(const Artifacts&) = delete;
  Artifacts& operator=(const Artifacts&) = delete;
  ~Artifacts() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(staging_ / name);
    if (!f) throw ValidationError("cannot write " + (staging_ / name).string());
    return f;
  }

  void write_json(const std::string& name, json j) {
    j["config_hash"] = hash_;
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

  std::string csv_header() const { return "# config_hash=" + hash_ + "\n"; }
  const std::string& hash() const { return hash_; }
  const fs::path& final_path() const { return final_; }

  void commit() {
    fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  std::string hash_;
  bool committed_ = false;
};

std::vector<Polynomial> expansion(const RunConfig& cfg, const FrequencyTable& f, int degree,
                                  const fs::path& root, bool* cache_hit = nullptr) {
  json key_inputs = artifact_inputs(cfg, "expand");
  key_inputs["degree"] = degree;
  const fs::path dir = root / "cache" / cache_key(key_inputs);
  if (fs::exists(dir / "complete")) {
    std::vector<Polynomial> Np(static_cast<std::size_t>(degree + 1));
    for (int d = 2; d <= degree; ++d) {
      std::ifstream in(dir / ("N_" + std::to_string(d) + ".poly"));
      if (in) Np[static_cast<std::size_t>(d)] = read_polynomial(in);
    }
    if (cache_hit) *cache_hit = true;
    return Np;
  }
  auto Np = expand_nonlinearity(cfg.nonlinearity, f, degree, cfg.normal_form.momentum_projection);
  const fs::path tmp = dir.string() + ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  for (int d = 2; d <= degree; ++d) {
    std::ofstream out(tmp / ("N_" + std::to_string(d) + ".poly"));
    write_polynomial(out, Np[static_cast<std::size_t>(d)],
                     "N_" + std::to_string(d) + " config_hash=" + cache_key(key_inputs));
  }
  std::ofstream(tmp / "complete") << cache_key(key_inputs) << '\n';
  fs::remove_all(dir);
  fs::rename(tmp, dir);
  if (cache_hit) *cache_hit = false;
  return Np;
}

int cmd_frequencies(const RunConfig& cfg, const fs::path& root) {
  Artifacts a(cfg, root, "frequencies");
  const auto f = cfg.frequencies();
  auto out = a.open("frequencies.csv");
  out << a.csv_header();
  f.write_csv(out);
  out.close();
  a.commit();
  std::cout << "wrote " << (a.final_path() / "frequencies.csv").string() << '\n';
  return 0;
}

int cmd_expand(const RunConfig& cfg, const fs::path& root) {
  Artifacts a(cfg, root, "expand");
  const auto f = cfg.frequencies(cfg.normal_form.K);
  const int degree = cfg.normal_form.r;
  bool hit = false;
  const auto Np = expansion(cfg, f, degree, root, &hit);
  json degrees = json::array();
  for (int d = 2; d <= degree; ++d) {
    const auto& P = Np[static_cast<std::size_t>(d)];
    auto out = a.open("N_" + std::to_string(d) + ".poly");
    write_polynomial(out, P, "N_" + std::to_string(d) + " config_hash=" + a.hash());
    const auto rep = momentum_support_report(P);
    json by = json::object();
    for (const auto& [m, mass] : rep.mass_by_momentum)
      by[std::to_string(m)] = {{"mass", mass}, {"terms", rep.terms_by_momentum.at(m)}};
    degrees.push_back({{"degree", d},
                       {"terms", P.size()},
                       {"norm", poly_norm(P)},
                       {"zero_momentum_mass", rep.zero_mass},
                       {"nonzero_momentum_mass", rep.nonzero_mass},
                       {"by_momentum", by}});
  }
  a.write_json("momentum_report.json",
               {{"K", cfg.normal_form.K},
                {"projection", to_string(cfg.normal_form.momentum_projection)},
                {"degrees", degrees}});
  a.commit();
  std::cout << (hit ? "cache hit; " : "") << "wrote " << a.final_path().string() << '\n';
  return 0;
}

int cmd_scan(const RunConfig& cfg, const fs::path& root) {
  Artifacts a(cfg, root, "scan");
  MeasureScanConfig mc;
  mc.n = cfg.nonres.n;
  mc.s = cfg.potential.s;
  mc.M = cfg.potential.M;
  mc.K = cfg.nonres.K;
  mc.samples = cfg.nonres.samples;
  mc.seed = cfg.seed;
  const auto params = cfg.nonres_params();
  auto gammas = cfg.nonres.gammas;
  if (gammas.empty()) gammas.push_back(cfg.nonres.gamma);
  const auto rows = measure_scan(mc, params, gammas);
  auto out = a.open("scan.jsonl");
  for (const auto& r : rows) {
    json j = {{"gamma", r.gamma},     {"n", mc.n},         {"samples", r.samples},
              {"violations", r.violations}, {"fraction", r.fraction}, {"ci95", r.ci95},
              {"config_hash", a.hash()}};
    out << j.dump() << '\n';
  }
  out.close();

  const auto f = cfg.frequencies(cfg.nonres.K);
  const auto md = min_scaled_divisor(params, f, cfg.nonres.K);
  json summary = {{"r", params.r},
                  {"N", params.N},
                  {"K", cfg.nonres.K},
                  {"tau", params.tau},
                  {"gamma", params.gamma},
                  {"checked_indices", md.checked},
                  {"vacuous", md.vacuous()}};
  if (md.value) {
    summary["min_scaled_divisor"] = *md.value;
    summary["argmin"] = md.argmin.to_string();
    summary["argmin_divisor"] = md.argmin_divisor;
    summary["condition_holds"] = md.satisfies(params.gamma);
  }
  a.write_json("scan_summary.json", summary);
  a.commit();
  std::cout << "wrote " << a.final_path().string() << '\n';
  return 0;
}

int cmd_atlas(const RunConfig& cfg, const fs::path& root, std::size_t rows) {
  Artifacts a(cfg, root, "divisor-atlas");
  const auto f = cfg.frequencies(cfg.nonres.K);
  const auto atlas = divisor_atlas(cfg.nonres_params(), f, cfg.nonres.K, rows);
  auto out = a.open("atlas.csv");
  out << a.csv_header() << "index,omega,mu,scaled\n";
  for (const auto& r : atlas)
    out << r.index.to_string() << ',' << detail::fmt17(r.omega) << ',' << r.mu << ','
        << detail::fmt17(r.scaled) << '\n';
  out.close();
  a.commit();
  std::cout << "wrote " << (a.final_path() / "atlas.csv").string() << '\n';
  return 0;
}

int cmd_normal_form(const RunConfig& cfg, const fs::path& root) {
  Artifacts a(cfg, root, "normal-form");
  const int K = cfg.normal_form.K;
  const auto f = cfg.frequencies(K);
  NormalFormOptions opt;
  opt.r = cfg.normal_form.r;
  opt.N = cfg.normal_form.N;
  opt.gamma_floor = cfg.normal_form.gamma_floor;
  opt.tau = cfg.tau();
  const auto Np = expansion(cfg, f, opt.r, root);
  const auto res = recursive_construct(Np, f, opt);
  json degrees = json::array();
  for (const auto& d : res.diagnostics) {
    const auto m = std::to_string(d.degree);
    auto oc = a.open("chi_" + m + ".poly");
    write_polynomial(oc, res.chi[static_cast<std::size_t>(d.degree)], "chi_" + m + " config_hash=" + a.hash());
    auto oz = a.open("Z_" + m + ".poly");
    write_polynomial(oz, res.zed[static_cast<std::size_t>(d.degree)], "Z_" + m + " config_hash=" + a.hash());
    json row = {{"degree", d.degree},       {"q_norm", d.q_norm},   {"chi_norm", d.chi_norm},
                {"z_norm", d.zed_norm},     {"q_terms", d.q_terms}, {"bound_ratio", d.bound_ratio}};
    if (std::isfinite(d.min_divisor)) row["min_divisor"] = d.min_divisor;
    degrees.push_back(row);
  }

  // remainder probe on the configured epsilon ladder
  Polynomial N;
  for (const auto& p : Np) N += p;
  const auto chi = res.chi_total(), Z = res.zed_total();
  json probe = json::array();
  std::vector<double> eps, defects;
  for (double e : cfg.normal_form.epsilons) {
    CounterRng rng(cfg.seed, streams::initial_data, 7);
    std::vector<State> samples;
    for (int s = 0; s < cfg.normal_form.probe_samples; ++s)
      samples.push_back(testing::random_state(rng, static_cast<std::size_t>(K), cfg.norms.rho, e));
    const double d = remainder_probe(f, N, chi, Z, samples);
    eps.push_back(e);
    defects.push_back(d);
    probe.push_back({{"epsilon", e}, {"defect", d}});
  }
  json summary = {{"r", opt.r},
                  {"N", opt.N},
                  {"K", K},
                  {"degrees", degrees},
                  {"fitted_growth_constant", res.fitted_growth_constant},
                  {"remainder_probe", probe}};
  if (eps.size() >= 2) summary["remainder_slope"] = loglog_slope(eps, defects);
  a.write_json("diagnostics.json", summary);
  a.commit();
  std::cout << "wrote " << a.final_path().string() << '\n';
  return 0;
}

std::unique_ptr<KickBackend> make_backend(const RunConfig& cfg, const FrequencyTable& f,
                                          const fs::path& root) {
  bool any = false;
  for (const auto& [m, c] : cfg.nonlinearity.taylor) any = any || c != 0.0;
  if (!any) return std::make_unique<LinearBackend>();
  if (cfg.sim.backend == "spectral") return std::make_unique<SpectralBackend>(cfg.nonlinearity, f);
  if (cfg.normal_form.K != cfg.potential.K)
    throw ValidationError("sim.backend 'polynomial' needs normal_form.K == potential.K");
  const auto Np = expansion(cfg, f, cfg.nonlinearity.max_degree(), root);
  Polynomial N;
  for (const auto& p : Np) N += p;
  return std::make_unique<PolynomialBackend>(std::move(N));
}

int cmd_simulate(const RunConfig& cfg, const fs::path& root, const std::string& experiment) {
  Artifacts a(cfg, root, "simulate");
  const auto f = cfg.frequencies();
  const auto nl = make_backend(cfg, f, root);
  const SimConfig sc = cfg.sim_config();
  if (sc.coarse(f))
    std::cerr << "warning: dt * max omega exceeds 0.5; the splitting is under-resolved\n";
  json params = {{"K", sc.K},   {"dt", sc.dt},         {"T", sc.T},
                 {"rho", sc.rho}, {"N", sc.N},         {"R", sc.R},
                 {"backend", nl->name()}, {"c", cfg.c}};
  if (experiment == "run") {
    const auto d = simulate(sc, f, *nl);
    auto out = a.open("diagnostics.csv");
    out << a.csv_header();
    d.write_csv(out);
    out.close();
    double reality = 0.0;
    for (double r : d.reality_defect) reality = std::max(reality, r);
    a.write_json("summary.json", {{"experiment", "simulate"},
                                  {"params", params},
                                  {"energy_drift", d.energy_drift()},
                                  {"sup_norm_rho", d.sup_norm()},
                                  {"sup_tail", d.sup_tail()},
                                  {"sup_action_distance", d.sup_action_distance()},
                                  {"max_reality_defect", reality},
                                  {"steps", d.steps}});
    auto st = a.open("final_state.txt");
    write_state(st, d.final_state, cfg.c, sc.rho);
  } else if (experiment == "scaling") {
    const std::vector<double> ladder{sc.R, sc.R * 0.3, sc.R * 0.1};
    const auto rep = scaling_experiment(ladder, sc, f, *nl);
    json s = {{"experiment", "scaling"},
              {"params", params},
              {"R", rep.R},
              {"sup_action_distance", rep.sup_action_distance},
              {"exact_invariance", rep.exact_invariance},
              {"threshold", rep.threshold},
              {"pass", rep.pass}};
    s["fitted_slope"] = rep.exact_invariance ? json(nullptr) : json(rep.fitted_slope);
    a.write_json("summary.json", s);
  } else if (experiment == "tail") {
    std::vector<int> cutoffs{sc.N};
    if (sc.N + 4 <= sc.K) cutoffs.push_back(sc.N + 4);
    const auto rep = tail_experiment(sc, f, *nl, cutoffs);
    json rows = json::array();
    for (const auto& r : rep)
      rows.push_back({{"N", r.N}, {"sup_tail", r.sup_tail}, {"ratio", r.ratio}});
    json s = {{"experiment", "tail"}, {"params", params}, {"cutoffs", rows}};
    bool pass = rep[0].ratio <= 4.0;
    if (rep.size() == 2 && rep[0].sup_tail > 0.0) {
      const double factor = rep[1].sup_tail / rep[0].sup_tail / std::exp(-4.0 * sc.rho);
      s["reduction_over_expected"] = factor;
      pass = pass && factor >= 0.5 && factor <= 2.0;
    }
    s["pass"] = pass;
    a.write_json("summary.json", s);
  } else {
    throw ValidationError("--experiment must be run, scaling or tail");
  }
  a.commit();
  std::cout << "wrote " << a.final_path().string() << '\n';
  return 0;
}

int cmd_verify_all(const RunConfig& cfg, const fs::path& root) {
  Artifacts a(cfg, root, "verify-all");
  const auto rep = acceptance::run_suite(cfg, [](const acceptance::CriterionResult& r) {
    std::cout << acceptance::format_row(r) << std::endl;
  });
  json timing = json::array();
  for (const auto& r : rep.rows)
    timing.push_back({{"id", r.id}, {"seconds", r.seconds}, {"limit", r.time_limit},
                      {"within_time", r.within_time}});
  a.write_json("acceptance.json", {{"criteria", rep.payload}, {"all_pass", rep.all_ok()}});
  a.write_json("timing.json", {{"criteria", timing}, {"total_seconds", rep.seconds}});
  auto txt = a.open("acceptance.txt");
  for (const auto& r : rep.rows) txt << acceptance::format_row(r) << '\n';
  txt.close();
  a.commit();
  std::cout << (rep.all_ok() ? "ALL PASS" : "FAILURES") << '\n';
  return rep.all_ok() ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normal forms and stability experiments for a truncated nonlinear "
               "Klein-Gordon equation"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  app.add_option("-c,--config", config_path, "JSON run configuration (defaults built in)")
      ->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir,
                 "output directory (overrides NLKG_OUTPUT_DIR and output.dir)");

  auto* freq = app.add_subcommand("frequencies", "write the linear frequency table");
  auto* expand = app.add_subcommand("expand", "expand the nonlinearity into N_d and cache it");
  auto* scan = app.add_subcommand("scan", "Monte-Carlo measure of the small-divisor set");
  auto* atlas = app.add_subcommand("divisor-atlas", "worst scaled divisors as CSV");
  std::size_t atlas_rows = 1000;
  atlas->add_option("--rows", atlas_rows, "number of rows")->check(CLI::PositiveNumber);
  auto* nf = app.add_subcommand("normal-form", "build chi and Z and probe the remainder");
  auto* sim = app.add_subcommand("simulate", "run the split-step integrator");
  std::string experiment = "run";
  sim->add_option("--experiment", experiment, "run, scaling or tail")
      ->check(CLI::IsMember({"run", "scaling", "tail"}));
  auto* verify = app.add_subcommand("verify-all", "run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    cfg.validate();
    fs::path root = cfg.output.dir;
    if (const char* env = std::getenv("NLKG_OUTPUT_DIR"); env && *env) root = env;
    if (!out_dir.empty()) root = out_dir;
    fs::create_directories(root);

    if (*freq) return cmd_frequencies(cfg, root);
    if (*expand) return cmd_expand(cfg, root);
    if (*scan) return cmd_scan(cfg, root);
    if (*atlas) return cmd_atlas(cfg, root, atlas_rows);
    if (*nf) return cmd_normal_form(cfg, root);
    if (*sim) return cmd_simulate(cfg, root, experiment);
    if (*verify) return cmd_verify_all(cfg, root);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}
