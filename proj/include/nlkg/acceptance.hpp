#pragma once

// The acceptance suite shared by `nlkg verify-all` and the nlkg_acceptance
// binary. Each criterion returns a pass flag and a deterministic payload;
// wall-clock times are reported separately so payloads can be compared
// byte for byte.

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlkg/config.hpp"
#include "nlkg/integrator.hpp"
#include "nlkg/nonlinearity.hpp"
#include "nlkg/normal_form.hpp"
#include "nlkg/poly_algebra.hpp"
#include "nlkg/resonance_scan.hpp"
#include "nlkg/testing/oracles.hpp"

namespace nlkg::acceptance {

using nlohmann::json;

struct Outcome {
  bool pass = false;
  json payload;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool within_time = true;
  double seconds = 0.0;
  double time_limit = 0.0;
  json payload;
  std::string error;

  bool ok() const { return pass && within_time && error.empty(); }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;
  std::function<Outcome(const RunConfig&)> run;
};

namespace detail {

inline double rel(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

inline NonlinearitySpec cubic(const RunConfig& cfg) {
  return {{{3, 1.0}}, cfg.nonlinearity.R0, cfg.nonlinearity.M};
}

inline Outcome frequencies(const RunConfig& cfg) {
  Outcome o;
  const int K = 512;
  PotentialSpec flat = PotentialSpec::zero(K, cfg.potential.s, cfg.potential.M);
  PotentialSpec sampled{cfg.potential.s, cfg.potential.M, std::vector<double>(K)};
  CounterRng rng(cfg.potential_seed(), streams::potential);
  for (auto& u : sampled.unit_coeffs) u = rng.uniform() - 0.5;
  double worst = 0.0;
  for (double c : {1.0, 10.0, 1e3, 1e6}) {
    for (const auto* p : {&flat, &sampled}) {
      const auto v = build_potential(*p);
      for (int k = 1; k <= K; ++k) {
        const double vk = v[static_cast<std::size_t>(k - 1)];
        worst = std::max(worst, rel(frequency_direct(k, c, vk), frequency_stable(k, c, vk)));
      }
    }
  }
  o.payload = {{"max_relative_difference", worst}, {"tolerance", 1e-12}, {"modes", K}};
  o.pass = worst <= 1e-12;
  return o;
}

inline Outcome poisson_laws(const RunConfig& cfg) {
  Outcome o;
  CounterRng rng(cfg.seed, streams::tests, 2);
  const int pairs = 200, K = 6;
  double antisym = 0.0, jacobi = 0.0, norm_ratio = 0.0;
  int closure_fail = 0, degree_fail = 0;
  for (int i = 0; i < pairs; ++i) {
    const int k = 2 + static_cast<int>(rng.uniform() * 4);
    const int l = 2 + static_cast<int>(rng.uniform() * 4);
    const int m = 2 + static_cast<int>(rng.uniform() * 4);
    const bool zm = i % 2 == 0;
    const auto P = testing::random_homogeneous(rng, k, 1 + static_cast<int>(rng.uniform() * 30), K, zm);
    const auto Q = testing::random_homogeneous(rng, l, 1 + static_cast<int>(rng.uniform() * 30), K, zm);
    const auto R = testing::random_homogeneous(rng, m, 1 + static_cast<int>(rng.uniform() * 30), K, zm);
    const auto PQ = poisson_bracket(P, Q, 0.0);
    const auto QP = poisson_bracket(Q, P, 0.0);
    const double scale = std::max(PQ.max_abs(), 1e-300);
    antisym = std::max(antisym, testing::max_coeff_diff(PQ, -1.0 * QP) / scale);

    const auto a = poisson_bracket(P, poisson_bracket(Q, R, 0.0), 0.0);
    const auto b = poisson_bracket(Q, poisson_bracket(R, P, 0.0), 0.0);
    const auto c = poisson_bracket(R, PQ, 0.0);
    const double js = std::max({a.max_abs(), b.max_abs(), c.max_abs(), 1e-300});
    jacobi = std::max(jacobi, (a + b + c).max_abs() / js);

    if (zm && !PQ.zero_momentum()) ++closure_fail;
    for (const auto& [j, v] : PQ.terms())
      if (static_cast<int>(j.size()) != k + l - 2) {
        ++degree_fail;
        break;
      }
    const double bound = 2.0 * k * l * poly_norm(P) * poly_norm(Q);
    if (bound > 0.0) norm_ratio = std::max(norm_ratio, poly_norm(PQ) / bound);
  }
  o.payload = {{"pairs", pairs},
               {"antisymmetry_rel", antisym},
               {"jacobi_rel", jacobi},
               {"closure_failures", closure_fail},
               {"degree_failures", degree_fail},
               {"max_norm_ratio", norm_ratio}};
  o.pass = antisym <= 1e-12 && jacobi <= 1e-12 && closure_fail == 0 && degree_fail == 0 &&
           norm_ratio <= 1.0;
  return o;
}

inline Outcome vector_field_fd(const RunConfig& cfg) {
  Outcome o;
  CounterRng rng(cfg.seed, streams::tests, 3);
  double worst = 0.0;
  const int K = 6;
  for (int i = 0; i < 50; ++i) {
    const int d = 2 + static_cast<int>(rng.uniform() * 4);
    const auto P = testing::random_homogeneous(rng, d, 1 + static_cast<int>(rng.uniform() * 30), K, i % 2 == 0);
    const State z = testing::random_state(rng, K, 0.5, 2.0, i % 3 != 0);
    const State f = vector_field(P, z);
    const State g = testing::finite_difference_field(P, z, 1e-5);
    const double s = std::max(testing::max_abs(f), 1e-300);
    worst = std::max(worst, testing::max_abs_diff(f, g) / s);
  }
  o.payload = {{"samples", 50}, {"max_relative_error", worst}, {"tolerance", 1e-6}};
  o.pass = worst <= 1e-6;
  return o;
}

inline Outcome basis_integrals(const RunConfig& cfg) {
  Outcome o;
  CounterRng rng(cfg.seed, streams::tests, 4);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int m = 1 + static_cast<int>(rng.uniform() * 6);
    std::vector<int> ks(static_cast<std::size_t>(m));
    for (auto& k : ks) k = 1 + static_cast<int>(rng.uniform() * 32);
    worst = std::max(worst, std::abs(basis_product_integral(ks) -
                                     testing::quadrature_product_integral(ks)));
  }
  const double pi = std::numbers::pi;
  const double cube = basis_product_integral({1, 1, 1}) * std::pow(pi, 1.5);
  const double mixed = basis_product_integral({1, 2, 3}) * std::pow(pi, 1.5);
  o.payload = {{"tuples", 500},
               {"max_abs_error", worst},
               {"sin_cubed", cube},
               {"sin1_sin2_sin3", mixed}};
  o.pass = worst <= 1e-12 && std::abs(cube - 4.0 / 3.0) <= 1e-14 && std::abs(mixed) <= 1e-14;
  return o;
}

inline Outcome nonlinearity_decay(const RunConfig& cfg) {
  Outcome o;
  const int K = 16;
  const FrequencyTable f = cfg.frequencies(K);
  const NonlinearitySpec spec{{{3, 1.0}, {5, 1.0}, {7, 1.0}}, cfg.nonlinearity.R0,
                              cfg.nonlinearity.M};
  const auto Np = expand_nonlinearity(spec, f, 8, MomentumProjection::strict);
  json rows = json::array();
  bool ok = true;
  for (int d = 2; d <= 8; ++d) {
    const double n = poly_norm(Np[static_cast<std::size_t>(d)]);
    const double bound = spec.M * std::pow(spec.R0, -d);
    ok = ok && n <= bound;
    rows.push_back({{"degree", d},
                    {"norm", n},
                    {"bound", bound},
                    {"terms", Np[static_cast<std::size_t>(d)].size()}});
  }
  o.payload = {{"K", K}, {"taylor", "u^3 + u^5 + u^7"}, {"degrees", rows}};
  o.pass = ok;
  return o;
}

inline Outcome homological_residual(const RunConfig& cfg) {
  Outcome o;
  const int K = 12;
  const FrequencyTable f = cfg.frequencies(K);
  NormalFormOptions opt;
  opt.r = 6;
  opt.N = 8;
  opt.gamma_floor = cfg.normal_form.gamma_floor;
  opt.tau = cfg.tau();
  const auto Np = expand_nonlinearity(cfg.nonlinearity, f, opt.r, MomentumProjection::strict);
  const auto res = recursive_construct(Np, f, opt);
  const Polynomial H0 = quadratic_hamiltonian(f);
  json rows = json::array();
  bool ok = true;
  for (int m = 3; m <= opt.r; ++m) {
    const auto& chi = res.chi[static_cast<std::size_t>(m)];
    const auto& Z = res.zed[static_cast<std::size_t>(m)];
    const auto& Q = res.q[static_cast<std::size_t>(m)];
    const Polynomial resid = poisson_bracket(chi, H0, 0.0) - Z + Q;
    const double qn = poly_norm(Q);
    const double rmax = resid.max_abs();
    bool disjoint = true;
    for (const auto& [j, a] : chi.terms())
      if (Z.terms().count(j) || in_normal_support(j, opt.N)) disjoint = false;
    if (!normal_form_predicate(Z, opt.N)) disjoint = false;
    const double zn = poly_norm(Z);
    const bool row_ok = rmax <= 1e-12 * qn && disjoint && zn <= qn;
    ok = ok && row_ok;
    rows.push_back({{"degree", m},
                    {"q_norm", qn},
                    {"z_norm", zn},
                    {"chi_norm", poly_norm(chi)},
                    {"max_residual", rmax},
                    {"supports_disjoint", disjoint},
                    {"terms", Q.size()}});
  }
  o.payload = {{"r", opt.r}, {"N", opt.N}, {"K", K}, {"degrees", rows}};
  o.pass = ok;
  return o;
}

struct Cubic4 {
  FrequencyTable freq;
  Polynomial N;
  Polynomial chi;
  Polynomial Z;
};

inline Cubic4 cubic_normal_form(const RunConfig& cfg) {
  const int K = 12;
  FrequencyTable f = FrequencyTable::flat(K, 1.0);
  const auto Np = expand_nonlinearity(cubic(cfg), f, 4, MomentumProjection::strict);
  NormalFormOptions opt;
  opt.r = 4;
  opt.N = 8;
  opt.gamma_floor = cfg.normal_form.gamma_floor;
  const auto res = recursive_construct(Np, f, opt);
  Polynomial N;
  for (const auto& p : Np) N += p;
  return {std::move(f), std::move(N), res.chi_total(), res.zed_total()};
}

inline Outcome defect_scaling(const RunConfig& cfg) {
  Outcome o;
  const Cubic4 nf = cubic_normal_form(cfg);
  const std::vector<double> eps{1e-2, 3e-3, 1e-3};
  std::vector<double> defect;
  for (double e : eps) {
    CounterRng rng(cfg.seed, streams::tests, 7);
    std::vector<State> samples;
    for (int s = 0; s < 4; ++s) samples.push_back(testing::random_state(rng, 12, 0.5, e));
    defect.push_back(remainder_probe(nf.freq, nf.N, nf.chi, nf.Z, samples));
  }
  const double slope = loglog_slope(eps, defect);
  o.payload = {{"r", 4}, {"epsilons", eps}, {"defects", defect}, {"fitted_slope", slope},
               {"threshold", 4.5}};
  o.pass = slope >= 4.5;
  return o;
}

inline Outcome lie_self_inverse(const RunConfig& cfg) {
  Outcome o;
  const Cubic4 nf = cubic_normal_form(cfg);
  CounterRng rng(cfg.seed, streams::tests, 8);
  double worst = 0.0, worst_disp = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double norm = std::exp(std::log(1e-3) + rng.uniform() * std::log(300.0));
    const State z = testing::random_state(rng, 12, 0.5, norm);
    const State w1 = lie_displacement(nf.chi, z, 1.0);
    State y = z;
    y += w1;
    const State w2 = lie_displacement(nf.chi, y, -1.0);
    State back = y;
    back += w2;
    worst = std::max(worst, testing::max_abs_diff(back, z) / testing::max_abs(z));
    // the displacements alone must cancel as well
    State sum = w1;
    sum += w2;
    worst_disp = std::max(worst_disp, testing::max_abs(sum) / testing::max_abs(w1));
  }
  o.payload = {{"samples", 20},
               {"max_relative_error", worst},
               {"max_displacement_mismatch", worst_disp},
               {"tolerance", 1e-10}};
  o.pass = worst <= 1e-10;
  return o;
}

inline Outcome integrator_checks(const RunConfig& cfg) {
  Outcome o;
  const int K = 16;
  const FrequencyTable f = cfg.frequencies(K);
  const SpectralBackend spectral(cubic(cfg), f);
  const auto Np = expand_nonlinearity(cubic(cfg), f, 4, MomentumProjection::strict);
  const PolynomialBackend poly(Np[4]);

  // reversibility of one step pair
  CounterRng rng(cfg.seed, streams::tests, 9);
  double rev = 0.0;
  for (int i = 0; i < 10; ++i) {
    const State z = testing::random_state(rng, K, 0.5, 0.1);
    for (const KickBackend* nl : {static_cast<const KickBackend*>(&spectral),
                                  static_cast<const KickBackend*>(&poly)}) {
      const State back = step(step(z, 0.01, f, *nl), -0.01, f, *nl);
      rev = std::max(rev, testing::max_abs_diff(back, z) / testing::max_abs(z));
    }
  }

  // energy drift under dt halving
  SimConfig sc;
  sc.K = K;
  sc.T = 50.0;
  sc.R = 0.3;
  sc.N = 12;
  sc.rho = cfg.norms.rho;
  sc.seed = cfg.seed;
  sc.record_stride = 1;
  sc.dt = 0.05;
  const double d1 = simulate(sc, f, spectral).energy_drift();
  sc.dt = 0.025;
  const double d2 = simulate(sc, f, spectral).energy_drift();
  const double ratio = d1 / d2;

  // long run drift at small amplitude
  SimConfig lr = sc;
  lr.dt = 0.01;
  lr.T = 1000.0;
  lr.R = 1e-2;
  lr.record_stride = 10;
  const Diagnostics long_run = simulate(lr, f, spectral);
  const double long_drift = long_run.energy_drift();
  double reality = 0.0;
  for (double r : long_run.reality_defect) reality = std::max(reality, r);

  // linear flow
  const LinearBackend lin;
  SimConfig ls = sc;
  ls.dt = 0.01;
  ls.T = 10.0;
  ls.R = 1.0;
  ls.record_stride = 1000;
  const State z0 = initial_state(ls);
  const Diagnostics d = simulate(ls, f, lin, z0);
  double action_err = 0.0, closed_err = 0.0;
  const double t = d.t.back();
  for (int k = 1; k <= K; ++k) {
    const cplx a = d.final_state.xi(k), b = z0.xi(k);
    if (std::abs(b) > 0.0) {
      action_err = std::max(action_err, std::abs(std::abs(a) - std::abs(b)) / std::abs(b));
      closed_err = std::max(closed_err,
                            std::abs(a - b * std::polar(1.0, -f.omega(k) * t)) / std::abs(b));
    }
  }
  o.payload = {{"reversibility_rel", rev},
               {"drift_dt_0.05", d1},
               {"drift_dt_0.025", d2},
               {"drift_ratio", ratio},
               {"long_run_drift", long_drift},
               {"long_run_reality_defect", reality},
               {"linear_action_rel", action_err},
               {"linear_closed_form_rel", closed_err}};
  o.pass = rev <= 1e-12 && ratio >= 3.0 && ratio <= 5.0 && action_err <= 1e-12 &&
           closed_err <= 1e-10 && long_drift <= 1e-6 && reality <= 1e-10;
  return o;
}

inline Outcome stability_scaling(const RunConfig& cfg) {
  Outcome o;
  const int K = 16;
  RunConfig c1 = cfg;
  c1.c = 1.0;
  const FrequencyTable f = c1.frequencies(K);
  const SpectralBackend nl(cubic(cfg), f);
  SimConfig sc;
  sc.K = K;
  sc.dt = 0.01;
  sc.T = 1000.0;
  sc.N = 12;
  sc.rho = cfg.norms.rho;
  sc.seed = cfg.seed;
  sc.record_stride = 10;
  const auto rep = scaling_experiment({1e-2, 3e-3, 1e-3}, sc, f, nl);
  // smallest non-resonant four-wave divisor of the sampled potential
  NonresParams p{0.0, 0.0, 2, K};
  const auto md = min_scaled_divisor(p, f, K);
  o.payload = {{"R", rep.R},
               {"sup_action_distance", rep.sup_action_distance},
               {"fitted_slope", rep.fitted_slope},
               {"threshold", 1.5},
               {"min_four_wave_divisor", md.value.value_or(0.0)}};
  o.pass = rep.pass;
  return o;
}

inline Outcome tail_control(const RunConfig& cfg) {
  Outcome o;
  const int K = 24;
  RunConfig c1 = cfg;
  c1.c = 1.0;
  const FrequencyTable f = c1.frequencies(K);
  const SpectralBackend nl(cubic(cfg), f);
  SimConfig sc;
  sc.K = K;
  sc.dt = 0.01;
  sc.T = 1000.0;
  sc.N = 12;
  sc.R = 1e-2;
  sc.rho = cfg.norms.rho;
  sc.seed = cfg.seed;
  sc.record_stride = 10;
  const auto rep = tail_experiment(sc, f, nl, {12, 16});
  const double reduction = rep[1].sup_tail / rep[0].sup_tail;
  const double expected = std::exp(-4.0 * sc.rho);
  const double factor = reduction / expected;
  o.payload = {{"ratio_N12", rep[0].ratio},
               {"ratio_N16", rep[1].ratio},
               {"sup_tail_N12", rep[0].sup_tail},
               {"sup_tail_N16", rep[1].sup_tail},
               {"reduction", reduction},
               {"expected_reduction", expected}};
  o.pass = rep[0].ratio <= 4.0 && factor >= 0.5 && factor <= 2.0;
  return o;
}

inline Outcome measure_scaling(const RunConfig& cfg) {
  Outcome o;
  MeasureScanConfig mc;
  mc.n = 1.0;
  mc.s = cfg.potential.s;
  mc.M = cfg.potential.M;
  mc.K = 6;
  mc.samples = 10000;
  mc.seed = cfg.seed;
  NonresParams p{0.01, default_tau(cfg.potential.s), 1, 4};
  const auto rows = measure_scan(mc, p, {0.02, 0.01, 0.005});
  json out = json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    const double q = r.fraction / r.gamma;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
    out.push_back({{"gamma", r.gamma}, {"violations", r.violations}, {"fraction", r.fraction},
                   {"ci95", r.ci95}});
  }
  o.payload = {{"rows", out}, {"max_over_min", lo > 0.0 ? hi / lo : 0.0}};
  o.pass = lo > 0.0 && hi / lo <= 2.0;
  return o;
}

}  // namespace detail

inline std::vector<Criterion> criteria() {
  using namespace detail;
  return {
      {1, "frequency dual-formula agreement", 1.0, frequencies},
      {2, "Poisson algebra laws", 10.0, poisson_laws},
      {3, "vector field vs finite differences", 5.0, vector_field_fd},
      {4, "basis integrals vs quadrature", 10.0, basis_integrals},
      {5, "nonlinearity norm decay", 60.0, nonlinearity_decay},
      {6, "homological residual", 120.0, homological_residual},
      {7, "normal-form defect scaling", 300.0, defect_scaling},
      {8, "Lie flow self-inverse", 60.0, lie_self_inverse},
      {9, "integrator reversibility and drift", 120.0, integrator_checks},
      {10, "stability scaling", 600.0, stability_scaling},
      {11, "tail control", 600.0, tail_control},
      {12, "measure scaling", 300.0, measure_scaling},
  };
}

inline CriterionResult run_one(const Criterion& c, const RunConfig& cfg) {
  CriterionResult r;
  r.id = c.id;
  r.name = c.name;
  r.time_limit = c.time_limit;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Outcome o = c.run(cfg);
    r.pass = o.pass;
    r.payload = std::move(o.payload);
  } catch (const std::exception& e) {
    r.pass = false;
    r.error = e.what();
    r.payload = {{"error", r.error}};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.within_time = r.seconds <= c.time_limit;
  return r;
}

/// Payload of a full pass: everything except timings.
inline json payload(const std::vector<CriterionResult>& rows) {
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"payload", r.payload}});
  return j;
}

struct SuiteReport {
  std::vector<CriterionResult> rows;  // criteria 1..13
  json payload;                       // first pass, timings excluded
  double seconds = 0.0;

  bool all_ok() const {
    for (const auto& r : rows)
      if (!r.ok()) return false;
    return true;
  }
};

using Progress = std::function<void(const CriterionResult&)>;

/// Runs criteria 1..12 twice and compares the payloads (criterion 13).
inline SuiteReport run_suite(const RunConfig& cfg, const Progress& progress = {}) {
  SuiteReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  const auto list = criteria();
  for (const auto& c : list) {
    rep.rows.push_back(run_one(c, cfg));
    if (progress) progress(rep.rows.back());
  }
  rep.payload = payload(rep.rows);

  CriterionResult repro;
  repro.id = 13;
  repro.name = "reproducibility";
  repro.time_limit = 2400.0;
  std::vector<CriterionResult> again;
  for (const auto& c : list) again.push_back(run_one(c, cfg));
  const std::string a = rep.payload.dump(), b = payload(again).dump();
  repro.pass = a == b;
  repro.payload = {{"payload_hash_first", hex64(fnv1a64(a))},
                   {"payload_hash_second", hex64(fnv1a64(b))}};
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  repro.seconds = rep.seconds;
  repro.within_time = rep.seconds <= repro.time_limit;
  rep.rows.push_back(repro);
  if (progress) progress(rep.rows.back());
  return rep;
}

inline std::string format_row(const CriterionResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "[%s] %2d %-40s %8.2fs", r.ok() ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds);
  std::string s = buf;
  if (!r.within_time) s += "  (over time limit)";
  if (!r.error.empty()) s += "  error: " + r.error;
  return s;
}

}  // namespace nlkg::acceptance
