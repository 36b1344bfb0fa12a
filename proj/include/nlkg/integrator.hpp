#pragma once

// Split-step evolution of the truncated system
//   xi_k' = -i (omega_k xi_k + dN/deta_k),  eta_k' = i (omega_k eta_k + dN/dxi_k)
// and the stability experiments built on it.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlkg/nonlinearity.hpp"
#include "nlkg/normal_form.hpp"
#include "nlkg/poly_algebra.hpp"
#include "nlkg/rng.hpp"
#include "nlkg/spectral_basis.hpp"
#include "nlkg/state_space.hpp"

namespace nlkg {

/// Raised when a step produces non-finite values; carries the last good state.
class StepCollapse : public NumericalError {
 public:
  StepCollapse(const std::string& what, State last, double t)
      : NumericalError(what), last_good(std::move(last)), time(t) {}
  State last_good;
  double time;
};

/// Evaluates the nonlinear part: its flow over a time dt and its value.
class KickBackend {
 public:
  virtual ~KickBackend() = default;
  virtual void kick(State& z, double dt) const = 0;
  virtual cplx energy(const State& z) const = 0;
  /// X_N(z) in State layout.
  virtual State field(const State& z) const = 0;
  virtual std::string name() const = 0;
};

/// N == 0.
class LinearBackend final : public KickBackend {
 public:
  void kick(State&, double) const override {}
  cplx energy(const State&) const override { return 0.0; }
  State field(const State& z) const override { return State(z.size()); }
  std::string name() const override { return "linear"; }
};

/// Sine-collocation evaluation of f. N depends on xi + eta only, which the
/// kick leaves fixed, so the kick is the exact update
///   xi_k -= i dt g_k, eta_k += i dt g_k,  g_k = m_k / sqrt 2 int f(u) phi_k.
class SpectralBackend final : public KickBackend {
 public:
  SpectralBackend(NonlinearitySpec spec, const FrequencyTable& freq)
      : spec_(std::move(spec)),
        mult_(freq.multipliers().begin(), freq.multipliers().end()) {
    spec_.validate();
    if (!spec_.odd())
      throw ValidationError("the spectral backend requires an odd nonlinearity; "
                            "use the polynomial backend for even powers");
    const int K = static_cast<int>(mult_.size());
    const int deg = std::max(spec_.max_degree(), 2);
    M_ = std::max(4 * K, (deg * K) / 2 + 2);
    buf_ = fftw_alloc_real(static_cast<std::size_t>(M_ - 1));
    out_ = fftw_alloc_real(static_cast<std::size_t>(M_ - 1));
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan_ = fftw_plan_r2r_1d(M_ - 1, buf_, out_, FFTW_RODFT00, FFTW_ESTIMATE);
  }
  ~SpectralBackend() override {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
    fftw_free(out_);
  }
  SpectralBackend(const SpectralBackend&) = delete;
  SpectralBackend& operator=(const SpectralBackend&) = delete;

  int grid_size() const { return M_; }

  /// u at x_n = n pi / M, n = 1..M-1.
  std::vector<cplx> field_values(const State& z) const {
    const std::size_t K = mult_.size();
    const double scale = std::sqrt(0.5) * 0.5 / std::sqrt(std::numbers::pi);
    std::vector<cplx> u(static_cast<std::size_t>(M_ - 1));
    std::vector<cplx> a(K);
    for (std::size_t i = 0; i < K; ++i) a[i] = mult_[i] * (z.xi()[i] + z.eta()[i]) * scale;
    transform(a, u);
    return u;
  }

  State field(const State& z) const override {
    const std::vector<cplx> g = forcing(z);
    State f(z.size());
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      f.xi()[i] = -I * g[i];
      f.eta()[i] = I * g[i];
    }
    return f;
  }

  void kick(State& z, double dt) const override {
    const std::vector<cplx> g = forcing(z);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      z.xi()[i] -= I * dt * g[i];
      z.eta()[i] += I * dt * g[i];
    }
  }

  cplx energy(const State& z) const override {
    const auto u = field_values(z);
    cplx s = 0.0;
    for (const cplx& x : u) s += spec_.F(x);
    return s * (std::numbers::pi / M_);
  }

  std::string name() const override { return "spectral"; }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  // out_n = 2 sum_k in_k sin(pi k n / M) for complex data, both 1-based.
  void transform(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    const std::size_t L = static_cast<std::size_t>(M_ - 1);
    out.assign(L, 0.0);
    for (int part = 0; part < 2; ++part) {
      std::fill(buf_, buf_ + L, 0.0);
      for (std::size_t i = 0; i < std::min(in.size(), L); ++i)
        buf_[i] = part == 0 ? in[i].real() : in[i].imag();
      fftw_execute(plan_);
      for (std::size_t i = 0; i < L; ++i)
        out[i] += part == 0 ? cplx(out_[i], 0.0) : cplx(0.0, out_[i]);
    }
  }

  std::vector<cplx> forcing(const State& z) const {
    const auto u = field_values(z);
    std::vector<cplx> fu(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) fu[n] = spec_.f(u[n]);
    std::vector<cplx> s;
    transform(fu, s);  // s_k = 2 sum_n f(u_n) sin(k x_n)
    const std::size_t K = mult_.size();
    const double w = std::numbers::pi / M_ / std::sqrt(std::numbers::pi) * std::sqrt(0.5) * 0.5;
    std::vector<cplx> g(K);
    for (std::size_t i = 0; i < K; ++i) g[i] = mult_[i] * w * s[i];
    return g;
  }

  NonlinearitySpec spec_;
  std::vector<double> mult_;
  int M_ = 0;
  double* buf_ = nullptr;
  double* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

/// Flow of the expanded polynomial N, by the implicit midpoint rule solved
/// with fixed-point iteration.
class PolynomialBackend final : public KickBackend {
 public:
  explicit PolynomialBackend(Polynomial N, double tol = 1e-15, int max_iter = 200)
      : N_(std::move(N)), tol_(tol), max_iter_(max_iter) {}

  void kick(State& z, double dt) const override {
    if (N_.empty()) return;
    State z1 = z;
    z1 += State(vector_field(N_, z)) *= cplx(dt);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter_; ++it) {
      State mid = z;
      mid += z1;
      mid *= 0.5;
      State next = z;
      next += State(vector_field(N_, mid)) *= cplx(dt);
      double diff = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        diff = std::max({diff, std::abs(next.xi()[i] - z1.xi()[i]),
                         std::abs(next.eta()[i] - z1.eta()[i])});
        scale = std::max({scale, std::abs(next.xi()[i]), std::abs(next.eta()[i])});
      }
      z1 = std::move(next);
      // stagnation at rounding level also counts as converged
      if (diff <= tol_ * scale || (diff >= prev && diff <= 1e-10 * scale)) {
        z = std::move(z1);
        return;
      }
      prev = diff;
    }
    throw NumericalError("implicit midpoint kick did not converge");
  }

  cplx energy(const State& z) const override { return evaluate(N_, z); }
  State field(const State& z) const override { return vector_field(N_, z); }
  std::string name() const override { return "polynomial"; }
  const Polynomial& polynomial() const { return N_; }

 private:
  Polynomial N_;
  double tol_;
  int max_iter_;
};

enum class Scheme { strang, yoshida4 };

inline Scheme parse_scheme(const std::string& s) {
  if (s == "strang") return Scheme::strang;
  if (s == "yoshida4") return Scheme::yoshida4;
  throw ValidationError("sim.scheme must be 'strang' or 'yoshida4'");
}

/// xi_k -> e^{-i omega_k t} xi_k, eta_k -> e^{i omega_k t} eta_k.
inline void rotate(State& z, const FrequencyTable& freq, double t) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const cplx ph = std::polar(1.0, -freq.omegas()[i] * t);
    z.xi()[i] *= ph;
    z.eta()[i] *= std::conj(ph);
  }
}

namespace detail {
inline void strang(State& z, double dt, const FrequencyTable& freq, const KickBackend& nl) {
  nl.kick(z, 0.5 * dt);
  rotate(z, freq, dt);
  nl.kick(z, 0.5 * dt);
}
}  // namespace detail

/// One step of size dt (negative dt runs backwards).
inline State step(const State& z, double dt, const FrequencyTable& freq,
                  const KickBackend& nl, Scheme scheme = Scheme::strang) {
  if (z.size() != freq.size()) throw ValidationError("state and frequency table lengths differ");
  State y = z;
  if (scheme == Scheme::strang) {
    detail::strang(y, dt, freq, nl);
  } else {
    const double cr = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - cr), w0 = -cr / (2.0 - cr);
    detail::strang(y, w1 * dt, freq, nl);
    detail::strang(y, w0 * dt, freq, nl);
    detail::strang(y, w1 * dt, freq, nl);
  }
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(std::abs(y.xi()[i])) || !std::isfinite(std::abs(y.eta()[i])))
      throw StepCollapse("non-finite state after step", z, 0.0);
  return y;
}

/// H0 + N.
inline cplx hamiltonian(const State& z, const FrequencyTable& freq, const KickBackend& nl) {
  cplx h = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) h += freq.omegas()[i] * z.xi()[i] * z.eta()[i];
  return h + nl.energy(z);
}

struct SimConfig {
  int K = 16;
  double dt = 0.01;
  double T = 1000.0;
  double rho = 0.5;
  int N = 12;  // tail cutoff
  double R = 1e-2;
  std::uint64_t seed = 1;
  int record_stride = 100;
  /// Initial data live on modes below this (defaults to N).
  int support = 0;
  Scheme scheme = Scheme::strang;

  void validate(const FrequencyTable& freq) const {
    if (K < 1) throw ValidationError("sim.K must be >= 1");
    if (static_cast<std::size_t>(K) != freq.size())
      throw ValidationError("sim.K must equal the frequency table size");
    if (!(dt > 0.0)) throw ValidationError("sim.dt must be positive");
    if (!(T > 0.0)) throw ValidationError("sim.T must be positive");
    if (!(rho > 0.0)) throw ValidationError("norms.rho must be positive");
    if (N < 1 || N > K) throw ValidationError("norms.N must lie in [1, K]");
    if (!(R >= 0.0)) throw ValidationError("sim.R must be >= 0");
    if (record_stride < 1) throw ValidationError("sim.record_stride must be >= 1");
  }

  int support_modes() const { return support > 0 ? support : N; }

  /// dt max omega > 0.5 leaves the splitting under-resolved.
  bool coarse(const FrequencyTable& freq) const {
    double w = 0.0;
    for (double o : freq.omegas()) w = std::max(w, o);
    return dt * w > 0.5;
  }
};

/// Real initial data xi_k = A e^{-2 rho k} e^{i theta_k} on modes k < support,
/// scaled so that ||z||_rho = R.
inline State initial_state(const SimConfig& cfg) {
  const int support = std::min(cfg.support_modes(), cfg.K + 1);
  std::vector<cplx> xi(static_cast<std::size_t>(cfg.K));
  CounterRng rng(cfg.seed, streams::initial_data);
  for (int k = 1; k < support; ++k)
    xi[static_cast<std::size_t>(k - 1)] =
        std::polar(std::exp(-2.0 * cfg.rho * k), 2.0 * std::numbers::pi * rng.uniform());
  State z = State::real(std::move(xi));
  const double n = analytic_norm(z, cfg.rho);
  if (n > 0.0) z *= cplx(cfg.R / n);
  return z;
}

struct Diagnostics {
  std::vector<double> t;
  std::vector<double> norm_rho;
  std::vector<double> tail_norm;
  std::vector<double> action_dist;
  std::vector<double> hamiltonian;
  std::vector<double> reality_defect;
  State final_state;
  std::size_t steps = 0;

  std::size_t size() const { return t.size(); }

  double sup_action_distance() const {
    return action_dist.empty() ? 0.0 : *std::max_element(action_dist.begin(), action_dist.end());
  }
  double sup_tail() const {
    return tail_norm.empty() ? 0.0 : *std::max_element(tail_norm.begin(), tail_norm.end());
  }
  double sup_norm() const {
    return norm_rho.empty() ? 0.0 : *std::max_element(norm_rho.begin(), norm_rho.end());
  }
  /// max_t |H(t) - H(0)| / |H(0)| (absolute when H(0) = 0).
  double energy_drift() const {
    if (hamiltonian.empty()) return 0.0;
    double d = 0.0;
    for (double h : hamiltonian) d = std::max(d, std::abs(h - hamiltonian.front()));
    const double h0 = std::abs(hamiltonian.front());
    return h0 > 0.0 ? d / h0 : d;
  }

  void write_csv(std::ostream& os) const {
    os << "t,norm_rho,tail_norm,action_dist,hamiltonian,reality_defect\n";
    for (std::size_t i = 0; i < t.size(); ++i)
      os << detail::fmt17(t[i]) << ',' << detail::fmt17(norm_rho[i]) << ','
         << detail::fmt17(tail_norm[i]) << ',' << detail::fmt17(action_dist[i]) << ','
         << detail::fmt17(hamiltonian[i]) << ',' << detail::fmt17(reality_defect[i]) << '\n';
  }
};

/// Evolves z0 to the horizon, recording every record_stride steps and at the
/// final time. `observe` (optional) is called with each recorded state.
inline Diagnostics simulate(const SimConfig& cfg, const FrequencyTable& freq,
                            const KickBackend& nl, const State& z0,
                            const std::function<void(double, const State&)>& observe = {}) {
  cfg.validate(freq);
  if (z0.size() != freq.size()) throw ValidationError("initial state has the wrong truncation");
  const auto nsteps = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
  if (nsteps == 0) throw ValidationError("sim.T shorter than one step");
  const double dt = cfg.T / static_cast<double>(nsteps);
  Diagnostics d;
  auto record = [&](double t, const State& z) {
    d.t.push_back(t);
    d.norm_rho.push_back(analytic_norm(z, cfg.rho));
    d.tail_norm.push_back(tail_norm(z, cfg.rho, cfg.N));
    d.action_dist.push_back(action_distance(z, z0, cfg.rho));
    d.hamiltonian.push_back(hamiltonian(z, freq, nl).real());
    d.reality_defect.push_back(reality_defect(z));
    if (observe) observe(t, z);
  };
  State z = z0;
  record(0.0, z);
  for (std::size_t n = 1; n <= nsteps; ++n) {
    try {
      z = step(z, dt, freq, nl, cfg.scheme);
    } catch (const StepCollapse& e) {
      throw StepCollapse(e.what(), e.last_good, dt * static_cast<double>(n - 1));
    }
    if (n % static_cast<std::size_t>(cfg.record_stride) == 0 || n == nsteps)
      record(dt * static_cast<double>(n), z);
  }
  d.final_state = std::move(z);
  d.steps = nsteps;
  return d;
}

inline Diagnostics simulate(const SimConfig& cfg, const FrequencyTable& freq,
                            const KickBackend& nl) {
  return simulate(cfg, freq, nl, initial_state(cfg));
}

struct ScalingReport {
  std::vector<double> R;
  std::vector<double> sup_action_distance;
  double fitted_slope = 0.0;
  bool exact_invariance = false;
  bool pass = false;
  double threshold = 1.5;
};

/// sup_t action_distance against R over a ladder; PASS iff the log-log slope
/// is at least the threshold, or the distances are at round-off level.
inline ScalingReport scaling_experiment(const std::vector<double>& ladder, SimConfig cfg,
                                        const FrequencyTable& freq, const KickBackend& nl,
                                        double threshold = 1.5) {
  if (ladder.size() < 3) throw ValidationError("scaling ladder needs >= 3 amplitudes");
  const auto [lo, hi] = std::minmax_element(ladder.begin(), ladder.end());
  if (!(*lo > 0.0) || *hi / *lo < 10.0 * (1.0 - 1e-12))
    throw ValidationError("scaling ladder must be positive and span one decade");
  ScalingReport rep;
  rep.threshold = threshold;
  rep.R = ladder;
  for (double R : ladder) {
    cfg.R = R;
    rep.sup_action_distance.push_back(simulate(cfg, freq, nl).sup_action_distance());
  }
  const double smax = *std::max_element(rep.sup_action_distance.begin(),
                                        rep.sup_action_distance.end());
  // Round-off-level distances mean the actions are invariant (e.g. N == 0).
  if (smax <= 1e-13 * *hi) {
    rep.exact_invariance = true;
    rep.pass = true;
    rep.fitted_slope = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.fitted_slope = loglog_slope(rep.R, rep.sup_action_distance);
  rep.pass = rep.fitted_slope >= threshold;
  return rep;
}

struct TailReport {
  int N = 0;
  double R = 0.0;
  double rho = 0.0;
  double sup_tail = 0.0;
  double ratio = 0.0;  // sup_tail / (R e^{-N rho})
  std::optional<double> transformed_ratio;  // same for y = Phi^1_chi(z)
  double horizon = 0.0;
};

/// sup_t R^N_rho(z(t)) / (R e^{-N rho}) for each requested cutoff, from one
/// trajectory. Initial data are supported below cfg.N.
inline std::vector<TailReport> tail_experiment(const SimConfig& cfg, const FrequencyTable& freq,
                                               const KickBackend& nl,
                                               const std::vector<int>& cutoffs,
                                               const Polynomial* chi = nullptr,
                                               const LieFlowOptions& lie = {}) {
  cfg.validate(freq);
  for (int N : cutoffs)
    if (N < 1 || N > cfg.K) throw ValidationError("tail cutoff outside [1, K]");
  SimConfig c = cfg;
  c.support = cfg.N;
  const State z0 = initial_state(c);
  std::vector<double> sup(cutoffs.size(), 0.0), sup_y(cutoffs.size(), 0.0);
  auto observe = [&](double, const State& z) {
    for (std::size_t i = 0; i < cutoffs.size(); ++i)
      sup[i] = std::max(sup[i], tail_norm(z, cfg.rho, cutoffs[i]));
    if (chi) {
      const State y = lie_flow(*chi, z, 1.0, lie);
      for (std::size_t i = 0; i < cutoffs.size(); ++i)
        sup_y[i] = std::max(sup_y[i], tail_norm(y, cfg.rho, cutoffs[i]));
    }
  };
  simulate(c, freq, nl, z0, observe);
  std::vector<TailReport> out;
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    TailReport r;
    r.N = cutoffs[i];
    r.R = cfg.R;
    r.rho = cfg.rho;
    r.horizon = cfg.T;
    r.sup_tail = sup[i];
    const double scale = cfg.R * std::exp(-cutoffs[i] * cfg.rho);
    r.ratio = scale > 0.0 ? sup[i] / scale : 0.0;
    if (chi) r.transformed_ratio = scale > 0.0 ? sup_y[i] / scale : 0.0;
    out.push_back(r);
  }
  return out;
}

/// Stability horizon e^{sigma |log R|^{1+beta}} (positive exponent).
inline double stability_horizon(double R, double sigma, double beta) {
  if (!(R > 0.0 && R < 1.0)) throw ValidationError("R must lie in (0, 1)");
  return std::exp(sigma * std::pow(std::abs(std::log(R)), 1.0 + beta));
}

}  // namespace nlkg
