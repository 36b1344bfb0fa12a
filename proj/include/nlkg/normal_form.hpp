#pragma once

// Birkhoff-type normal form by Lie transform.
//
// Orientation. Brackets follow poly_algebra ({F, H} = dF/dt along X_H).
// The Lie transform generated by chi is the flow Phi^t_chi along which
//   d/dt K(Phi^t_chi) = {chi, K}(Phi^t_chi) = ad_chi K,
// i.e. Hamilton's equations for -chi. With this orientation the recursion
//   {chi_m, H0} - Z_m = -Q_m,                                 (homological)
//   Q_m = N_m + sum_{k=3}^{m-1} {chi_k, N_{m+2-k}}
//         - sum_{k=1}^{m-3} B_k/k! sum_{l} ad_{chi_l1}...ad_{chi_lk} (Z - N)_{l_{k+1}}
// gives (H0 + N) o Phi^1_chi = H0 + Z + O(|z|^{r+1}).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "nlkg/bernoulli.hpp"
#include "nlkg/poly_algebra.hpp"
#include "nlkg/spectral_basis.hpp"
#include "nlkg/state_space.hpp"

namespace nlkg {

/// True iff every term is resonant or has mu(j) > N.
inline bool in_normal_support(const MultiIndex& j, int N) {
  if (j.is_resonant()) return true;
  return j.size() >= 3 && j.mu() > N;
}

inline bool normal_form_predicate(const Polynomial& Z, int N) {
  for (const auto& [j, a] : Z.terms())
    if (!in_normal_support(j, N)) return false;
  return true;
}

class DivisorFloorError : public NumericalError {
 public:
  DivisorFloorError(const MultiIndex& j, double omega, double floor)
      : NumericalError("divisor |Omega(" + j.to_string() + ")| = " +
                       std::to_string(std::abs(omega)) +
                       " is below gamma_floor = " + std::to_string(floor)),
        index(j),
        value(omega) {}
  MultiIndex index;
  double value;
};

struct HomologicalSolution {
  Polynomial chi;
  Polynomial zed;
  double min_divisor = std::numeric_limits<double>::infinity();
  MultiIndex argmin;
};

/// Coefficient-wise solution of {chi, H0} - Z = -Q: normal-support terms go
/// to Z verbatim, every other term gives chi_j = Q_j / (i Omega(j)).
inline HomologicalSolution solve_homological(const Polynomial& Q,
                                             const FrequencyTable& freq, int N,
                                             double gamma_floor) {
  if (!(gamma_floor > 0.0))
    throw ValidationError("gamma_floor must be positive");
  HomologicalSolution sol;
  const cplx I(0.0, 1.0);
  for (const auto& [j, q] : Q.sorted_terms()) {
    if (in_normal_support(j, N)) {
      sol.zed.terms().emplace(j, q);
      continue;
    }
    const double om = divisor(j, freq);
    if (std::abs(om) < gamma_floor) throw DivisorFloorError(j, om, gamma_floor);
    if (std::abs(om) < sol.min_divisor) {
      sol.min_divisor = std::abs(om);
      sol.argmin = j;
    }
    sol.chi.terms().emplace(j, q / (I * om));
  }
  return sol;
}

struct DegreeDiagnostics {
  int degree = 0;
  double q_norm = 0.0;
  double chi_norm = 0.0;
  double zed_norm = 0.0;
  double min_divisor = std::numeric_limits<double>::infinity();
  std::size_t q_terms = 0;
  double bound_ratio = 0.0;  // log(|chi|+|Z|) / (m^2 log(K m N^tau))
};

struct NormalFormResult {
  int r = 0;
  int N = 0;
  std::vector<Polynomial> chi;  // indexed by degree, entries 0..r
  std::vector<Polynomial> zed;
  std::vector<Polynomial> q;    // homological sources
  std::vector<DegreeDiagnostics> diagnostics;
  double fitted_growth_constant = 2.0;

  Polynomial chi_total() const {
    Polynomial s;
    for (const auto& p : chi) s += p;
    return s;
  }
  Polynomial zed_total() const {
    Polynomial s;
    for (const auto& p : zed) s += p;
    return s;
  }
};

struct NormalFormOptions {
  int r = 4;
  int N = 8;
  double gamma_floor = 1e-8;
  double tau = 5.1;  // exponent entering the growth-bound diagnostic
  std::size_t max_terms = 5'000'000;
};

namespace detail {
/// Calls fn(l_1..l_k, l_{k+1}) for every composition with
/// l_1 + ... + l_{k+1} = total and lo <= l_i <= hi.
inline void for_each_composition(int parts, int total, int lo, int hi,
                                 const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> l(static_cast<std::size_t>(parts), lo);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == parts - 1) {
      if (left >= lo && left <= hi) {
        l[static_cast<std::size_t>(i)] = left;
        fn(l);
      }
      return;
    }
    for (int v = lo; v <= hi && v <= left; ++v) {
      l[static_cast<std::size_t>(i)] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, total);
}

inline const Polynomial& at_degree(const std::vector<Polynomial>& v, int d) {
  static const Polynomial empty;
  if (d < 0 || static_cast<std::size_t>(d) >= v.size()) return empty;
  return v[static_cast<std::size_t>(d)];
}
}  // namespace detail

/// Recursive construction of chi_3..chi_r and Z_3..Z_r from the homogeneous
/// pieces of N (indexed by degree).
inline NormalFormResult recursive_construct(const std::vector<Polynomial>& Npolys,
                                            const FrequencyTable& freq,
                                            const NormalFormOptions& opt) {
  if (opt.r < 3) throw ValidationError("normal_form.r must be >= 3");
  if (opt.r + 1 > kBernoulliBudget)
    throw ValidationError("normal_form.r exceeds the Bernoulli budget");
  const auto B = bernoulli_table(std::max(opt.r - 3, 1));
  std::vector<double> bk_over_fact(B.size());
  double fact = 1.0;
  for (std::size_t k = 0; k < B.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    bk_over_fact[k] = to_double(B[k]) / fact;
  }

  NormalFormResult res;
  res.r = opt.r;
  res.N = opt.N;
  res.chi.resize(static_cast<std::size_t>(opt.r + 1));
  res.zed.resize(static_cast<std::size_t>(opt.r + 1));
  res.q.resize(static_cast<std::size_t>(opt.r + 1));

  auto Nd = [&](int d) -> const Polynomial& { return detail::at_degree(Npolys, d); };

  for (int m = 3; m <= opt.r; ++m) {
    Polynomial Q = Nd(m);
    for (int k = 3; k <= m - 1; ++k) {
      const auto& chi_k = res.chi[static_cast<std::size_t>(k)];
      const auto& n = Nd(m + 2 - k);
      if (chi_k.empty() || n.empty()) continue;
      Q += poisson_bracket(chi_k, n);
    }
    for (int k = 1; k <= m - 3; ++k) {
      const double w = bk_over_fact[static_cast<std::size_t>(k)];
      if (w == 0.0) continue;
      detail::for_each_composition(
          k + 1, m + 2 * k, 3, m - k, [&](const std::vector<int>& l) {
            const int last = l.back();
            Polynomial inner = res.zed[static_cast<std::size_t>(last)] - Nd(last);
            if (inner.empty()) return;
            for (int i = k - 1; i >= 0 && !inner.empty(); --i) {
              const auto& chi_l = res.chi[static_cast<std::size_t>(l[static_cast<std::size_t>(i)])];
              if (chi_l.empty()) return;
              inner = poisson_bracket(chi_l, inner);
            }
            if (!inner.empty()) Q -= w * inner;
          });
    }
    Q.prune();
    if (Q.size() > opt.max_terms)
      throw ValidationError("degree-" + std::to_string(m) +
                            " source exceeds the term budget");
    if (Q.min_degree() != 0 && Q.min_degree() < 3)
      throw NumericalError("anomalous degree-2 term in the recursion source");

    auto sol = solve_homological(Q, freq, opt.N, opt.gamma_floor);
    DegreeDiagnostics dg;
    dg.degree = m;
    dg.q_norm = poly_norm(Q);
    dg.q_terms = Q.size();
    dg.chi_norm = poly_norm(sol.chi);
    dg.zed_norm = poly_norm(sol.zed);
    dg.min_divisor = sol.min_divisor;
    res.diagnostics.push_back(dg);
    res.chi[static_cast<std::size_t>(m)] = std::move(sol.chi);
    res.zed[static_cast<std::size_t>(m)] = std::move(sol.zed);
    res.q[static_cast<std::size_t>(m)] = std::move(Q);
  }

  // Smallest K >= 2 with |chi_m| + |Z_m| <= (K m N^tau)^{m^2} for all m.
  const double Ntau = std::pow(static_cast<double>(std::max(opt.N, 1)), opt.tau);
  double K = 2.0;
  for (const auto& d : res.diagnostics) {
    const double s = d.chi_norm + d.zed_norm;
    if (s <= 0.0) continue;
    const double m = d.degree;
    K = std::max(K, std::pow(s, 1.0 / (m * m)) / (m * Ntau));
  }
  res.fitted_growth_constant = K;
  for (auto& d : res.diagnostics) {
    const double s = d.chi_norm + d.zed_norm;
    const double m = d.degree;
    d.bound_ratio = s > 0.0 ? std::log(s) / (m * m * std::log(K * m * Ntau)) : 0.0;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Numeric Lie transform.

struct LieFlowOptions {
  double rel_tol = 1e-12;
  double abs_tol_scale = 1e-16;  // absolute tolerance relative to max|X_chi(z)| |t|
  double max_norm = std::numeric_limits<double>::infinity();  // analyticity ball
  double rho = 0.5;
  std::size_t max_steps = 200000;
};

/// Returns the displacement Phi^t_chi(z) - z, which keeps full relative
/// precision even when it is far smaller than z.
inline State lie_displacement(const Polynomial& chi, const State& z, double t,
                              const LieFlowOptions& opt = {}) {
  if (!(t >= -1.0 && t <= 1.0)) throw ValidationError("lie_flow: t must lie in [-1, 1]");
  if (chi.empty() || t == 0.0) return State(z.size());
  if (std::isfinite(opt.max_norm) && analytic_norm(z, opt.rho) > opt.max_norm)
    throw NumericalError("lie_flow: state outside the analyticity ball");

  const std::size_t K = z.size();
  using Vec = std::vector<double>;
  const double sgn = t > 0 ? 1.0 : -1.0;
  double zmax = 0.0;
  for (std::size_t i = 0; i < K; ++i)
    zmax = std::max({zmax, std::abs(z.xi()[i]), std::abs(z.eta()[i])});
  if (zmax == 0.0) return State(z.size());

  auto unpack = [&](const Vec& w) {
    State y = z;
    for (std::size_t i = 0; i < K; ++i) {
      y.xi()[i] += cplx(w[4 * i], w[4 * i + 1]);
      y.eta()[i] += cplx(w[4 * i + 2], w[4 * i + 3]);
    }
    return y;
  };
  std::size_t calls = 0;
  auto rhs = [&](const Vec& w, Vec& dw, double) {
    if (++calls > 13 * opt.max_steps)
      throw NumericalError("lie_flow: step-size collapse");
    const State f = vector_field(chi, unpack(w));
    // Lie orientation: flow of -chi
    for (std::size_t i = 0; i < K; ++i) {
      dw[4 * i] = -sgn * f.xi()[i].real();
      dw[4 * i + 1] = -sgn * f.xi()[i].imag();
      dw[4 * i + 2] = -sgn * f.eta()[i].real();
      dw[4 * i + 3] = -sgn * f.eta()[i].imag();
    }
  };

  namespace odeint = boost::numeric::odeint;
  using Stepper = odeint::runge_kutta_fehlberg78<Vec>;
  // absolute tolerance scaled to the displacement, not to z itself
  double vmax = 0.0;
  {
    const State v0 = vector_field(chi, z);
    for (std::size_t i = 0; i < K; ++i)
      vmax = std::max({vmax, std::abs(v0.xi()[i]), std::abs(v0.eta()[i])});
  }
  if (vmax == 0.0) return State(z.size());
  const double atol = opt.abs_tol_scale * std::max(vmax * std::abs(t), 1e-300);
  auto stepper = odeint::make_controlled(atol, opt.rel_tol, Stepper());
  Vec w(4 * K, 0.0);
  odeint::integrate_adaptive(stepper, rhs, w, 0.0, std::abs(t), std::abs(t) / 8.0);
  for (double x : w)
    if (!std::isfinite(x)) throw NumericalError("lie_flow: non-finite state");
  if (std::isfinite(opt.max_norm) && analytic_norm(unpack(w), opt.rho) > opt.max_norm)
    throw NumericalError("lie_flow: trajectory left the analyticity ball");
  State d(K);
  for (std::size_t i = 0; i < K; ++i) {
    d.xi()[i] = cplx(w[4 * i], w[4 * i + 1]);
    d.eta()[i] = cplx(w[4 * i + 2], w[4 * i + 3]);
  }
  return d;
}

/// Phi^t_chi(z) for t in [-1, 1], integrating the displacement with an
/// embedded Runge-Kutta-Fehlberg 7(8) pair.
inline State lie_flow(const Polynomial& chi, const State& z, double t,
                      const LieFlowOptions& opt = {}) {
  State y = z;
  y += lie_displacement(chi, z, t, opt);
  return y;
}

/// (H0 + N)(Phi^1_chi(z)) - (H0 + Z)(z), with the H0 difference formed from
/// the displacement to avoid cancellation.
inline double remainder_defect(const FrequencyTable& freq, const Polynomial& N,
                               const Polynomial& chi, const Polynomial& Z,
                               const State& z, const LieFlowOptions& opt = {}) {
  const State w = lie_displacement(chi, z, 1.0, opt);
  State y = z;
  y += w;
  cplx dH0 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const cplx dx = w.xi()[i];
    const cplx de = w.eta()[i];
    dH0 += freq.omegas()[i] * (dx * z.eta()[i] + z.xi()[i] * de + dx * de);
  }
  const cplx d = dH0 + evaluate(N, y) - evaluate(Z, z);
  return std::abs(d);
}

/// max over samples of the remainder defect.
inline double remainder_probe(const FrequencyTable& freq, const Polynomial& N,
                              const Polynomial& chi, const Polynomial& Z,
                              const std::vector<State>& samples,
                              const LieFlowOptions& opt = {}) {
  double m = 0.0;
  for (const auto& z : samples)
    m = std::max(m, remainder_defect(freq, N, chi, Z, z, opt));
  return m;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("loglog_slope needs at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Choices N = |log eps|^{1+beta}, r = |log eps|^beta, rounded to integers
/// (r at least 3).
struct ScalingPreset {
  int N;
  int r;
};
inline ScalingPreset log_scaling(double beta, double epsilon) {
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
  const double L = std::abs(std::log(epsilon));
  return {std::max(1, static_cast<int>(std::lround(std::pow(L, 1.0 + beta)))),
          std::max(3, static_cast<int>(std::lround(std::pow(L, beta))))};
}

}  // namespace nlkg
