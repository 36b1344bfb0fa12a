#pragma once

// Taylor expansion of N(xi, eta) = int_0^pi F(u) dx with
//   u = sum_k m_k (xi_k + eta_k) / sqrt 2 * phi_k(x),  phi_k = pi^{-1/2} sin(kx),
// into homogeneous polynomials N_d.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlkg/poly_algebra.hpp"
#include "nlkg/spectral_basis.hpp"

namespace nlkg {

enum class MomentumProjection { strict, keep_all };

inline MomentumProjection parse_projection(const std::string& s) {
  if (s == "strict") return MomentumProjection::strict;
  if (s == "keep_all") return MomentumProjection::keep_all;
  throw ValidationError("momentum_projection must be 'strict' or 'keep_all'");
}
inline std::string to_string(MomentumProjection p) {
  return p == MomentumProjection::strict ? "strict" : "keep_all";
}

/// f(u) = sum_m f_m u^m with f_m = 0 for m < 3; F(u) = sum_m f_m u^{m+1}/(m+1).
struct NonlinearitySpec {
  std::vector<std::pair<int, double>> taylor;  // (m, f_m)
  double R0 = 0.5;
  double M = 1.0;

  void validate() const {
    for (const auto& [m, fm] : taylor) {
      if (m < 3 && fm != 0.0)
        throw ValidationError("nonlinearity.taylor: f must vanish to order 3 "
                              "(got power " + std::to_string(m) + ")");
    }
    if (!(R0 > 0.0)) throw ValidationError("nonlinearity.R0 must be positive");
    if (!(M > 0.0)) throw ValidationError("nonlinearity.M must be positive");
  }

  /// Taylor coefficient of F at degree d, i.e. f_{d-1} / d.
  double primitive_coeff(int d) const {
    double s = 0.0;
    for (const auto& [m, fm] : taylor)
      if (m + 1 == d) s += fm / static_cast<double>(d);
    return s;
  }

  int max_degree() const {
    int d = 0;
    for (const auto& [m, fm] : taylor)
      if (fm != 0.0) d = std::max(d, m + 1);
    return d;
  }

  bool odd() const {
    for (const auto& [m, fm] : taylor)
      if (fm != 0.0 && m % 2 == 0) return false;
    return true;
  }

  /// f(u) and F(u) for complex arguments.
  cplx f(cplx u) const {
    cplx s = 0.0;
    for (const auto& [m, fm] : taylor) s += fm * std::pow(u, m);
    return s;
  }
  cplx F(cplx u) const {
    cplx s = 0.0;
    for (const auto& [m, fm] : taylor)
      s += fm / static_cast<double>(m + 1) * std::pow(u, m + 1);
    return s;
  }
};

/// int_0^pi prod_i pi^{-1/2} sin(k_i x) dx, exact.
///
/// prod sin(k_i x) = (2i)^{-m} sum_sigma (prod sigma_i) e^{i (sum sigma_i k_i) x};
/// the signed-frequency weights are accumulated exactly as integers, then
/// int_0^pi e^{inx} dx = pi (n = 0), 2i/n (n odd), 0 (n even, n != 0).
inline double basis_product_integral(const std::vector<int>& ks) {
  const std::size_t m = ks.size();
  if (m == 0) throw ValidationError("basis_product_integral needs modes");
  int span = 0;
  for (int k : ks) {
    if (k < 1) throw ValidationError("mode number must be >= 1");
    span += k;
  }
  // weight[n + span] = sum over sign choices with sum sigma k = n of prod sigma
  std::vector<std::int64_t> w(2 * span + 1, 0), next(2 * span + 1, 0);
  w[span] = 1;
  int reach = 0;
  for (int k : ks) {
    std::fill(next.begin(), next.end(), 0);
    for (int n = -reach; n <= reach; ++n) {
      const auto c = w[n + span];
      if (c == 0) continue;
      next[n + k + span] += c;
      next[n - k + span] -= c;
    }
    reach += k;
    std::swap(w, next);
  }
  // (2i)^{-m} * [pi w_0 + sum_{n odd} w_n 2i/n]
  const double pi = std::numbers::pi;
  double re = 0.0, im = 0.0;  // bracket value
  re += pi * static_cast<double>(w[span]);
  for (int n = 1; n <= span; n += 2) {
    // w_n / n + w_{-n} / (-n)
    const double a = (static_cast<double>(w[n + span]) -
                      static_cast<double>(w[-n + span])) / n;
    im += 2.0 * a;
  }
  // multiply by (2i)^{-m} = 2^{-m} (-i)^m
  const double scale = std::ldexp(1.0, -static_cast<int>(m));
  double rr = 0.0;
  switch (m % 4) {
    case 0: rr = re; break;     // (-i)^0 = 1
    case 1: rr = im; break;     // (-i)(re + i im) -> real part im
    case 2: rr = -re; break;    // (-i)^2 = -1
    case 3: rr = -im; break;    // (-i)^3 = i -> real part -im
  }
  return rr * scale * std::pow(pi, -0.5 * static_cast<double>(m));
}

struct ExpansionBudget {
  /// Upper bound on the number of mode multisets visited per degree.
  std::uint64_t max_mode_multisets = 20'000'000;
  /// Upper bound on stored terms per degree.
  std::uint64_t max_terms = 5'000'000;
};

namespace detail {
inline std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  long double r = 1.0L;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(r + 0.5L);
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace detail

/// Homogeneous pieces N_d for d = 2..max_degree (the vector is indexed by d;
/// entries below the first active degree are empty). Coefficient of the
/// canonical monomial with signed-mode multiplicities n_e is
///   F_d 2^{-d/2} (d! / prod n_e!) prod m_{k_i} int prod phi_{k_i}.
inline std::vector<Polynomial> expand_nonlinearity(
    const NonlinearitySpec& spec, const FrequencyTable& freq, int max_degree,
    MomentumProjection projection = MomentumProjection::strict,
    const ExpansionBudget& budget = {}) {
  spec.validate();
  const int K = static_cast<int>(freq.size());
  std::vector<Polynomial> out(static_cast<std::size_t>(std::max(max_degree, 0) + 1));
  if (max_degree > static_cast<int>(MultiIndex::kCapacity))
    throw ValidationError("expansion degree exceeds multi-index capacity");

  for (int d = 2; d <= max_degree; ++d) {
    const double Fd = spec.primitive_coeff(d);
    if (Fd == 0.0) continue;
    const std::uint64_t visits = detail::binomial_u64(K + d - 1, d);
    if (visits > budget.max_mode_multisets)
      throw ValidationError(
          "expansion of degree " + std::to_string(d) + " at K=" +
          std::to_string(K) + " visits " + std::to_string(visits) +
          " mode multisets, above the budget of " +
          std::to_string(budget.max_mode_multisets));

    const double pref = Fd * std::pow(2.0, -0.5 * d) * detail::factorial(d);
    auto& Nd = out[static_cast<std::size_t>(d)].terms();

    // Non-increasing mode tuples ks[0] >= ks[1] >= ... >= ks[d-1].
    std::vector<int> ks(static_cast<std::size_t>(d), K);
    std::vector<std::uint16_t> codes(static_cast<std::size_t>(d));
    while (true) {
      const double integral = basis_product_integral(ks);
      if (integral != 0.0) {
        double mult = 1.0;
        for (int k : ks) mult *= freq.multiplier(k);
        const double base = pref * mult * integral;
        // distinct modes and their counts, descending
        std::vector<std::pair<int, int>> groups;
        for (int k : ks) {
          if (!groups.empty() && groups.back().first == k) ++groups.back().second;
          else groups.emplace_back(k, 1);
        }
        // choose the number of xi's p_g in each group
        std::vector<int> p(groups.size(), 0);
        while (true) {
          int mom = 0;
          for (std::size_t g = 0; g < groups.size(); ++g)
            mom += groups[g].first * (2 * p[g] - groups[g].second);
          if (projection == MomentumProjection::keep_all || mom == 0) {
            double denom = 1.0;
            std::size_t pos = 0;
            for (std::size_t g = 0; g < groups.size(); ++g) {
              const int k = groups[g].first;
              const int n = groups[g].second;
              denom *= detail::factorial(p[g]) * detail::factorial(n - p[g]);
              // within a mode, xi (code 2k+1) sorts before eta (code 2k)
              for (int t = 0; t < p[g]; ++t)
                codes[pos++] = static_cast<std::uint16_t>(2 * k + 1);
              for (int t = p[g]; t < n; ++t)
                codes[pos++] = static_cast<std::uint16_t>(2 * k);
            }
            Nd[MultiIndex::from_sorted_codes(codes.data(), codes.size())] +=
                base / denom;
            if (Nd.size() > budget.max_terms)
              throw ValidationError("expansion of degree " + std::to_string(d) +
                                    " exceeds the term budget of " +
                                    std::to_string(budget.max_terms));
          }
          std::size_t g = 0;
          while (g < groups.size() && p[g] == groups[g].second) {
            p[g] = 0;
            ++g;
          }
          if (g == groups.size()) break;
          ++p[g];
        }
      }
      // next non-increasing tuple (lexicographically decreasing)
      int i = d - 1;
      while (i >= 0 && ks[static_cast<std::size_t>(i)] == 1) --i;
      if (i < 0) break;
      const int v = ks[static_cast<std::size_t>(i)] - 1;
      for (int t = i; t < d; ++t) ks[static_cast<std::size_t>(t)] = v;
    }
  }
  return out;
}

/// Distribution of coefficient mass sum |a_j| over momentum classes.
struct MomentumReport {
  std::map<int, double> mass_by_momentum;
  std::map<int, std::size_t> terms_by_momentum;
  double zero_mass = 0.0;
  double nonzero_mass = 0.0;

  double zero_fraction() const {
    const double t = zero_mass + nonzero_mass;
    return t > 0.0 ? zero_mass / t : 0.0;
  }
};

inline MomentumReport momentum_support_report(const Polynomial& P) {
  MomentumReport r;
  for (const auto& [j, a] : P.terms()) {
    const int m = j.momentum();
    r.mass_by_momentum[m] += std::abs(a);
    r.terms_by_momentum[m] += 1;
    (m == 0 ? r.zero_mass : r.nonzero_mass) += std::abs(a);
  }
  return r;
}

}  // namespace nlkg
