#pragma once

// Small-divisor scanning: enumeration of admissible multi-indices, the
// scaled minimum |Omega(j)| mu(j)^{tau r}, Monte-Carlo estimation of the
// excluded parameter measure and proof-regime diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nlkg/poly_algebra.hpp"
#include "nlkg/rng.hpp"
#include "nlkg/spectral_basis.hpp"

namespace nlkg {

struct NonresParams {
  double gamma = 0.01;
  double tau = 5.1;
  int r = 1;
  int N = 4;

  void validate() const {
    if (!(gamma >= 0.0)) throw ValidationError("nonres.gamma must be >= 0");
    if (!(tau >= 0.0)) throw ValidationError("nonres.tau must be >= 0");
    if (r < 1) throw ValidationError("nonres.r must be >= 1");
    if (N < 1) throw ValidationError("nonres.N must be >= 1");
  }
};

/// tau = s + 2 + max(s, 2)/2 + eps.
inline double default_tau(double s, double eps = 0.1) {
  return s + 2.0 + std::max(s, 2.0) / 2.0 + eps;
}

enum class IndexFilter { all, zero_momentum, non_resonant };

struct EnumerationOptions {
  IndexFilter filter = IndexFilter::all;
  /// Keep only one of j and bar(j) (they share |Omega|).
  bool modulo_conjugation = false;
  std::uint64_t budget = 50'000'000;
};

class BudgetExceeded : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

namespace detail {
inline std::uint64_t multiset_count(std::uint64_t n, std::uint64_t k) {
  long double r = 1.0L;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n + k - i) / i;
  return r > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(r + 0.5L);
}
}  // namespace detail

/// Upper bound on the number of canonical length-(r+2) indices with
/// mu(j) <= N over modes 1..K: two free tail entries times a body <= N.
inline std::uint64_t enumeration_bound(int r, int N, int K) {
  const int Nb = std::min(N, K);
  return detail::multiset_count(static_cast<std::uint64_t>(2 * Nb), static_cast<std::uint64_t>(r)) *
         detail::multiset_count(static_cast<std::uint64_t>(2 * K), 2);
}

/// Visits each canonical multi-index of length r+2 over modes 1..K with
/// mu(j) <= N exactly once. At most two entries exceed N; the pruning is
/// applied while generating.
inline void enumerate_indices(int r, int N, int K, const EnumerationOptions& opt,
                              const std::function<void(const MultiIndex&)>& visit) {
  if (r < 1) throw ValidationError("r must be >= 1");
  if (N < 1 || K < 1) throw ValidationError("N and K must be >= 1");
  const int len = r + 2;
  if (len > static_cast<int>(MultiIndex::kCapacity))
    throw ValidationError("index length exceeds capacity");
  const std::uint64_t bound = enumeration_bound(r, N, K);
  if (bound > opt.budget)
    throw BudgetExceeded("enumeration of length-" + std::to_string(len) +
                         " indices (K=" + std::to_string(K) + ", N=" +
                         std::to_string(N) + ") may visit up to " +
                         std::to_string(bound) + " indices, above the budget of " +
                         std::to_string(opt.budget));

  // Codes run from 2 (eta_1) to 2K+1 (xi_K); canonical order is descending.
  const std::uint16_t top = static_cast<std::uint16_t>(2 * K + 1);
  const std::uint16_t body_top = static_cast<std::uint16_t>(2 * std::min(N, K) + 1);
  std::vector<std::uint16_t> codes(static_cast<std::size_t>(len));

  std::function<void(int, std::uint16_t)> rec = [&](int pos, std::uint16_t maxc) {
    if (pos == len) {
      const MultiIndex j = MultiIndex::from_sorted_codes(codes.data(), codes.size());
      switch (opt.filter) {
        case IndexFilter::all: break;
        case IndexFilter::zero_momentum:
          if (j.momentum() != 0) return;
          break;
        case IndexFilter::non_resonant:
          if (j.is_resonant()) return;
          break;
      }
      if (opt.modulo_conjugation) {
        const MultiIndex jb = j.bar();
        if (jb < j) return;
      }
      visit(j);
      return;
    }
    // positions >= 2 hold the body, whose largest entry is mu(j) <= N
    const std::uint16_t cap = pos >= 2 ? std::min(maxc, body_top) : maxc;
    for (int c = cap; c >= 2; --c) {
      codes[static_cast<std::size_t>(pos)] = static_cast<std::uint16_t>(c);
      rec(pos + 1, static_cast<std::uint16_t>(c));
    }
  };
  rec(0, top);
}

inline std::vector<MultiIndex> collect_indices(int r, int N, int K,
                                               const EnumerationOptions& opt) {
  std::vector<MultiIndex> v;
  enumerate_indices(r, N, K, opt, [&](const MultiIndex& j) { v.push_back(j); });
  return v;
}

struct ScaledDivisor {
  /// min over admissible non-resonant j of |Omega(j)| mu(j)^{tau r};
  /// empty when the admissible set is empty.
  std::optional<double> value;
  MultiIndex argmin;
  double argmin_divisor = 0.0;
  std::uint64_t checked = 0;

  bool vacuous() const { return !value.has_value(); }
  bool satisfies(double gamma) const { return vacuous() || *value >= gamma; }
};

inline double scaled_divisor(const MultiIndex& j, const FrequencyTable& freq,
                             double tau, int r) {
  return std::abs(divisor(j, freq)) *
         std::pow(static_cast<double>(j.mu()), tau * static_cast<double>(r));
}

/// Minimum of |Omega(j)| mu(j)^{tau r} over non-resonant length-(r+2)
/// indices with mu(j) <= N, modes <= K (K defaults to the table size).
inline ScaledDivisor min_scaled_divisor(const NonresParams& params,
                                        const FrequencyTable& freq, int K = 0,
                                        std::uint64_t budget = 50'000'000) {
  params.validate();
  if (K <= 0) K = static_cast<int>(freq.size());
  if (K > static_cast<int>(freq.size()))
    throw ValidationError("scan truncation exceeds the frequency table");
  ScaledDivisor out;
  EnumerationOptions opt;
  opt.filter = IndexFilter::non_resonant;
  opt.modulo_conjugation = true;
  opt.budget = budget;
  enumerate_indices(params.r, params.N, K, opt, [&](const MultiIndex& j) {
    ++out.checked;
    const double om = divisor(j, freq);
    const double v = std::abs(om) * std::pow(static_cast<double>(j.mu()),
                                             params.tau * params.r);
    if (!out.value || v < *out.value) {
      out.value = v;
      out.argmin = j;
      out.argmin_divisor = om;
    }
  });
  return out;
}

/// Worst admissible indices by scaled divisor (ascending).
struct AtlasRow {
  MultiIndex index;
  double omega;
  int mu;
  double scaled;
};

inline std::vector<AtlasRow> divisor_atlas(const NonresParams& params,
                                           const FrequencyTable& freq, int K,
                                           std::size_t rows = 1000) {
  params.validate();
  std::vector<AtlasRow> all;
  EnumerationOptions opt;
  opt.filter = IndexFilter::non_resonant;
  opt.modulo_conjugation = true;
  enumerate_indices(params.r, params.N, K, opt, [&](const MultiIndex& j) {
    const double om = divisor(j, freq);
    all.push_back({j, om, j.mu(), scaled_divisor(j, freq, params.tau, params.r)});
  });
  const std::size_t n = std::min(rows, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    [](const AtlasRow& a, const AtlasRow& b) {
                      if (a.scaled != b.scaled) return a.scaled < b.scaled;
                      return a.index < b.index;
                    });
  all.resize(n);
  return all;
}

// ---------------------------------------------------------------------------
// Monte-Carlo measure of the excluded set in [n, n+1] x V_{s,M}.

struct MeasureScanConfig {
  double n = 1.0;  // c uniform on [n, n+1]; values below 1 are clipped to 1
  double s = 2.0;
  double M = 1.0;
  int K = 6;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct MeasureScanResult {
  double gamma = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  double fraction = 0.0;
  double ci95 = 0.0;  // normal-approximation binomial half-width
};

/// The parameter point for sample i: c uniform on [n, n+1], v'_k uniform on
/// [-1/2, 1/2], all drawn from a counter-based stream of (seed, i).
inline FrequencyTable sample_parameters(const MeasureScanConfig& cfg, std::uint64_t i) {
  CounterRng rng(cfg.seed, streams::scan, i);
  double c = cfg.n + rng.uniform();
  c = std::max(c, 1.0);
  PotentialSpec pot{cfg.s, cfg.M, std::vector<double>(static_cast<std::size_t>(cfg.K))};
  for (auto& u : pot.unit_coeffs) u = rng.uniform() - 0.5;
  return FrequencyTable(c, pot);
}

/// Violation fractions for several gammas from one pass over the samples.
inline std::vector<MeasureScanResult> measure_scan(const MeasureScanConfig& cfg,
                                                   const NonresParams& params,
                                                   const std::vector<double>& gammas) {
  params.validate();
  if (cfg.samples < 100) throw ValidationError("measure scan needs >= 100 samples");
  // Admissible indices do not depend on the parameters.
  EnumerationOptions opt;
  opt.filter = IndexFilter::non_resonant;
  opt.modulo_conjugation = true;
  const auto indices = collect_indices(params.r, params.N, cfg.K, opt);

  std::vector<double> minima(cfg.samples, std::numeric_limits<double>::infinity());
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const FrequencyTable f = sample_parameters(cfg, i);
      double m = std::numeric_limits<double>::infinity();
      for (const auto& j : indices)
        m = std::min(m, scaled_divisor(j, f, params.tau, params.r));
      minima[i] = m;
    }
  };
  unsigned T = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  T = static_cast<unsigned>(std::min<std::uint64_t>(T, cfg.samples));
  if (T <= 1) {
    work(0, cfg.samples);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (cfg.samples + T - 1) / T;
    for (unsigned t = 0; t < T; ++t) {
      const std::uint64_t b = t * chunk, e = std::min(cfg.samples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }

  std::vector<MeasureScanResult> out;
  for (double g : gammas) {
    MeasureScanResult r;
    r.gamma = g;
    r.samples = cfg.samples;
    for (double m : minima)
      if (m < g) ++r.violations;
    r.fraction = static_cast<double>(r.violations) / static_cast<double>(r.samples);
    r.ci95 = 1.96 * std::sqrt(r.fraction * (1.0 - r.fraction) / static_cast<double>(r.samples));
    out.push_back(r);
  }
  return out;
}

inline MeasureScanResult measure_scan(const MeasureScanConfig& cfg,
                                      const NonresParams& params) {
  return measure_scan(cfg, params, {params.gamma}).front();
}

// ---------------------------------------------------------------------------
// Proof-regime diagnostics for Omega(j) + sigma omega_l (one tail) and
// Omega(j) + sigma_1 omega_l + sigma_2 omega_m (two tails).

struct CaseDiagnostics {
  std::string label;
  int alpha = 0;           // sum of all signs, tails included
  double lambda_N = 0.0;   // eigenvalue at the body's largest mode
  double c_threshold = 0.0;  // sqrt(lambda_N r) for one tail
  std::optional<double> c2_root;  // lambda_l / (alpha (alpha + 2)) when alpha > 0
};

struct Tail {
  int mode;
  int sign;
};

inline CaseDiagnostics case_diagnostics(const MultiIndex& body, Tail l,
                                        std::optional<Tail> m,
                                        const FrequencyTable& freq) {
  if (body.size() == 0) throw ValidationError("case_diagnostics needs a body index");
  CaseDiagnostics d;
  const double c = freq.c();
  d.alpha = body.sign_sum() + (l.sign > 0 ? 1 : -1) +
            (m ? (m->sign > 0 ? 1 : -1) : 0);
  d.lambda_N = freq.lambda(body.sup_index());
  const double r = static_cast<double>(body.size());
  d.c_threshold = std::sqrt(d.lambda_N * r);
  if (d.alpha > 0)
    d.c2_root = freq.lambda(l.mode) / (d.alpha * (d.alpha + 2.0));

  if (!m) {
    if (d.alpha == 0) d.label = "alpha_zero";
    else if (c <= d.c_threshold) d.label = "alpha_nonzero_small_c";
    else if (d.alpha > 0) d.label = "alpha_positive_large_c";
    else d.label = "alpha_negative_large_c";
    return d;
  }
  const double lam_l = freq.lambda(std::min(l.mode, m->mode));
  const double lam_m = freq.lambda(std::max(l.mode, m->mode));
  if (l.sign == m->sign) d.label = "two_tail_same_sign";
  else if (c < std::pow(lam_l, 1.0 / 6.0)) d.label = "two_tail_small_c";
  else if (c > lam_m) d.label = "two_tail_large_c";
  else d.label = "two_tail_intermediate";
  return d;
}

/// Searches c^2 in [c2_lo, c2_hi] (grid plus bisection on sign changes) for
/// the smallest |Omega| over non-resonant indices made of a body of length
/// <= body_max over modes <= body_modes with sign sum alpha + 1, plus the
/// tail (l, -1). The potential is held fixed.
struct NearRootHit {
  double value = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  MultiIndex index;
};

inline NearRootHit near_root_search(int alpha, int l, const PotentialSpec& potential,
                                    double c2_lo, double c2_hi, int body_max,
                                    int body_modes, int grid = 400) {
  if (c2_lo < 1.0) c2_lo = 1.0;
  if (!(c2_hi > c2_lo)) throw ValidationError("near_root_search: empty window");
  std::vector<MultiIndex> bodies;
  for (int len = 1; len <= body_max; ++len) {
    std::vector<std::uint16_t> codes(static_cast<std::size_t>(len));
    std::function<void(int, int)> rec = [&](int pos, int maxc) {
      if (pos == len) {
        const auto b = MultiIndex::from_sorted_codes(codes.data(), codes.size());
        if (b.sign_sum() == alpha + 1) bodies.push_back(b);
        return;
      }
      for (int c = maxc; c >= 2; --c) {
        codes[static_cast<std::size_t>(pos)] = static_cast<std::uint16_t>(c);
        rec(pos + 1, c);
      }
    };
    rec(0, 2 * body_modes + 1);
  }
  const ModeIndex tail(l, -1);
  NearRootHit best;
  auto eval = [&](const MultiIndex& j, double c2) {
    const FrequencyTable f(std::sqrt(c2), potential);
    return divisor(j, f);
  };
  for (const auto& b : bodies) {
    const MultiIndex j = MultiIndex::merge(b, MultiIndex{tail});
    if (j.is_resonant()) continue;
    double prev_c2 = c2_lo, prev = eval(j, c2_lo);
    for (int g = 1; g <= grid; ++g) {
      const double c2 = c2_lo + (c2_hi - c2_lo) * g / grid;
      const double v = eval(j, c2);
      if (std::abs(v) < best.value) best = {std::abs(v), c2, j};
      if ((prev < 0) != (v < 0)) {
        double a = prev_c2, b2 = c2, fa = prev;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (a + b2);
          const double fm = eval(j, mid);
          if ((fa < 0) == (fm < 0)) {
            a = mid;
            fa = fm;
          } else {
            b2 = mid;
          }
        }
        const double root = 0.5 * (a + b2);
        const double fv = std::abs(eval(j, root));
        if (fv < best.value) best = {fv, root, j};
      }
      prev_c2 = c2;
      prev = v;
    }
  }
  return best;
}

}  // namespace nlkg
