#pragma once

// Sparse polynomials in the variables z_j, j = (k, delta), with the
// momentum / divisor / resonance structure and the Poisson bracket
//
//   {G1, G2} = i sum_k (dG1/deta_k dG2/dxi_k - dG1/dxi_k dG2/deta_k).
//
// Along the flow of H (xi' = -i dH/deta, eta' = i dH/dxi) every F satisfies
// dF/dt = {F, H}.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlkg/spectral_basis.hpp"
#include "nlkg/state_space.hpp"

namespace nlkg {

/// Signed mode label j = (k, delta).
struct ModeIndex {
  int k = 1;
  int delta = 1;

  constexpr ModeIndex() = default;
  constexpr ModeIndex(int k_, int delta_) : k(k_), delta(delta_ > 0 ? 1 : -1) {}

  constexpr ModeIndex bar() const { return {k, -delta}; }

  /// Packed form 2k + [delta > 0]; ordering codes orders by (k, delta).
  constexpr std::uint16_t code() const {
    return static_cast<std::uint16_t>(2 * k + (delta > 0 ? 1 : 0));
  }
  static constexpr ModeIndex from_code(std::uint16_t c) {
    return {c / 2, (c & 1u) ? 1 : -1};
  }
  constexpr bool operator==(const ModeIndex&) const = default;
};

inline constexpr ModeIndex xi_(int k) { return {k, 1}; }
inline constexpr ModeIndex eta_(int k) { return {k, -1}; }

/// Canonical multi-index: entries sorted descending by (k, delta). Equality
/// is equality of canonical forms.
class MultiIndex {
 public:
  static constexpr std::size_t kCapacity = 16;

  MultiIndex() = default;
  MultiIndex(std::initializer_list<ModeIndex> entries) {
    for (const auto& e : entries) push(e.code());
    canonicalize();
  }
  explicit MultiIndex(const std::vector<ModeIndex>& entries) {
    for (const auto& e : entries) push(e.code());
    canonicalize();
  }

  static MultiIndex from_sorted_codes(const std::uint16_t* codes,
                                      std::size_t n) {
    MultiIndex m;
    if (n > kCapacity) throw std::length_error("multi-index degree too large");
    std::copy(codes, codes + n, m.codes_.begin());
    m.size_ = static_cast<std::uint8_t>(n);
    return m;
  }

  std::size_t size() const { return size_; }
  ModeIndex operator[](std::size_t i) const {
    return ModeIndex::from_code(codes_[i]);
  }
  const std::uint16_t* codes() const { return codes_.data(); }

  std::vector<ModeIndex> entries() const {
    std::vector<ModeIndex> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back((*this)[i]);
    return out;
  }

  MultiIndex bar() const {
    MultiIndex m;
    m.size_ = size_;
    for (std::size_t i = 0; i < size_; ++i) m.codes_[i] = codes_[i] ^ 1u;
    m.canonicalize();
    return m;
  }

  /// Sum k_i delta_i.
  int momentum() const {
    int s = 0;
    for (std::size_t i = 0; i < size_; ++i) {
      const auto e = (*this)[i];
      s += e.k * e.delta;
    }
    return s;
  }

  /// Sum of delta_i.
  int sign_sum() const {
    int s = 0;
    for (std::size_t i = 0; i < size_; ++i) s += (codes_[i] & 1u) ? 1 : -1;
    return s;
  }

  /// |j| = max k_i.
  int sup_index() const { return size_ ? codes_[0] / 2 : 0; }

  /// Third-largest k, counted with multiplicity.
  int mu() const {
    if (size_ < 3) throw std::domain_error("mu requires at least 3 entries");
    return codes_[2] / 2;
  }

  /// N(j) = prod (1 + k_i).
  double index_product() const {
    double p = 1.0;
    for (std::size_t i = 0; i < size_; ++i) p *= 1.0 + codes_[i] / 2;
    return p;
  }

  /// True iff the even-length index is i union bar(i): every k carries as
  /// many xi's as eta's.
  bool is_resonant() const {
    if (size_ % 2 != 0) return false;
    std::size_t i = 0;
    while (i < size_) {
      const int k = codes_[i] / 2;
      int bal = 0;
      while (i < size_ && codes_[i] / 2 == k) {
        bal += (codes_[i] & 1u) ? 1 : -1;
        ++i;
      }
      if (bal != 0) return false;
    }
    return true;
  }

  /// Index with one occurrence of e removed; e must be present.
  MultiIndex without(ModeIndex e) const {
    MultiIndex m;
    const auto c = e.code();
    bool removed = false;
    for (std::size_t i = 0; i < size_; ++i) {
      if (!removed && codes_[i] == c) {
        removed = true;
        continue;
      }
      m.codes_[m.size_++] = codes_[i];
    }
    if (!removed) throw std::logic_error("entry not present in multi-index");
    return m;
  }

  /// Multiset union of two canonical indices (stays canonical).
  static MultiIndex merge(const MultiIndex& a, const MultiIndex& b) {
    if (a.size_ + b.size_ > kCapacity)
      throw std::length_error("multi-index degree exceeds capacity");
    MultiIndex m;
    std::merge(a.codes_.begin(), a.codes_.begin() + a.size_, b.codes_.begin(),
               b.codes_.begin() + b.size_, m.codes_.begin(),
               std::greater<std::uint16_t>());
    m.size_ = static_cast<std::uint8_t>(a.size_ + b.size_);
    return m;
  }

  std::size_t multiplicity(ModeIndex e) const {
    return static_cast<std::size_t>(
        std::count(codes_.begin(), codes_.begin() + size_, e.code()));
  }

  bool operator==(const MultiIndex& o) const {
    return size_ == o.size_ &&
           std::equal(codes_.begin(), codes_.begin() + size_, o.codes_.begin());
  }
  bool operator<(const MultiIndex& o) const {
    if (size_ != o.size_) return size_ < o.size_;
    return std::lexicographical_compare(codes_.begin(), codes_.begin() + size_,
                                        o.codes_.begin(),
                                        o.codes_.begin() + o.size_);
  }

  std::size_t hash() const {
    std::uint64_t h = 1469598103934665603ull ^ size_;
    for (std::size_t i = 0; i < size_; ++i) {
      h ^= codes_[i];
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < size_; ++i) {
      const auto e = (*this)[i];
      if (i) s += ' ';
      s += (e.delta > 0 ? '+' : '-');
      s += std::to_string(e.k);
    }
    return s;
  }

 private:
  void push(std::uint16_t c) {
    if (size_ >= kCapacity)
      throw std::length_error("multi-index degree exceeds capacity");
    if (c < 2) throw ValidationError("mode number must be >= 1");
    codes_[size_++] = c;
  }
  void canonicalize() {
    std::sort(codes_.begin(), codes_.begin() + size_,
              std::greater<std::uint16_t>());
  }

  std::array<std::uint16_t, kCapacity> codes_{};
  std::uint8_t size_ = 0;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& m) const { return m.hash(); }
};

inline int momentum(const MultiIndex& j) { return j.momentum(); }
inline bool is_resonant(const MultiIndex& j) { return j.is_resonant(); }
inline int mu(const MultiIndex& j) { return j.mu(); }

/// Omega(j) = sum delta_i omega_{k_i}.
inline double divisor(const MultiIndex& j, const FrequencyTable& freq) {
  double s = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto e = j[i];
    s += e.delta * freq.omega(e.k);
  }
  return s;
}

/// Sparse polynomial sum_j a_j z_j over canonical multi-indices.
class Polynomial {
 public:
  using Map = std::unordered_map<MultiIndex, cplx, MultiIndexHash>;

  Polynomial() = default;

  /// Adds a * z_j, merging with an existing term.
  void add(const MultiIndex& j, cplx a) {
    if (j.size() < 1) throw ValidationError("constant terms are not allowed");
    terms_[j] += a;
  }
  void add(std::initializer_list<ModeIndex> j, cplx a) { add(MultiIndex(j), a); }

  cplx coeff(const MultiIndex& j) const {
    auto it = terms_.find(j);
    return it == terms_.end() ? cplx{} : it->second;
  }

  const Map& terms() const { return terms_; }
  Map& terms() { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Terms sorted by (degree, codes); used for deterministic output.
  std::vector<std::pair<MultiIndex, cplx>> sorted_terms() const {
    std::vector<std::pair<MultiIndex, cplx>> v(terms_.begin(), terms_.end());
    std::sort(v.begin(), v.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
  }

  int max_degree() const {
    int d = 0;
    for (const auto& [j, a] : terms_) d = std::max(d, static_cast<int>(j.size()));
    return d;
  }
  int min_degree() const {
    int d = 0;
    for (const auto& [j, a] : terms_)
      d = d == 0 ? static_cast<int>(j.size())
                 : std::min(d, static_cast<int>(j.size()));
    return d;
  }
  int max_mode() const {
    int k = 0;
    for (const auto& [j, a] : terms_) k = std::max(k, j.sup_index());
    return k;
  }

  bool zero_momentum() const {
    for (const auto& [j, a] : terms_)
      if (j.momentum() != 0) return false;
    return true;
  }

  /// Largest |a_{bar j} - conj(a_j)| over the support.
  double reality_defect() const {
    double d = 0.0;
    for (const auto& [j, a] : terms_)
      d = std::max(d, std::abs(coeff(j.bar()) - std::conj(a)));
    return d;
  }
  bool is_real(double rel_tol = 1e-12) const {
    return reality_defect() <= rel_tol * std::max(1.0, max_abs());
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [j, a] : terms_) m = std::max(m, std::abs(a));
    return m;
  }

  /// Drops coefficients with |a| < rel * max|a| (and exact zeros).
  void prune(double rel = 1e-15) {
    const double cut = rel * max_abs();
    std::erase_if(terms_, [cut](const auto& kv) {
      return std::abs(kv.second) <= cut;
    });
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [j, a] : o.terms_) terms_[j] += a;
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [j, a] : o.terms_) terms_[j] -= a;
    return *this;
  }
  Polynomial& operator*=(cplx s) {
    for (auto& [j, a] : terms_) a *= s;
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(cplx s, Polynomial p) { return p *= s; }

  /// Homogeneous component of degree d.
  Polynomial degree_part(int d) const {
    Polynomial out;
    for (const auto& [j, a] : terms_)
      if (static_cast<int>(j.size()) == d) out.terms_.emplace(j, a);
    return out;
  }

  /// Terms with zero momentum only.
  Polynomial zero_momentum_part() const {
    Polynomial out;
    for (const auto& [j, a] : terms_)
      if (j.momentum() == 0) out.terms_.emplace(j, a);
    return out;
  }

 private:
  Map terms_;
};

/// sum over degrees l of sup_{|j| = l} |a_j|.
inline double poly_norm(const Polynomial& P) {
  std::map<std::size_t, double> sup;
  for (const auto& [j, a] : P.terms()) {
    auto& s = sup[j.size()];
    s = std::max(s, std::abs(a));
  }
  double n = 0.0;
  for (const auto& [l, s] : sup) n += s;
  return n;
}

namespace detail {
inline void check_in_range(const Polynomial& P, const State& z) {
  if (P.max_mode() > static_cast<int>(z.size()))
    throw std::out_of_range("polynomial uses mode " +
                            std::to_string(P.max_mode()) +
                            " beyond truncation K=" + std::to_string(z.size()));
}
inline cplx monomial_value(const MultiIndex& j, const State& z) {
  cplx v = 1.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto e = j[i];
    v *= z.z(e.k, e.delta);
  }
  return v;
}
}  // namespace detail

inline cplx evaluate(const Polynomial& P, const State& z) {
  detail::check_in_range(P, z);
  cplx s = 0.0;
  for (const auto& [j, a] : P.terms()) s += a * detail::monomial_value(j, z);
  return s;
}

/// Gradient dP/dz_j, returned in State layout (xi slot = dP/dxi_k,
/// eta slot = dP/deta_k).
inline State gradient(const Polynomial& P, const State& z) {
  detail::check_in_range(P, z);
  State g(z.size());
  for (const auto& [j, a] : P.terms()) {
    const std::size_t n = j.size();
    const auto* c = j.codes();
    std::size_t i = 0;
    while (i < n) {
      std::size_t run = i;
      while (run < n && c[run] == c[i]) ++run;
      const std::size_t mult = run - i;
      // product of all factors except one copy of entry c[i]
      cplx prod = a * static_cast<double>(mult);
      for (std::size_t t = 0; t < n; ++t) {
        if (t == i) continue;
        const auto e = ModeIndex::from_code(c[t]);
        prod *= z.z(e.k, e.delta);
      }
      const auto e = ModeIndex::from_code(c[i]);
      g.z(e.k, e.delta) += prod;
      i = run;
    }
  }
  return g;
}

/// X_P(z): xi'_k = -i dP/deta_k, eta'_k = i dP/dxi_k.
inline State vector_field(const Polynomial& P, const State& z) {
  const State g = gradient(P, z);
  State f(z.size());
  const cplx I(0.0, 1.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    f.xi()[i] = -I * g.eta()[i];
    f.eta()[i] = I * g.xi()[i];
  }
  return f;
}

/// {P, Q} = i sum_k (dP/deta_k dQ/dxi_k - dP/dxi_k dQ/deta_k), computed
/// term by term: an entry e of a P-monomial contracts against an entry
/// bar(e) of a Q-monomial. Coefficients below 1e-15 of the result's maximum
/// are dropped.
inline Polynomial poisson_bracket(const Polynomial& P, const Polynomial& Q,
                                  double prune_rel = 1e-15) {
  Polynomial out;
  if (P.empty() || Q.empty()) return out;

  // Inverted index of Q: code -> (term, multiplicity).
  struct Hit {
    const MultiIndex* index;
    cplx coeff;
    double mult;
  };
  std::unordered_map<std::uint16_t, std::vector<Hit>> by_entry;
  for (const auto& [j, b] : Q.terms()) {
    const auto* c = j.codes();
    std::size_t i = 0;
    while (i < j.size()) {
      std::size_t run = i;
      while (run < j.size() && c[run] == c[i]) ++run;
      by_entry[c[i]].push_back({&j, b, static_cast<double>(run - i)});
      i = run;
    }
  }

  const cplx I(0.0, 1.0);
  auto& acc = out.terms();
  for (const auto& [jp, a] : P.terms()) {
    const auto* c = jp.codes();
    std::size_t i = 0;
    while (i < jp.size()) {
      std::size_t run = i;
      while (run < jp.size() && c[run] == c[i]) ++run;
      const double m1 = static_cast<double>(run - i);
      const ModeIndex e = ModeIndex::from_code(c[i]);
      auto it = by_entry.find(e.bar().code());
      if (it != by_entry.end()) {
        const MultiIndex rest_p = jp.without(e);
        // P holds eta_k and Q holds xi_k: +i; P holds xi_k, Q holds eta_k: -i.
        const cplx sign = e.delta < 0 ? I : -I;
        for (const auto& h : it->second) {
          const MultiIndex rest_q = h.index->without(e.bar());
          const MultiIndex j = MultiIndex::merge(rest_p, rest_q);
          if (j.size() == 0) continue;
          acc[j] += sign * (m1 * h.mult) * a * h.coeff;
        }
      }
      i = run;
    }
  }
  out.prune(prune_rel);
  return out;
}

/// H0 = sum_k omega_k xi_k eta_k.
inline Polynomial quadratic_hamiltonian(const FrequencyTable& freq) {
  Polynomial H0;
  for (int k = 1; k <= static_cast<int>(freq.size()); ++k)
    H0.add({xi_(k), eta_(k)}, freq.omega(k));
  return H0;
}

// ---------------------------------------------------------------------------
// Text format: one term per line, "+k1 -k2 ... re(a) im(a)". Lines starting
// with '#' are comments.

inline void write_polynomial(std::ostream& os, const Polynomial& P,
                             const std::string& comment = {}) {
  if (!comment.empty()) os << "# " << comment << '\n';
  for (const auto& [j, a] : P.sorted_terms()) {
    os << j.to_string() << ' ' << detail::fmt17(a.real()) << ' '
       << detail::fmt17(a.imag()) << '\n';
  }
}

/// Loads a polynomial, re-canonicalizing indices; throws if the result is
/// not real to relative tolerance `reality_tol` (pass a negative value to
/// skip the check).
inline Polynomial read_polynomial(std::istream& is, double reality_tol = 1e-12) {
  Polynomial P;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.size() < 3) throw ValidationError("malformed polynomial line: " + line);
    std::vector<ModeIndex> entries;
    for (std::size_t i = 0; i + 2 < tok.size(); ++i) {
      const auto& t = tok[i];
      if (t.size() < 2 || (t[0] != '+' && t[0] != '-'))
        throw ValidationError("index token must carry a sign: " + t);
      const int k = std::stoi(t.substr(1));
      if (k < 1) throw ValidationError("mode number must be >= 1: " + t);
      entries.emplace_back(k, t[0] == '+' ? 1 : -1);
    }
    const double re = std::strtod(tok[tok.size() - 2].c_str(), nullptr);
    const double im = std::strtod(tok[tok.size() - 1].c_str(), nullptr);
    P.add(MultiIndex(entries), cplx(re, im));
  }
  if (reality_tol >= 0.0 && !P.is_real(reality_tol))
    throw ValidationError("loaded polynomial violates a_{bar j} = conj(a_j)");
  return P;
}

}  // namespace nlkg
