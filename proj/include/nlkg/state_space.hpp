#pragma once

// Truncated phase-space points z = (xi_k, eta_k)_{k<=K}.

#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlkg/spectral_basis.hpp"

namespace nlkg {

using cplx = std::complex<double>;

/// Dense truncated state. Mode k is stored at position k-1.
class State {
 public:
  State() = default;
  explicit State(std::size_t K) : xi_(K), eta_(K) {}
  State(std::vector<cplx> xi, std::vector<cplx> eta)
      : xi_(std::move(xi)), eta_(std::move(eta)) {
    if (xi_.size() != eta_.size())
      throw ValidationError("xi and eta must have equal length");
  }

  /// Real state with eta = conj(xi).
  static State real(std::vector<cplx> xi) {
    std::vector<cplx> eta(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) eta[i] = std::conj(xi[i]);
    return State(std::move(xi), std::move(eta));
  }

  std::size_t size() const { return xi_.size(); }

  cplx& xi(int k) { return xi_.at(index(k)); }
  cplx& eta(int k) { return eta_.at(index(k)); }
  cplx xi(int k) const { return xi_.at(index(k)); }
  cplx eta(int k) const { return eta_.at(index(k)); }

  /// z_j for j = (k, delta): xi_k if delta = +1, eta_k otherwise.
  cplx z(int k, int delta) const { return delta > 0 ? xi(k) : eta(k); }
  cplx& z(int k, int delta) { return delta > 0 ? xi(k) : eta(k); }

  std::span<cplx> xi() { return xi_; }
  std::span<cplx> eta() { return eta_; }
  std::span<const cplx> xi() const { return xi_; }
  std::span<const cplx> eta() const { return eta_; }

  State& operator+=(const State& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) {
      xi_[i] += o.xi_[i];
      eta_[i] += o.eta_[i];
    }
    return *this;
  }
  State& operator-=(const State& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) {
      xi_[i] -= o.xi_[i];
      eta_[i] -= o.eta_[i];
    }
    return *this;
  }
  State& operator*=(cplx a) {
    for (auto& x : xi_) x *= a;
    for (auto& x : eta_) x *= a;
    return *this;
  }
  friend State operator+(State a, const State& b) { return a += b; }
  friend State operator-(State a, const State& b) { return a -= b; }
  friend State operator*(cplx a, State b) { return b *= a; }

  bool operator==(const State&) const = default;

 private:
  std::size_t index(int k) const {
    if (k < 1 || static_cast<std::size_t>(k) > xi_.size())
      throw std::out_of_range("mode " + std::to_string(k) +
                              " outside truncation K=" +
                              std::to_string(xi_.size()));
    return static_cast<std::size_t>(k - 1);
  }
  void check_same(const State& o) const {
    if (o.size() != size()) throw ValidationError("state truncation mismatch");
  }

  std::vector<cplx> xi_;
  std::vector<cplx> eta_;
};

inline void check_rho(double rho) {
  if (!(rho > 0.0)) throw ValidationError("rho must be positive");
}

/// ||z||_rho = sum_k e^{rho k} (|xi_k| + |eta_k|). On real states this is
/// twice sum_k e^{rho k} |xi_k|.
inline double analytic_norm(const State& z, double rho) {
  check_rho(rho);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    s += std::exp(rho * static_cast<double>(i + 1)) *
         (std::abs(z.xi()[i]) + std::abs(z.eta()[i]));
  return s;
}

/// R^N_rho(z): the analytic norm restricted to modes k >= N.
inline double tail_norm(const State& z, double rho, int N) {
  check_rho(rho);
  if (N < 1) throw ValidationError("tail cutoff N must be >= 1");
  double s = 0.0;
  for (std::size_t i = static_cast<std::size_t>(N - 1); i < z.size(); ++i)
    s += std::exp(rho * static_cast<double>(i + 1)) *
         (std::abs(z.xi()[i]) + std::abs(z.eta()[i]));
  return s;
}

/// xi_k = (q_k w_k - i p_k / w_k) / sqrt 2, eta_k = conj(xi_k).
inline State to_normal_coords(std::span<const double> q,
                              std::span<const double> p,
                              const FrequencyTable& freq) {
  if (q.size() != p.size() || q.size() != freq.size())
    throw ValidationError("q, p and frequency table lengths differ");
  const double r2 = std::sqrt(0.5);
  std::vector<cplx> xi(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double w = freq.weights()[i];
    xi[i] = r2 * cplx(q[i] * w, -p[i] / w);
  }
  return State::real(std::move(xi));
}

struct FieldCoefficients {
  std::vector<double> q;
  std::vector<double> p;
};

/// Inverse of to_normal_coords; uses both xi and eta so that it is exact on
/// real states: q_k = (xi_k + eta_k) / (sqrt 2 w_k), p_k = i w_k (xi_k - eta_k) / sqrt 2.
inline FieldCoefficients from_normal_coords(const State& z,
                                            const FrequencyTable& freq) {
  if (z.size() != freq.size())
    throw ValidationError("state and frequency table lengths differ");
  const double r2 = std::sqrt(0.5);
  FieldCoefficients out{std::vector<double>(z.size()),
                        std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double w = freq.weights()[i];
    const cplx s = z.xi()[i] + z.eta()[i];
    const cplx d = z.xi()[i] - z.eta()[i];
    out.q[i] = (r2 * s / w).real();
    out.p[i] = (cplx(0.0, 1.0) * r2 * w * d).real();
  }
  return out;
}

/// I_k = xi_k eta_k.
inline cplx action(const State& z, int k) { return z.xi(k) * z.eta(k); }

/// sum_k e^{rho k} | |xi_k(z1)| - |xi_k(z0)| |.
inline double action_distance(const State& z1, const State& z0, double rho) {
  if (z1.size() != z0.size())
    throw ValidationError("states of different truncation");
  double s = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i)
    s += std::exp(rho * static_cast<double>(i + 1)) *
         std::abs(std::abs(z1.xi()[i]) - std::abs(z0.xi()[i]));
  return s;
}

/// max_k |eta_k - conj(xi_k)|; zero on real states.
inline double reality_defect(const State& z) {
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    d = std::max(d, std::abs(z.eta()[i] - std::conj(z.xi()[i])));
  return d;
}

inline bool is_real(const State& z, double tol = 1e-12) {
  return reality_defect(z) <= tol;
}

/// Diagonal phase action xi_k -> e^{i k theta} xi_k, eta_k -> e^{-i k theta} eta_k.
inline State momentum_rotation(const State& z, double theta) {
  State out = z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const cplx ph = std::polar(1.0, theta * static_cast<double>(i + 1));
    out.xi()[i] *= ph;
    out.eta()[i] *= std::conj(ph);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format:
//   # nlkg-state K=<K> c=<c> rho=<rho>
//   k re(xi) im(xi) re(eta) im(eta)
// All reals are written with 17 significant digits.

struct StateHeader {
  std::size_t K = 0;
  double c = 1.0;
  double rho = 0.0;
};

namespace detail {
inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

inline void write_state(std::ostream& os, const State& z, double c,
                        double rho) {
  using detail::fmt17;
  os << "# nlkg-state K=" << z.size() << " c=" << fmt17(c)
     << " rho=" << fmt17(rho) << '\n';
  for (std::size_t i = 0; i < z.size(); ++i) {
    os << (i + 1) << ' ' << fmt17(z.xi()[i].real()) << ' '
       << fmt17(z.xi()[i].imag()) << ' ' << fmt17(z.eta()[i].real()) << ' '
       << fmt17(z.eta()[i].imag()) << '\n';
  }
}

inline State read_state(std::istream& is, StateHeader* header = nullptr) {
  std::string line;
  StateHeader h;
  bool have_header = false;
  std::vector<cplx> xi, eta;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# nlkg-state", 0) == 0) {
        std::istringstream ls(line.substr(12));
        std::string tok;
        while (ls >> tok) {
          const auto eq = tok.find('=');
          if (eq == std::string::npos) continue;
          const std::string key = tok.substr(0, eq);
          const std::string val = tok.substr(eq + 1);
          if (key == "K") h.K = std::stoul(val);
          else if (key == "c") h.c = std::strtod(val.c_str(), nullptr);
          else if (key == "rho") h.rho = std::strtod(val.c_str(), nullptr);
        }
        have_header = true;
      }
      continue;
    }
    std::istringstream ls(line);
    std::size_t k;
    std::string a, b, c, d;
    if (!(ls >> k >> a >> b >> c >> d))
      throw ValidationError("malformed state line: " + line);
    if (k != xi.size() + 1)
      throw ValidationError("state lines must list k = 1..K in order");
    xi.emplace_back(std::strtod(a.c_str(), nullptr),
                    std::strtod(b.c_str(), nullptr));
    eta.emplace_back(std::strtod(c.c_str(), nullptr),
                     std::strtod(d.c_str(), nullptr));
  }
  if (!have_header) throw ValidationError("missing nlkg-state header");
  if (h.K != xi.size())
    throw ValidationError("header K does not match number of lines");
  if (header) *header = h;
  return State(std::move(xi), std::move(eta));
}

}  // namespace nlkg
