#pragma once

// Linear part of the Klein-Gordon problem on [0, pi] with Dirichlet
// conditions: convolution potential, eigenvalues, frequencies and the
// smoothing multiplier acting on the sine basis phi_k = pi^{-1/2} sin(kx).

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlkg {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Convolution potential V(x) = sum_k v_k cos(kx), stored through its unit
/// coefficients v'_k in [-1/2, 1/2]; v_k = M (1+k)^{-s} v'_k is always derived.
struct PotentialSpec {
  double s = 2.0;
  double M = 1.0;
  std::vector<double> unit_coeffs;  // v'_1 .. v'_K

  std::size_t size() const { return unit_coeffs.size(); }

  void validate() const {
    if (!(s > 0.0)) throw ValidationError("potential.s must be positive");
    if (!(M > 0.0)) throw ValidationError("potential.M must be positive");
    for (std::size_t i = 0; i < unit_coeffs.size(); ++i) {
      const double u = unit_coeffs[i];
      if (!(u >= -0.5 && u <= 0.5))
        throw ValidationError("potential.unit_coeffs[" + std::to_string(i) +
                              "] outside [-1/2, 1/2]");
    }
  }

  static PotentialSpec zero(std::size_t K, double s = 2.0, double M = 1.0) {
    return PotentialSpec{s, M, std::vector<double>(K, 0.0)};
  }
};

/// v_k for k = 1..K (index 0 holds k = 1).
inline std::vector<double> build_potential(const PotentialSpec& spec) {
  spec.validate();
  std::vector<double> v(spec.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    v[i] = spec.M * std::pow(1.0 + k, -spec.s) * spec.unit_coeffs[i];
  }
  return v;
}

inline double eigenvalue(int k, double v_k) {
  return static_cast<double>(k) * static_cast<double>(k) + v_k;
}

namespace detail {
inline void check_frequency_args(int k, double c, double lambda) {
  if (k < 1) throw ValidationError("mode number must be >= 1");
  if (!(c >= 1.0)) throw ValidationError("speed parameter c must be >= 1");
  if (!(lambda > 0.0))
    throw ValidationError("eigenvalue lambda_" + std::to_string(k) +
                          " must be positive");
}
}  // namespace detail

/// omega = c sqrt(c^2 + lambda), evaluated literally.
inline double frequency_direct(int k, double c, double v_k) {
  const double lambda = eigenvalue(k, v_k);
  detail::check_frequency_args(k, c, lambda);
  return c * std::sqrt(c * c + lambda);
}

/// omega = c^2 + lambda / (1 + sqrt(1 + lambda/c^2)); no cancellation in
/// omega - c^2.
inline double frequency_stable(int k, double c, double v_k) {
  const double lambda = eigenvalue(k, v_k);
  detail::check_frequency_args(k, c, lambda);
  return c * c + lambda / (1.0 + std::sqrt(1.0 + lambda / (c * c)));
}

/// Linear frequency omega_k; the cancellation-free branch is used whenever
/// lambda_k / c^2 < 1.
inline double frequency(int k, double c, double v_k) {
  const double lambda = eigenvalue(k, v_k);
  detail::check_frequency_args(k, c, lambda);
  if (lambda / (c * c) < 1.0) return frequency_stable(k, c, v_k);
  return frequency_direct(k, c, v_k);
}

/// m_k = (c / sqrt(c^2 + lambda_k))^{1/2}, the diagonal symbol of the
/// smoothing operator (c / (c^2 - Delta + V~)^{1/2})^{1/2}.
inline double smoothing_multiplier(int k, double c, double v_k) {
  const double lambda = eigenvalue(k, v_k);
  detail::check_frequency_args(k, c, lambda);
  return std::sqrt(1.0 / std::sqrt(1.0 + lambda / (c * c)));
}

/// Tabulated linear data for modes 1..K at fixed c. Also caches the weights
/// w_k = (sqrt(c^2+lambda_k)/c)^{1/2} used by the (q,p) <-> (xi,eta) map;
/// the smoothing multiplier is m_k = 1 / w_k.
class FrequencyTable {
 public:
  FrequencyTable(double c, const PotentialSpec& potential)
      : c_(c), potential_(potential) {
    if (!(c >= 1.0)) throw ValidationError("c must be >= 1");
    const auto v = build_potential(potential);
    const std::size_t K = v.size();
    if (K == 0) throw ValidationError("truncation K must be >= 1");
    v_ = v;
    lambdas_.resize(K);
    omegas_.resize(K);
    weights_.resize(K);
    multipliers_.resize(K);
    for (std::size_t i = 0; i < K; ++i) {
      const int k = static_cast<int>(i + 1);
      lambdas_[i] = eigenvalue(k, v[i]);
      omegas_[i] = frequency(k, c, v[i]);
      multipliers_[i] = smoothing_multiplier(k, c, v[i]);
      weights_[i] = 1.0 / multipliers_[i];
    }
  }

  static FrequencyTable flat(std::size_t K, double c) {
    return FrequencyTable(c, PotentialSpec::zero(K));
  }

  double c() const { return c_; }
  std::size_t size() const { return omegas_.size(); }
  const PotentialSpec& potential() const { return potential_; }

  // 1-based accessors.
  double lambda(int k) const { return lambdas_.at(index(k)); }
  double omega(int k) const { return omegas_.at(index(k)); }
  double weight(int k) const { return weights_.at(index(k)); }
  double multiplier(int k) const { return multipliers_.at(index(k)); }
  double v(int k) const { return v_.at(index(k)); }

  std::span<const double> lambdas() const { return lambdas_; }
  std::span<const double> omegas() const { return omegas_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> multipliers() const { return multipliers_; }

  void write_csv(std::ostream& os) const {
    const auto old = os.precision(17);
    os << "k,lambda_k,omega_k\n";
    for (std::size_t i = 0; i < size(); ++i)
      os << (i + 1) << ',' << lambdas_[i] << ',' << omegas_[i] << '\n';
    os.precision(old);
  }

 private:
  std::size_t index(int k) const {
    if (k < 1 || static_cast<std::size_t>(k) > omegas_.size())
      throw std::out_of_range("mode " + std::to_string(k) +
                              " outside frequency table");
    return static_cast<std::size_t>(k - 1);
  }

  double c_;
  PotentialSpec potential_;
  std::vector<double> v_;
  std::vector<double> lambdas_;
  std::vector<double> omegas_;
  std::vector<double> weights_;
  std::vector<double> multipliers_;
};

}  // namespace nlkg
