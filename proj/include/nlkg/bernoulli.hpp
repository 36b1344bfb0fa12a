#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <vector>

#include "nlkg/spectral_basis.hpp"

namespace nlkg {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr int kBernoulliBudget = 64;

/// B_0..B_n from sum_{i=0}^{k} C(k+1, i) B_i = 0, B_0 = 1 (so B_1 = -1/2,
/// the z / (e^z - 1) convention).
inline std::vector<Rational> bernoulli_table(int n) {
  if (n < 0 || n > kBernoulliBudget)
    throw ValidationError("Bernoulli index must lie in [0, " +
                          std::to_string(kBernoulliBudget) + "]");
  std::vector<Rational> B(static_cast<std::size_t>(n + 1));
  B[0] = 1;
  for (int k = 1; k <= n; ++k) {
    // C(k+1, i) for i = 0..k
    Rational acc = 0;
    boost::multiprecision::cpp_int binom = 1;
    for (int i = 0; i < k; ++i) {
      acc += Rational(binom) * B[static_cast<std::size_t>(i)];
      binom = binom * (k + 1 - i) / (i + 1);
    }
    // binom is now C(k+1, k) = k+1
    B[static_cast<std::size_t>(k)] = -acc / Rational(binom);
  }
  return B;
}

inline Rational bernoulli(int k) {
  return bernoulli_table(k)[static_cast<std::size_t>(k)];
}

inline double to_double(const Rational& q) {
  return static_cast<double>(q);
}

}  // namespace nlkg
