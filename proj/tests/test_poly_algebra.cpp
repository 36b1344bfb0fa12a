#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nlkg/poly_algebra.hpp"
#include "nlkg/testing/oracles.hpp"

using namespace nlkg;
using namespace nlkg::testing;

namespace {
const cplx I(0.0, 1.0);

Polynomial monomial(std::initializer_list<ModeIndex> e, cplx a = 1.0) {
  Polynomial P;
  P.add(MultiIndex(e), a);
  return P;
}

// (P + conj P(bar z)) / 2 is real.
Polynomial realify(const Polynomial& P) {
  Polynomial R;
  for (const auto& [j, a] : P.terms()) {
    R.add(j, 0.5 * a);
    R.add(j.bar(), 0.5 * std::conj(a));
  }
  return R;
}
}  // namespace

TEST(MultiIndex, Momentum) {
  EXPECT_EQ(momentum(MultiIndex{xi_(1), eta_(1)}), 0);
  EXPECT_EQ(momentum(MultiIndex{xi_(2), xi_(3), eta_(5)}), 0);
  EXPECT_EQ(momentum(MultiIndex{xi_(1), xi_(1), xi_(1)}), 3);
}

TEST(MultiIndex, CanonicalFormAndConjugation) {
  const MultiIndex a{xi_(1), eta_(3), xi_(2)};
  const MultiIndex b{xi_(2), xi_(1), eta_(3)};
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.bar().bar(), a);
  EXPECT_EQ(a.sup_index(), 3);
  EXPECT_GE(a.index_product(), a.sup_index());
}

TEST(MultiIndex, Divisor) {
  const auto f = FrequencyTable::flat(4, 1.0);
  EXPECT_EQ(divisor(MultiIndex{xi_(1), eta_(1)}, f), 0.0);
  EXPECT_NEAR(divisor(MultiIndex{xi_(2), eta_(1)}, f), std::sqrt(5.0) - std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(divisor(MultiIndex{xi_(2), eta_(1), eta_(1)}, f),
              std::sqrt(5.0) - 2 * std::sqrt(2.0), 1e-15);
  EXPECT_THROW(divisor(MultiIndex{xi_(5), eta_(1)}, f), std::out_of_range);
}

TEST(MultiIndex, ResonantDivisorsVanish) {
  PotentialSpec pot{2.0, 1.0, {0.1, -0.3, 0.2, 0.4, -0.5, 0.05}};
  const FrequencyTable f(3.3, pot);
  const MultiIndex j{xi_(6), eta_(6), xi_(2), xi_(5), eta_(2), eta_(5)};
  ASSERT_TRUE(j.is_resonant());
  double s = 0.0;
  for (int k : {6, 6, 2, 5, 2, 5}) s += f.omega(k);
  EXPECT_LE(std::abs(divisor(j, f)), 1e-12 * s);
}

TEST(MultiIndex, Resonance) {
  EXPECT_TRUE(is_resonant(MultiIndex{xi_(1), eta_(1)}));
  EXPECT_FALSE(is_resonant(MultiIndex{xi_(1), eta_(1), xi_(2)}));
  EXPECT_FALSE(is_resonant(MultiIndex{xi_(2), xi_(2), eta_(2), eta_(1)}));
}

TEST(MultiIndex, ResonanceMatchesBruteForce) {
  for (const auto& m : brute_force_multisets(4, 3)) {
    std::vector<ModeIndex> e;
    for (auto [k, d] : m) e.emplace_back(k, d);
    EXPECT_EQ(MultiIndex(e).is_resonant(), brute_force_resonant(m));
    EXPECT_EQ(MultiIndex(e).mu(), brute_force_mu(m));
  }
}

TEST(MultiIndex, Mu) {
  EXPECT_EQ(mu(MultiIndex{xi_(7), xi_(5), eta_(3), xi_(2)}), 3);
  EXPECT_EQ(mu(MultiIndex{xi_(7), eta_(7), xi_(7)}), 7);
  EXPECT_EQ(mu(MultiIndex{xi_(9), xi_(1), eta_(1), xi_(1)}), 1);
  EXPECT_THROW(mu(MultiIndex{xi_(1), eta_(1)}), std::domain_error);
}

TEST(PolyNorm, Examples) {
  EXPECT_EQ(poly_norm(Polynomial{}), 0.0);
  EXPECT_EQ(poly_norm(monomial({xi_(1), eta_(1)}, 3.0)), 3.0);
  Polynomial P = monomial({xi_(1), eta_(1)}, 1.0);
  P.add(MultiIndex{xi_(2), eta_(1), eta_(1)}, 0.25);
  P.add(MultiIndex{xi_(1), xi_(1), eta_(2)}, 0.1);
  EXPECT_NEAR(poly_norm(P), 1.25, 1e-15);
}

TEST(Evaluate, Examples) {
  State z(1);
  z.xi(1) = 2.0;
  z.eta(1) = 3.0;
  EXPECT_EQ(evaluate(monomial({xi_(1), eta_(1)}), z), cplx(6.0));
  EXPECT_EQ(evaluate(Polynomial{}, z), cplx(0.0));
  EXPECT_THROW(evaluate(monomial({xi_(2), eta_(2)}), z), std::out_of_range);
}

TEST(Evaluate, NormBound) {
  CounterRng rng(21, streams::tests);
  for (int i = 0; i < 50; ++i) {
    const Polynomial P = random_homogeneous(rng, 3, 20, 6, false);
    const State z = random_state(rng, 6, 0.5, rng.uniform(0.1, 2.0), false);
    EXPECT_LE(std::abs(evaluate(P, z)), poly_norm(P) * std::pow(analytic_norm(z, 0.5), 3));
  }
}

TEST(VectorField, HarmonicOscillator) {
  State z(1);
  z.xi(1) = cplx(0.3, 0.1);
  z.eta(1) = cplx(0.3, -0.1);
  const double w = 1.7;
  const State X = vector_field(monomial({xi_(1), eta_(1)}, w), z);
  EXPECT_NEAR(std::abs(X.xi(1) + I * w * z.xi(1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(X.eta(1) - I * w * z.eta(1)), 0.0, 1e-15);
  EXPECT_EQ(max_abs(vector_field(Polynomial{}, z)), 0.0);
}

TEST(VectorField, MatchesFiniteDifferences) {
  CounterRng rng(22, streams::tests);
  for (int i = 0; i < 20; ++i) {
    Polynomial P = random_homogeneous(rng, 3, 15, 5, true);
    P += random_homogeneous(rng, 4, 15, 5, true);
    const State z = random_state(rng, 5, 0.5, 0.8, false);
    const State X = vector_field(P, z);
    const State F = finite_difference_field(P, z, 1e-5);
    EXPECT_LE(max_abs_diff(X, F), 1e-6 * std::max(1.0, max_abs(X)));
  }
}

TEST(Bracket, Examples) {
  const Polynomial I1 = monomial({xi_(1), eta_(1)});
  EXPECT_TRUE(poisson_bracket(I1, I1).empty());
  const Polynomial B = poisson_bracket(I1, monomial({xi_(1), xi_(1), eta_(2)}));
  ASSERT_EQ(B.size(), 1u);
  EXPECT_NEAR(std::abs(B.coeff(MultiIndex{xi_(1), xi_(1), eta_(2)}) - 2.0 * I), 0.0, 1e-15);
  EXPECT_TRUE(poisson_bracket(Polynomial{}, I1).empty());
}

TEST(Bracket, ActionPolynomialsCommuteWithH0) {
  const auto f = FrequencyTable::flat(5, 1.3);
  Polynomial Z = monomial({xi_(1), eta_(1), xi_(3), eta_(3)}, 0.7);
  Z.add(MultiIndex{xi_(2), xi_(2), eta_(2), eta_(2)}, -0.2);
  const Polynomial B = poisson_bracket(quadratic_hamiltonian(f), Z);
  EXPECT_LE(B.max_abs(), 1e-14);
}

TEST(Bracket, MonomialEigenvalueOfH0) {
  const auto f = FrequencyTable::flat(5, 1.0);
  const MultiIndex j{xi_(2), eta_(1), eta_(1)};
  Polynomial Q;
  Q.add(j, 1.0);
  const Polynomial B = poisson_bracket(Q, quadratic_hamiltonian(f));
  EXPECT_NEAR(std::abs(B.coeff(j) + I * divisor(j, f)), 0.0, 1e-14);
}

TEST(Bracket, Antisymmetry) {
  CounterRng rng(23, streams::tests);
  for (int i = 0; i < 30; ++i) {
    const Polynomial P = random_homogeneous(rng, 3, 10, 6, true);
    const Polynomial Q = random_homogeneous(rng, 4, 10, 6, true);
    Polynomial S = poisson_bracket(P, Q);
    S += poisson_bracket(Q, P);
    EXPECT_LE(S.max_abs(), 1e-14);
  }
}

TEST(Bracket, JacobiIdentity) {
  CounterRng rng(24, streams::tests);
  for (int i = 0; i < 20; ++i) {
    const Polynomial P = random_homogeneous(rng, 3, 10, 4, true);
    const Polynomial Q = random_homogeneous(rng, 3, 10, 4, true);
    const Polynomial R = random_homogeneous(rng, 2 + (i % 2), 10, 4, true);
    Polynomial J = poisson_bracket(P, poisson_bracket(Q, R, 0), 0);
    J += poisson_bracket(Q, poisson_bracket(R, P, 0), 0);
    J += poisson_bracket(R, poisson_bracket(P, Q, 0), 0);
    const double scale = std::max(1.0, poly_norm(P) * poly_norm(Q) * poly_norm(R));
    EXPECT_LE(J.max_abs(), 1e-12 * scale);
  }
}

TEST(Bracket, ZeroMomentumAndRealityClosure) {
  CounterRng rng(25, streams::tests);
  for (int i = 0; i < 20; ++i) {
    const Polynomial P = realify(random_homogeneous(rng, 3, 10, 6, true));
    const Polynomial Q = realify(random_homogeneous(rng, 4, 10, 6, true));
    ASSERT_TRUE(P.is_real());
    const Polynomial B = poisson_bracket(P, Q);
    EXPECT_TRUE(B.zero_momentum());
    EXPECT_TRUE(B.is_real(1e-12));
    if (!B.empty()) {
      EXPECT_EQ(B.min_degree(), 5);
      EXPECT_EQ(B.max_degree(), 5);
    }
  }
}

TEST(Bracket, NormLaw) {
  CounterRng rng(26, streams::tests);
  for (int i = 0; i < 200; ++i) {
    const int k = 3 + static_cast<int>(rng.uniform() * 2);
    const int l = 3 + static_cast<int>(rng.uniform() * 2);
    const Polynomial P = random_homogeneous(rng, k, 8, 6, true);
    const Polynomial Q = random_homogeneous(rng, l, 8, 6, true);
    EXPECT_LE(poly_norm(poisson_bracket(P, Q)), 2.0 * k * l * poly_norm(P) * poly_norm(Q));
  }
}

TEST(Bracket, ChainRuleAlongFlow) {
  CounterRng rng(27, streams::tests);
  for (int i = 0; i < 10; ++i) {
    const Polynomial P = random_homogeneous(rng, 3, 10, 5, true);
    const Polynomial Q = random_homogeneous(rng, 4, 10, 5, true);
    const State z = random_state(rng, 5, 0.5, 0.7, false);
    const State X = vector_field(P, z);
    const double h = 1e-5;
    State zp = z, zm = z;
    zp += State(X) *= cplx(h);
    zm += State(X) *= cplx(-h);
    const cplx dQ = (evaluate(Q, zp) - evaluate(Q, zm)) / (2.0 * h);
    const cplx B = evaluate(poisson_bracket(Q, P), z);
    EXPECT_LE(std::abs(dQ - B), 1e-7 * std::max(1.0, std::abs(B)));
  }
}

TEST(PolynomialFormat, RoundTrip) {
  CounterRng rng(28, streams::tests);
  const Polynomial P = realify(random_homogeneous(rng, 4, 30, 6, true));
  std::stringstream ss;
  write_polynomial(ss, P, "test");
  const Polynomial back = read_polynomial(ss);
  EXPECT_EQ(back.size(), P.size());
  EXPECT_EQ(max_coeff_diff(back, P), 0.0);
}

TEST(PolynomialFormat, RejectsNonRealInput) {
  std::stringstream ss("+2 -1 -1 1.0 0.0\n");
  EXPECT_THROW(read_polynomial(ss), ValidationError);
}
