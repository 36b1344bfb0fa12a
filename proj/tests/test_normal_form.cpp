#include <gtest/gtest.h>

#include <cmath>

#include "nlkg/bernoulli.hpp"
#include "nlkg/nonlinearity.hpp"
#include "nlkg/normal_form.hpp"
#include "nlkg/testing/oracles.hpp"

using namespace nlkg;
using namespace nlkg::testing;

namespace {
const cplx I(0.0, 1.0);

Polynomial real_random(CounterRng& rng, int degree, int terms, int K) {
  const Polynomial P = random_homogeneous(rng, degree, terms, K, true);
  Polynomial R;
  for (const auto& [j, a] : P.terms()) {
    R.add(j, 0.5 * a);
    R.add(j.bar(), 0.5 * std::conj(a));
  }
  return R;
}

double residual(const Polynomial& chi, const Polynomial& Z, const Polynomial& Q,
                const FrequencyTable& f) {
  Polynomial r = poisson_bracket(chi, quadratic_hamiltonian(f), 0.0);
  r -= Z;
  r += Q;
  return r.max_abs();
}

struct CubicSetup {
  FrequencyTable freq = FrequencyTable::flat(8, 1.0);
  NonlinearitySpec spec{{{3, 1.0}}, 0.5, 1.0};
  std::vector<Polynomial> N = expand_nonlinearity(spec, freq, 4);
  NormalFormResult nf = recursive_construct(N, freq, {.r = 4, .N = 8});
};
}  // namespace

TEST(Bernoulli, Values) {
  EXPECT_EQ(bernoulli(0), Rational(1));
  EXPECT_EQ(bernoulli(1), Rational(-1, 2));
  EXPECT_EQ(bernoulli(2), Rational(1, 6));
  EXPECT_EQ(bernoulli(3), Rational(0));
  EXPECT_EQ(bernoulli(4), Rational(-1, 30));
  EXPECT_EQ(bernoulli(12), Rational(-691, 2730));
  for (int k = 3; k <= 31; k += 2) EXPECT_EQ(bernoulli(k), Rational(0));
  EXPECT_THROW(bernoulli(65), ValidationError);
}

TEST(Homological, ActionMonomialGoesToZ) {
  Polynomial Q;
  Q.add(MultiIndex{xi_(1), xi_(1), eta_(1), eta_(1)}, 0.3);
  const auto s = solve_homological(Q, FrequencyTable::flat(2, 1.0), 4, 1e-8);
  EXPECT_TRUE(s.chi.empty());
  EXPECT_EQ(max_coeff_diff(s.zed, Q), 0.0);
}

TEST(Homological, DivisionByDivisor) {
  Polynomial Q;
  const MultiIndex j{xi_(2), eta_(1), eta_(1)};
  const cplx q(0.4, -0.2);
  Q.add(j, q);
  const auto f = FrequencyTable::flat(2, 1.0);
  const auto s = solve_homological(Q, f, 2, 1e-8);
  EXPECT_TRUE(s.zed.empty());
  EXPECT_NEAR(std::abs(s.chi.coeff(j)), 1.68817 * std::abs(q), 1e-5 * std::abs(q));
  EXPECT_NEAR(s.min_divisor, 2 * std::sqrt(2.0) - std::sqrt(5.0), 1e-15);
  EXPECT_LE(residual(s.chi, s.zed, Q, f), 1e-15);
}

TEST(Homological, ZeroInput) {
  const auto s = solve_homological(Polynomial{}, FrequencyTable::flat(2, 1.0), 2, 1e-8);
  EXPECT_TRUE(s.chi.empty());
  EXPECT_TRUE(s.zed.empty());
}

TEST(Homological, ResidualAndSupportOnRandomSources) {
  PotentialSpec pot{2.0, 1.0, {0.3, -0.2, 0.1, 0.45, -0.35, 0.05}};
  const FrequencyTable f(1.3, pot);
  CounterRng rng(41, streams::tests);
  for (int i = 0; i < 20; ++i) {
    const Polynomial Q = real_random(rng, 3 + i % 3, 20, 6);
    const int N = 2 + i % 4;
    const auto s = solve_homological(Q, f, N, 1e-10);
    EXPECT_LE(residual(s.chi, s.zed, Q, f), 1e-12 * std::max(1.0, Q.max_abs()));
    EXPECT_TRUE(normal_form_predicate(s.zed, N));
    for (const auto& [j, a] : s.chi.terms()) EXPECT_FALSE(in_normal_support(j, N));
    EXPECT_LE(poly_norm(s.zed), poly_norm(Q) + 1e-15);
    EXPECT_LE(poly_norm(s.chi), poly_norm(Q) / s.min_divisor * (1 + 1e-12));
    EXPECT_TRUE(s.chi.is_real());
    EXPECT_TRUE(s.zed.is_real());
  }
}

TEST(Homological, FloorViolationNamesTheIndex) {
  Polynomial Q;
  Q.add(MultiIndex{xi_(2), eta_(1), eta_(1)}, 1.0);
  try {
    solve_homological(Q, FrequencyTable::flat(2, 1.0), 2, 1.0);
    FAIL() << "expected a divisor floor error";
  } catch (const DivisorFloorError& e) {
    EXPECT_EQ(e.index, (MultiIndex{xi_(2), eta_(1), eta_(1)}));
  }
  EXPECT_THROW(solve_homological(Q, FrequencyTable::flat(2, 1.0), 2, 0.0), ValidationError);
}

TEST(NormalFormPredicate, Examples) {
  Polynomial A;
  A.add(MultiIndex{xi_(3), eta_(3), xi_(1), eta_(1)}, 1.0);
  EXPECT_TRUE(normal_form_predicate(A, 1));
  Polynomial B;
  B.add(MultiIndex{xi_(5), eta_(4), eta_(4), xi_(3)}, 1.0);
  EXPECT_FALSE(normal_form_predicate(B, 4));
  EXPECT_TRUE(normal_form_predicate(B, 3));
}

TEST(Recursion, ZeroNonlinearity) {
  std::vector<Polynomial> N(7);
  const auto nf = recursive_construct(N, FrequencyTable::flat(4, 1.0), {.r = 6, .N = 4});
  for (int m = 3; m <= 6; ++m) {
    EXPECT_TRUE(nf.chi[static_cast<std::size_t>(m)].empty());
    EXPECT_TRUE(nf.zed[static_cast<std::size_t>(m)].empty());
  }
}

TEST(Recursion, BaseStepsUseTheNonlinearityDirectly) {
  const auto f = FrequencyTable::flat(5, 1.0);
  NonlinearitySpec spec{{{3, 1.0}, {4, 0.5}}, 0.5, 1.0};
  const auto N = expand_nonlinearity(spec, f, 5);
  const auto nf = recursive_construct(N, f, {.r = 5, .N = 5});
  EXPECT_TRUE(nf.chi[3].empty());
  EXPECT_EQ(max_coeff_diff(nf.q[4], N[4]), 0.0);
  EXPECT_LE(max_coeff_diff(nf.q[5], N[5]), 1e-15 * N[5].max_abs());
}

TEST(Recursion, PipelineInvariants) {
  PotentialSpec pot{2.0, 1.0, {0.3, -0.2, 0.1, 0.45, -0.35, 0.05}};
  const FrequencyTable f(1.0, pot);
  NonlinearitySpec spec{{{3, 1.0}, {5, 0.5}}, 0.5, 1.0};
  const auto N = expand_nonlinearity(spec, f, 6);
  const int Ncut = 4;
  const auto nf = recursive_construct(N, f, {.r = 6, .N = Ncut});
  for (int m = 3; m <= 6; ++m) {
    const auto& chi = nf.chi[static_cast<std::size_t>(m)];
    const auto& Z = nf.zed[static_cast<std::size_t>(m)];
    const auto& Q = nf.q[static_cast<std::size_t>(m)];
    EXPECT_LE(residual(chi, Z, Q, f), 1e-12 * std::max(1.0, Q.max_abs())) << "m=" << m;
    EXPECT_TRUE(normal_form_predicate(Z, Ncut));
    for (const auto& [j, a] : chi.terms()) EXPECT_FALSE(in_normal_support(j, Ncut));
    EXPECT_TRUE(chi.is_real(1e-10));
    EXPECT_TRUE(Z.is_real(1e-10));
    EXPECT_LE(poly_norm(Z), poly_norm(Q) * (1 + 1e-12));
  }
  // odd degrees stay empty for an odd nonlinearity
  EXPECT_TRUE(nf.chi[5].empty());
  EXPECT_FALSE(nf.chi[6].empty());
  for (const auto& d : nf.diagnostics) EXPECT_LE(d.bound_ratio, 1.0 + 1e-12);
}

TEST(LieFlow, ZeroGeneratorIsIdentity) {
  CounterRng rng(42, streams::tests);
  const State z = random_state(rng, 5, 0.5, 0.1);
  EXPECT_EQ(max_abs_diff(lie_flow(Polynomial{}, z, 1.0), z), 0.0);
  EXPECT_THROW(lie_flow(Polynomial{}, z, 1.5), ValidationError);
}

TEST(LieFlow, RoundTripAndNearIdentity) {
  CubicSetup s;
  const Polynomial chi = s.nf.chi_total();
  ASSERT_FALSE(chi.empty());
  CounterRng rng(43, streams::tests);
  std::vector<double> eps, disp;
  for (double e : {1e-2, 1e-3}) {
    const State z = random_state(rng, 8, 0.5, e);
    const State y = lie_flow(chi, z, 1.0);
    EXPECT_LE(max_abs_diff(lie_flow(chi, y, -1.0), z), 1e-10 * e);
    EXPECT_LE(reality_defect(y), 1e-12 * e);
    eps.push_back(e);
    disp.push_back(analytic_norm(lie_displacement(chi, z, 1.0), 0.5));
  }
  EXPECT_GE(loglog_slope(eps, disp), 2.0);
}

TEST(RemainderProbe, TrivialCase) {
  const auto f = FrequencyTable::flat(4, 1.0);
  CounterRng rng(44, streams::tests);
  const State z = random_state(rng, 4, 0.5, 0.01);
  EXPECT_EQ(remainder_probe(f, Polynomial{}, Polynomial{}, Polynomial{}, {z}), 0.0);
}

TEST(RemainderProbe, ScalesBeyondTheConstructionDegree) {
  CubicSetup s;
  const Polynomial N = s.N[4];
  const Polynomial chi = s.nf.chi_total();
  const Polynomial Z = s.nf.zed_total();
  CounterRng rng(45, streams::tests);
  std::vector<double> eps, defect;
  for (double e : {1e-2, 3e-3, 1e-3}) {
    std::vector<State> samples;
    for (int i = 0; i < 3; ++i) samples.push_back(random_state(rng, 8, 0.5, e));
    eps.push_back(e);
    defect.push_back(remainder_probe(s.freq, N, chi, Z, samples));
    if (e == 1e-3) {
      for (const auto& z : samples) {
        EXPECT_LE(remainder_defect(s.freq, N, chi, Z, z), 1e-2 * std::abs(evaluate(N, z)));
      }
    }
  }
  EXPECT_GE(loglog_slope(eps, defect), 4.5);
}

TEST(ScalingPreset, RoundsChoices) {
  const auto p = log_scaling(0.5, 1e-4);
  const double L = std::log(1e4);
  EXPECT_EQ(p.N, static_cast<int>(std::lround(std::pow(L, 1.5))));
  EXPECT_EQ(p.r, std::max(3, static_cast<int>(std::lround(std::sqrt(L)))));
  EXPECT_THROW(log_scaling(1.5, 1e-4), ValidationError);
}
