#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "nlkg/nonlinearity.hpp"
#include "nlkg/testing/oracles.hpp"

using namespace nlkg;
using namespace nlkg::testing;

namespace {
constexpr double pi = std::numbers::pi;

// int_0^pi F(u(x)) dx with u = sum_k m_k (xi_k + eta_k) / sqrt 2 phi_k(x).
cplx quadrature_energy(const NonlinearitySpec& spec, const FrequencyTable& f, const State& z) {
  using boost::math::quadrature::gauss;
  auto u = [&](double x) {
    cplx s = 0.0;
    for (int k = 1; k <= static_cast<int>(z.size()); ++k)
      s += f.multiplier(k) * (z.xi(k) + z.eta(k)) * std::sin(k * x);
    return s / std::sqrt(2.0 * pi);
  };
  double re = 0.0, im = 0.0;
  const int panels = 16;
  for (int p = 0; p < panels; ++p) {
    const double a = p * pi / panels, b = (p + 1) * pi / panels;
    re += gauss<double, 100>::integrate([&](double x) { return spec.F(u(x)).real(); }, a, b);
    im += gauss<double, 100>::integrate([&](double x) { return spec.F(u(x)).imag(); }, a, b);
  }
  return {re, im};
}
}  // namespace

TEST(BasisIntegral, Examples) {
  EXPECT_NEAR(basis_product_integral({1, 2, 3}), 0.0, 1e-15);
  EXPECT_NEAR(basis_product_integral({1, 1, 1}), 4.0 / 3.0 * std::pow(pi, -1.5), 1e-15);
  EXPECT_NEAR(basis_product_integral({1, 1}), 0.5, 1e-15);
  EXPECT_NEAR(basis_product_integral({1, 1, 1, 1}), 3.0 / (8.0 * pi), 1e-15);
  EXPECT_THROW(basis_product_integral({}), ValidationError);
  EXPECT_THROW(basis_product_integral({0, 1}), ValidationError);
}

TEST(BasisIntegral, MatchesQuadrature) {
  CounterRng rng(31, streams::tests);
  for (int i = 0; i < 500; ++i) {
    const int m = 2 + static_cast<int>(rng.uniform() * 5);
    std::vector<int> ks(static_cast<std::size_t>(m));
    for (auto& k : ks) k = 1 + static_cast<int>(rng.uniform() * 32);
    EXPECT_NEAR(basis_product_integral(ks), quadrature_product_integral(ks), 1e-12);
  }
}

TEST(Expansion, CubicCoefficientAtLargeC) {
  NonlinearitySpec spec{{{3, 1.0}}, 0.5, 1.0};
  const auto f = FrequencyTable::flat(2, 1e6);
  const auto N = expand_nonlinearity(spec, f, 4, MomentumProjection::keep_all);
  const double expected = 0.25 * 6.0 * 0.25 * std::pow(f.multiplier(1), 4) * 3.0 / (8.0 * pi);
  EXPECT_NEAR(N[4].coeff(MultiIndex{xi_(1), xi_(1), eta_(1), eta_(1)}).real(), expected, 1e-15);
  EXPECT_TRUE(N[3].empty());
}

TEST(Expansion, ZeroNonlinearity) {
  NonlinearitySpec spec{{}, 0.5, 1.0};
  const auto N = expand_nonlinearity(spec, FrequencyTable::flat(4, 1.0), 8);
  for (const auto& P : N) EXPECT_TRUE(P.empty());
}

TEST(Expansion, RejectsLowOrderTerms) {
  NonlinearitySpec spec{{{2, 1.0}}, 0.5, 1.0};
  EXPECT_THROW(expand_nonlinearity(spec, FrequencyTable::flat(4, 1.0), 4), ValidationError);
}

TEST(Expansion, BudgetIsEnforced) {
  NonlinearitySpec spec{{{7, 1.0}}, 0.5, 1.0};
  ExpansionBudget budget;
  budget.max_mode_multisets = 1000;
  EXPECT_THROW(expand_nonlinearity(spec, FrequencyTable::flat(16, 1.0), 8,
                                   MomentumProjection::strict, budget),
               ValidationError);
}

TEST(Expansion, AgreesWithQuadratureOfThePrimitive) {
  NonlinearitySpec spec{{{3, 1.0}, {4, -0.5}, {5, 0.3}}, 0.5, 1.0};
  PotentialSpec pot{2.0, 1.0, {0.2, -0.4, 0.1, 0.3, -0.2, 0.0}};
  const FrequencyTable f(1.4, pot);
  const auto N = expand_nonlinearity(spec, f, 6, MomentumProjection::keep_all);
  Polynomial total;
  for (const auto& P : N) total += P;
  CounterRng rng(32, streams::tests);
  for (int i = 0; i < 5; ++i) {
    const State z = random_state(rng, 6, 0.5, 0.8, i % 2 == 0);
    const cplx a = evaluate(total, z);
    const cplx b = quadrature_energy(spec, f, z);
    EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(b)));
  }
}

TEST(Expansion, RealGradientConsistentAndDecaying) {
  NonlinearitySpec spec{{{3, 1.0}, {5, 1.0}}, 0.5, 1.0};
  const auto f = FrequencyTable::flat(6, 1.0);
  const auto N = expand_nonlinearity(spec, f, 6);
  CounterRng rng(33, streams::tests);
  for (int d : {4, 6}) {
    const Polynomial& P = N[static_cast<std::size_t>(d)];
    ASSERT_FALSE(P.empty());
    EXPECT_TRUE(P.is_real());
    EXPECT_TRUE(P.zero_momentum());
    EXPECT_LE(poly_norm(P) * std::pow(spec.R0, d), spec.M);
    const State z = random_state(rng, 6, 0.5, 0.5, true);
    const State X = vector_field(P, z);
    EXPECT_LE(max_abs_diff(X, finite_difference_field(P, z, 1e-5)),
              1e-6 * std::max(1.0, max_abs(X)));
  }
}

TEST(MomentumReport, Examples) {
  const auto empty = momentum_support_report(Polynomial{});
  EXPECT_EQ(empty.zero_mass, 0.0);
  EXPECT_EQ(empty.nonzero_mass, 0.0);

  Polynomial Z;
  Z.add(MultiIndex{xi_(1), eta_(1), xi_(2), eta_(2)}, 0.5);
  EXPECT_EQ(momentum_support_report(Z).zero_fraction(), 1.0);

  NonlinearitySpec spec{{{3, 1.0}}, 0.5, 1.0};
  const auto N = expand_nonlinearity(spec, FrequencyTable::flat(4, 1.0), 4,
                                     MomentumProjection::keep_all);
  const auto r = momentum_support_report(N[4]);
  EXPECT_GT(r.zero_mass, 0.0);
  EXPECT_GT(r.nonzero_mass, 0.0);
  EXPECT_GT(r.mass_by_momentum.size(), 1u);
  const auto strict = expand_nonlinearity(spec, FrequencyTable::flat(4, 1.0), 4);
  EXPECT_EQ(momentum_support_report(strict[4]).nonzero_mass, 0.0);
}
