#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nlkg/spectral_basis.hpp"

using namespace nlkg;

TEST(Potential, ZeroUnitCoefficientsGiveZeroPotential) {
  for (double v : build_potential(PotentialSpec::zero(8))) EXPECT_EQ(v, 0.0);
}

TEST(Potential, DefiningFormula) {
  PotentialSpec a{2.0, 1.0, {0.5}};
  EXPECT_NEAR(build_potential(a)[0], 0.125, 1e-15);
  PotentialSpec b{1.0, 4.0, {0.0, 0.0, -0.5}};
  EXPECT_NEAR(build_potential(b)[2], -0.5, 1e-15);
}

TEST(Potential, RejectsInvalidSpecs) {
  EXPECT_THROW(build_potential({2.0, 1.0, {0.6}}), ValidationError);
  EXPECT_THROW(build_potential({0.0, 1.0, {0.0}}), ValidationError);
  EXPECT_THROW(build_potential({2.0, -1.0, {0.0}}), ValidationError);
}

TEST(Potential, BoundedByHalfScale) {
  PotentialSpec p{1.5, 3.0, {0.5, -0.5, 0.25, -0.1}};
  const auto v = build_potential(p);
  for (std::size_t i = 0; i < v.size(); ++i)
    EXPECT_LE(std::abs(v[i]), 0.5 * p.M * std::pow(2.0 + i, -p.s) + 1e-15);
}

TEST(Frequency, Examples) {
  EXPECT_NEAR(frequency(1, 1.0, 0.0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(frequency(1, 10.0, 0.0), 10.0 * std::sqrt(101.0), 1e-12);
  EXPECT_NEAR(frequency(2, 1.0, 0.0), std::sqrt(5.0), 1e-15);
  EXPECT_THROW(frequency(1, 1.0, -1.0), ValidationError);
}

TEST(Frequency, BranchesAgreeOnLogGrid) {
  for (double c = 1.0; c <= 1e6; c *= 3.7) {
    for (int k = 1; k <= 512; k += 7) {
      const double a = frequency_direct(k, c, 0.1);
      const double b = frequency_stable(k, c, 0.1);
      EXPECT_LE(std::abs(a - b), 1e-12 * a) << "c=" << c << " k=" << k;
    }
  }
}

TEST(Frequency, GapsApproachMultiplesOfC) {
  const double c = 3.0;
  const int l = 10000;
  for (int j = 1; j <= 3; ++j)
    EXPECT_NEAR(frequency(l + j, c, 0.0) - frequency(l, c, 0.0), j * c, 1e-6 * c);
}

TEST(Frequency, MonotoneForZeroPotential) {
  const auto f = FrequencyTable::flat(64, 2.5);
  for (int k = 2; k <= 64; ++k) EXPECT_GT(f.omega(k), f.omega(k - 1));
  for (int k = 1; k <= 64; ++k) EXPECT_GE(f.omega(k), f.c() * f.c());
}

TEST(SmoothingMultiplier, Examples) {
  EXPECT_NEAR(smoothing_multiplier(1, 1.0, 0.0), std::pow(0.5, 0.25), 1e-15);
  EXPECT_NEAR(smoothing_multiplier(1, 1e3, 0.0), 1.0 - 2.5e-7, 1e-7);
  const double big = smoothing_multiplier(10000, 4.0, 0.0);
  EXPECT_NEAR(big, std::sqrt(4.0 / 10000.0), 1e-6);
}

TEST(FrequencyTable, AccessorsAndCsv) {
  const auto f = FrequencyTable::flat(4, 1.0);
  EXPECT_NEAR(f.omega(3), std::sqrt(10.0), 1e-15);
  EXPECT_NEAR(f.omega(4), std::sqrt(17.0), 1e-15);
  EXPECT_NEAR(f.weight(2) * f.multiplier(2), 1.0, 1e-15);
  EXPECT_THROW(f.omega(5), std::out_of_range);
  EXPECT_THROW(FrequencyTable::flat(4, 0.5), ValidationError);
  std::ostringstream os;
  f.write_csv(os);
  EXPECT_EQ(os.str().substr(0, 17), "k,lambda_k,omega_");
}
