#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "nlkg/config.hpp"

using namespace nlkg;

namespace {
RunConfig parse(const std::string& text) { return RunConfig::from_json(json::parse(text)); }

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}
}  // namespace

TEST(Config, DefaultsAreValid) {
  const RunConfig c = parse("{}");
  EXPECT_EQ(c.potential.K, 16);
  EXPECT_NEAR(c.tau(), 5.1, 1e-12);
  EXPECT_EQ(c.potential_seed(), c.seed);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesSections) {
  const RunConfig c = parse(R"({"c": 2.5, "potential": {"K": 8, "v_unit": [0,0,0,0,0,0,0,0.5]},
    "nonlinearity": {"taylor": [[3, 1.0], [5, -2.0]]},
    "norms": {"N": 6}, "sim": {"scheme": "yoshida4", "backend": "polynomial"},
    "normal_form": {"K": 8, "N": 6, "momentum_projection": "keep_all"},
    "nonres": {"tau": 3.0}})");
  EXPECT_EQ(c.c, 2.5);
  EXPECT_EQ(c.nonlinearity.taylor.size(), 2u);
  EXPECT_EQ(c.sim.scheme, Scheme::yoshida4);
  EXPECT_EQ(c.normal_form.momentum_projection, MomentumProjection::keep_all);
  EXPECT_EQ(c.tau(), 3.0);
  const auto f = c.frequencies();
  EXPECT_EQ(f.size(), 8u);
  EXPECT_NEAR(f.v(8), 0.5 * std::pow(9.0, -2.0), 1e-15);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(error_of(R"({"sim": {"dtt": 0.1}})").find("sim.dtt"), std::string::npos);
  EXPECT_NE(error_of(R"({"sim": {"dt": "fast"}})").find("sim.dt"), std::string::npos);
  EXPECT_NE(error_of(R"({"c": 0.5})").find("c must be"), std::string::npos);
  EXPECT_NE(error_of(R"({"norms": {"N": 40}})").find("norms.N"), std::string::npos);
  EXPECT_NE(error_of(R"({"nonlinearity": {"taylor": [[2, 1.0]]}})").find("nonlinearity.taylor"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"nonlinearity": {"taylor": [[4, 1.0]]}})").find("sim.backend"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"potential": {"v_unit": [0.7]}})").find("potential.v_unit"),
            std::string::npos);
}

TEST(Config, SeededPotentialIsReproducible) {
  const RunConfig a = parse(R"({"seed": 7})");
  const RunConfig b = parse(R"({"seed": 7})");
  const RunConfig c = parse(R"({"seed": 8})");
  EXPECT_EQ(a.potential_spec(16).unit_coeffs, b.potential_spec(16).unit_coeffs);
  EXPECT_NE(a.potential_spec(16).unit_coeffs, c.potential_spec(16).unit_coeffs);
  for (double u : a.potential_spec(16).unit_coeffs) EXPECT_LE(std::abs(u), 0.5);
}

TEST(CacheKey, StableUnderKeyOrderAndSensitiveToInputs) {
  const RunConfig a = parse(R"({"c": 2.0, "potential": {"K": 12, "s": 3.0}})");
  const RunConfig b = parse(R"({"potential": {"s": 3.0, "K": 12}, "c": 2.0})");
  const RunConfig k = parse(R"({"c": 2.0, "potential": {"K": 14, "s": 3.0}})");
  for (const char* sub : {"frequencies", "expand", "scan", "simulate", "verify-all"}) {
    EXPECT_EQ(cache_key(artifact_inputs(a, sub)), cache_key(artifact_inputs(b, sub)));
    EXPECT_NE(cache_key(artifact_inputs(a, sub)), cache_key(artifact_inputs(k, sub)));
  }
  const RunConfig o = parse(R"({"c": 2.0, "potential": {"K": 12, "s": 3.0}, "output": {"dir": "x"}})");
  EXPECT_EQ(cache_key(artifact_inputs(a, "verify-all")), cache_key(artifact_inputs(o, "verify-all")));
  EXPECT_EQ(cache_key(artifact_inputs(a, "frequencies")).size(), 16u);
}

TEST(CacheKey, ResolvedConfigRoundTrips) {
  const RunConfig a = parse(R"({"c": 1.5, "sim": {"T": 20}})");
  const RunConfig b = RunConfig::from_json(a.to_json());
  EXPECT_EQ(canonical_dump(a.to_json()), canonical_dump(b.to_json()));
}

TEST(Config, LoadsFileWithComments) {
  const auto path = std::filesystem::temp_directory_path() / "nlkg_config_test.json";
  {
    std::ofstream os(path);
    os << "{\n  // speed\n  \"c\": 3.0\n}\n";
  }
  EXPECT_EQ(load_config(path.string()).c, 3.0);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path.string()), ValidationError);
}
