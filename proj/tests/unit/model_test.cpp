#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "edgecache/errors.hpp"
#include "edgecache/model.hpp"
#include "support.hpp"

namespace edgecache {
namespace {

using testing::make_provider;

TEST(CachingPolicy, AcceptsSimplexPoints) {
  CachingPolicy p({0.25, 0.75});
  EXPECT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[1], 0.75);
}

TEST(CachingPolicy, RejectsBadWeights) {
  EXPECT_THROW(CachingPolicy({0.5, 0.6}), ConfigError);
  EXPECT_THROW(CachingPolicy({-0.1, 1.1}), ConfigError);
  EXPECT_THROW(CachingPolicy(std::vector<double>{}), ConfigError);
  EXPECT_NO_THROW(CachingPolicy({0.5, 0.5 + 5e-10}));
}

TEST(CachingPolicy, ProportionalAndUniform) {
  const std::vector<double> d{2.0, 1.0, 1.0};
  const auto p = CachingPolicy::proportional(d);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(CachingPolicy::uniform(4)[3], 0.25);
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_THROW(CachingPolicy::proportional(zeros), ConfigError);
}

TEST(Deployment, TotalSlots) {
  Deployment d;
  d.slots_per_unit = 70;
  d.unit_count = 3;
  EXPECT_EQ(d.total_slots(), 210);
}

TEST(Validation, ReportsPaths) {
  Deployment d;
  d.reservation = 0.0;
  try {
    validate(d);
    FAIL() << "zero reservation accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/deployment/reservation");
  }

  GameConfig g;
  g.providers.push_back(make_provider({1.0}, {1.0}));
  g.providers.push_back(make_provider({1.0, 2.0}, {1.0, 1.0}));
  g.providers[1].classes[1].count = 0;
  try {
    validate(g);
    FAIL() << "zero count accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/providers/1/classes/1/count");
  }
}

TEST(Validation, NeedsSomeReachableContent) {
  GameConfig g;
  g.providers.push_back(make_provider({1.0, 0.0}, {0.0, 3.0}));
  EXPECT_THROW(validate(g), ConfigError);
}

TEST(Validation, FixedPolicyLength) {
  auto p = make_provider({1.0, 1.0}, {1.0, 1.0});
  p.kind = CachingRateOptimizer{CachingPolicy({1.0})};
  EXPECT_THROW(validate(p), ConfigError);
}

TEST(Availability, MatchesGeometry) {
  Deployment d;
  d.sc_density = 786.2;
  d.radius = 0.073;
  d.slots_per_unit = 70;
  const ContentClass c{0.3, 600, 0.0};
  EXPECT_NEAR(derive_availability(d, c),
              std::numbers::pi * 0.073 * 0.073 * 786.2 * 70.0 / 600.0, 1e-15);
  d.radius = 0.0;
  EXPECT_EQ(derive_availability(d, c), 0.0);
}

TEST(FillFraction, SaturatesAndStartsEmpty) {
  Deployment d;
  d.slots_per_unit = 100;
  d.unit_count = 1;
  d.expiry_rate = 0.5;
  EXPECT_EQ(fill_fraction(10.0, d, 0.0), 0.0);
  EXPECT_NEAR(fill_fraction(10.0, d, 1.0), 10.0 / 50.0 * (1.0 - std::exp(-0.5)), 1e-15);
  EXPECT_NEAR(fill_fraction(10.0, d, 1e6), 0.2, 1e-15);
  EXPECT_EQ(fill_fraction(1000.0, d, 1e6), 1.0);
}

TEST(Share, SteadyShareAndHitProbability) {
  EXPECT_DOUBLE_EQ(steady_share(1.0, 0.0, 1.0), 0.5);
  EXPECT_EQ(steady_share(0.0, 5.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(hit_probability(0.1, 100, 50), 0.2);
  EXPECT_EQ(hit_probability(0.9, 10000, 1000), 1.0);
}

TEST(Mcr, ZeroRateCostsTotalDemand) {
  const auto p = make_provider({2.0, 1.0, 0.5}, {4.0, 4.0, 1.0});
  EXPECT_DOUBLE_EQ(mcr(CachingPolicy::uniform(3), 0.0, 3.0, p, 1.0), 3.5);
}

TEST(Mcr, MatchesDirectSum) {
  const auto p = make_provider({2.0, 1.0}, {4.0, 4.0});
  const CachingPolicy u({0.7, 0.3});
  const double x = 1.0 / 3.0;
  EXPECT_NEAR(mcr(u, 1.0, 1.0, p, 1.0),
              2.0 * std::exp(-4.0 * x * 0.7) + std::exp(-4.0 * x * 0.3), 1e-15);
  EXPECT_THROW(mcr(CachingPolicy::uniform(3), 1.0, 0.0, p, 1.0), ConfigError);
}

}  // namespace
}  // namespace edgecache
