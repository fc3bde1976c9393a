#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "edgecache/errors.hpp"
#include "edgecache/policy.hpp"
#include "support.hpp"

namespace edgecache {
namespace {

using testing::log_uniform;
using testing::make_provider;

// Golden-section minimum of the two-class cost over u_1 in [0, 1].
double two_class_minimum(const Provider& p, double b_c, double b_opp, double delta) {
  auto f = [&](double u) { return mcr(CachingPolicy({u, 1.0 - u}), b_c, b_opp, p, delta); };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (f(a) < f(b)) hi = b;
    else lo = a;
  }
  return std::min({f(0.5 * (lo + hi)), f(0.0), f(1.0)});
}

double simplex_grid_minimum(const Provider& p, double b_c, double b_opp, double delta, int n) {
  double best = INFINITY;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double u1 = static_cast<double>(i) / n;
      const double u2 = static_cast<double>(j) / n;
      const double u3 = std::max(0.0, 1.0 - u1 - u2);
      best = std::min(best, mcr(CachingPolicy({u1, u2, u3}), b_c, b_opp, p, delta));
    }
  }
  return best;
}

TEST(Waterfill, HandDerivedFixture) {
  const auto p = make_provider({2.0, 1.0}, {4.0, 4.0});
  const auto sol = optimal_policy(1.0, 0.0, p, 1.0);
  EXPECT_NEAR(sol.policy[0], 0.6733, 1e-3);
  EXPECT_NEAR(sol.policy[1], 0.3267, 1e-3);
  EXPECT_NEAR(mcr(sol.policy, 1.0, 0.0, p, 1.0), 1.0405, 1e-3);
  EXPECT_NEAR(optimal_mcr(1.0, 0.0, p, 1.0), 1.0405, 1e-3);
  EXPECT_EQ(sol.active_count, 2u);
  EXPECT_TRUE(sol.kkt.satisfied());

  const auto thresholds = activation_thresholds(p, 1.0, 0.0).rate_thresholds();
  ASSERT_EQ(thresholds.size(), 1u);
  EXPECT_NEAR(thresholds[0], 0.2096, 1e-3);
  EXPECT_NEAR(m2_threshold({2.0, 1.0}, {4.0, 4.0}, 0.0, 1.0), 0.2096, 1e-3);

  // Two active classes: U = K exp(-2 x) with K = 2 sqrt 2 here.
  EXPECT_NEAR(m2_closed_form(1.0, 0.0, {2.0, 1.0}, {4.0, 4.0}, 1.0).cost,
              2.0 * std::sqrt(2.0) * std::exp(-1.0), 1e-12);
}

TEST(Waterfill, SingleClassTakesEverything) {
  const auto p = make_provider({3.0}, {2.0});
  const auto sol = optimal_policy(5.0, 1.0, p, 1.0);
  EXPECT_EQ(sol.policy[0], 1.0);
  EXPECT_EQ(sol.active_count, 1u);
}

TEST(Waterfill, ZeroRateIsTheLimitPolicy) {
  const auto p = make_provider({1.0, 2.0, 0.5}, {1.0, 3.0, 9.0});
  const auto sol = optimal_policy(0.0, 1.0, p, 1.0);
  EXPECT_EQ(sol.policy, limit_policy_small_b(p));
  EXPECT_EQ(sol.policy[1], 1.0);  // d*Lambda = 6 is the largest
  EXPECT_THROW(optimal_policy(-1.0, 1.0, p, 1.0), SolverError);
}

TEST(Waterfill, OrderBreaksTiesByIndex) {
  const auto p = make_provider({1.0, 2.0, 1.0}, {2.0, 1.0, 2.0});
  EXPECT_EQ(caching_order(p), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Waterfill, MatchesGoldenSectionForTwoClasses) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> rate(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = make_provider({log_uniform(gen, 0.1, 100.0), log_uniform(gen, 0.1, 100.0)},
                                 {log_uniform(gen, 0.1, 100.0), log_uniform(gen, 0.1, 100.0)});
    const double b = rate(gen), b_opp = rate(gen), delta = 0.1 + rate(gen);
    const auto sol = optimal_policy(b, b_opp, p, delta);
    EXPECT_LE(mcr(sol.policy, b, b_opp, p, delta), two_class_minimum(p, b, b_opp, delta) + 1e-10);
  }
}

TEST(Waterfill, BeatsSimplexGridForThreeClasses) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> rate(0.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> d, a;
    for (int i = 0; i < 3; ++i) {
      d.push_back(log_uniform(gen, 0.1, 100.0));
      a.push_back(log_uniform(gen, 0.1, 100.0));
    }
    const auto p = make_provider(d, a);
    const double b = rate(gen), b_opp = rate(gen), delta = 0.1 + rate(gen);
    const auto sol = optimal_policy(b, b_opp, p, delta);
    EXPECT_LE(mcr(sol.policy, b, b_opp, p, delta),
              simplex_grid_minimum(p, b, b_opp, delta, 200) + 1e-9);
    EXPECT_TRUE(sol.kkt.satisfied());
  }
}

TEST(Waterfill, ActiveSetStructure) {
  const auto p = make_provider({5.0, 1.0, 0.2, 3.0}, {1.0, 2.0, 4.0, 0.5});
  for (double b : {0.01, 0.3, 1.0, 4.0, 50.0}) {
    const auto sol = optimal_policy(b, 2.0, p, 1.0);
    for (std::size_t k = 0; k < sol.order.size(); ++k) {
      const std::size_t i = sol.order[k];
      if (k < sol.active_count) {
        EXPECT_GT(sol.policy[i], 0.0);
        // (b + delta) / (Lambda_i b_c) (log(1/nu) - log alpha_i)
        const double scale = 1.0 / (p.classes[i].availability * sol.share);
        EXPECT_NEAR(sol.policy[i], scale * (sol.log_water_level - std::log(sol.alphas[i])), 1e-8);
      } else {
        EXPECT_EQ(sol.policy[i], 0.0);
        EXPECT_LE(sol.log_water_level, std::log(sol.alphas[i]) + 1e-12);
      }
    }
  }
}

TEST(Waterfill, HugeAvailabilitiesStayFinite) {
  const auto p = make_provider({0.589, 0.294, 0.118}, {7000.0, 1700.0, 700.0});
  const auto sol = optimal_policy(70.0, 300.0, p, 2.0);
  for (double u : sol.policy.weights()) EXPECT_TRUE(std::isfinite(u));
  EXPECT_TRUE(sol.kkt.satisfied());
  EXPECT_TRUE(std::isfinite(sol.log_water_level));
}

TEST(ClosedForm, SortedFormulaAgrees) {
  const auto p = make_provider({3.0, 2.0, 1.0}, {5.0, 2.0, 1.0});
  for (double b : {0.05, 0.5, 2.0, 10.0, 100.0}) {
    const auto a = optimal_policy(b, 1.0, p, 1.0);
    const auto c = optimal_policy_sorted_closed_form(b, 1.0, p, 1.0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.policy[i], c.policy[i], 1e-12);
  }
  const auto unsorted = make_provider({1.0, 2.0}, {1.0, 1.0});
  EXPECT_THROW(optimal_policy_sorted_closed_form(1.0, 0.0, unsorted, 1.0), SolverError);
}

TEST(ClosedForm, CurveEqualsPolicyCost) {
  const auto p = make_provider({0.589, 0.294, 0.118}, {30.0, 7.5, 3.0});
  for (double b = 0.0; b <= 400.0; b += 3.7) {
    const double direct = mcr(optimal_policy(b, 300.0, p, 2.0).policy, b, 300.0, p, 2.0);
    EXPECT_NEAR(optimal_mcr(b, 300.0, p, 2.0), direct, 1e-12 * (1.0 + direct));
  }
}

TEST(ClosedForm, TwoClassThresholdEdgeCases) {
  // Gamma = 1/4 and Lambda_1 = log 4: the second class never switches on.
  const double l = std::log(4.0);
  EXPECT_TRUE(std::isinf(m2_threshold({4.0, 1.0}, {l, l}, 1.0, 1.0)));
  // Equal d*Lambda: both active from the start.
  EXPECT_EQ(m2_threshold({1.0, 2.0}, {2.0, 1.0}, 1.0, 1.0), 0.0);
  // Roles swap when the second class ranks higher.
  EXPECT_NEAR(m2_threshold({1.0, 2.0}, {4.0, 4.0}, 0.0, 1.0),
              m2_threshold({2.0, 1.0}, {4.0, 4.0}, 0.0, 1.0), 1e-15);
}

TEST(ClosedForm, TwoClassMatchesWaterfill) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> rate(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 2> d{log_uniform(gen, 0.1, 100.0), log_uniform(gen, 0.1, 100.0)};
    const std::array<double, 2> a{log_uniform(gen, 0.1, 100.0), log_uniform(gen, 0.1, 100.0)};
    const auto p = make_provider({d[0], d[1]}, {a[0], a[1]});
    const double b = rate(gen), b_opp = rate(gen), delta = 0.1 + rate(gen);
    const auto closed = m2_closed_form(b, b_opp, d, a, delta);
    const double u = optimal_mcr(b, b_opp, p, delta);
    EXPECT_NEAR(closed.cost, u, 1e-8 * u);
    EXPECT_NEAR(closed.policy[0], optimal_policy(b, b_opp, p, delta).policy[0], 1e-8);
  }
}

TEST(Derivative, MatchesFiniteDifferences) {
  const auto p = make_provider({2.0, 1.0, 0.5}, {4.0, 3.0, 6.0});
  const double b_opp = 1.5, delta = 0.5;
  const auto knots = activation_thresholds(p, delta, b_opp).rate_thresholds();
  const double h = 1e-5 * (b_opp + delta);
  for (double b = 0.01; b < 20.0; b *= 1.37) {
    bool near_knot = false;
    for (double k : knots) near_knot = near_knot || std::abs(b - k) < 10 * h;
    if (near_knot) continue;
    const double fd = (optimal_mcr(b + h, b_opp, p, delta) - optimal_mcr(b - h, b_opp, p, delta)) / (2 * h);
    const double an = optimal_mcr_derivative(b, b_opp, p, delta);
    EXPECT_NEAR(an, fd, 1e-4 * std::abs(fd));
  }
}

TEST(Derivative, ContinuousAtThresholds) {
  const auto p = make_provider({2.0, 1.0, 0.5}, {4.0, 3.0, 6.0});
  const auto knots = activation_thresholds(p, 0.5, 1.5).rate_thresholds();
  ASSERT_FALSE(knots.empty());
  for (double k : knots) {
    const double left = optimal_mcr_derivative(k * (1 - 1e-12), 1.5, p, 0.5);
    const double right = optimal_mcr_derivative(k * (1 + 1e-12), 1.5, p, 0.5);
    EXPECT_NEAR(left, right, 1e-6 * std::abs(left));
  }
}

TEST(SmallRate, LimitCostIsTopClassOnly) {
  const auto p = make_provider({2.0, 1.0}, {4.0, 4.0});
  const double b = 0.1;
  const double x = b / (b + 1.0);
  EXPECT_NEAR(limit_mcr_small_b(b, 0.0, p, 1.0), 2.0 * std::exp(-4.0 * x) + 1.0, 1e-15);
  EXPECT_NEAR(optimal_mcr(b, 0.0, p, 1.0), limit_mcr_small_b(b, 0.0, p, 1.0), 1e-15);
}

}  // namespace
}  // namespace edgecache
