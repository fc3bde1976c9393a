#pragma once

// Optimal caching policy (log-scale waterfilling) and the optimal
// missed-cache-rate curve U_c(b_c, b_opp) it induces.
//
// Classes are ranked by demand * availability, decreasing. With
// w_i = log(d_i Lambda_i) and share x = b_c / (b_c + b_opp + delta), the k
// highest ranked classes are active and
//
//   u_i = (tau + w_i) / (Lambda_i x),   tau = (x - sum_{i<=k} w_i/Lambda_i) / B_k,
//   B_k = sum_{i<=k} 1/Lambda_i.
//
// tau is the water level log(1/nu) shifted by log(x), which keeps every
// quantity finite for availabilities in the thousands.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "edgecache/model.hpp"

namespace edgecache {

/// KKT certificate for a candidate policy. Duals are stored raw; the
/// residuals are relative to the level nu so the checks are scale free.
struct KktCertificate {
  double level = 0.0;                   ///< nu
  std::vector<double> duals;            ///< mu_i = nu - Lambda_i x d_i exp(-Lambda_i x u_i)
  double stationarity_residual = 0.0;   ///< max(|mu_i|/nu over active, |sum u - 1|)
  double min_relative_dual = 0.0;       ///< min mu_i/nu over inactive classes (1 if none)
  double complementary_slackness = 0.0; ///< max |mu_i u_i| / nu

  static constexpr double kStationarityTolerance = 1e-8;
  static constexpr double kDualTolerance = 1e-8;
  static constexpr double kSlacknessTolerance = 1e-10;

  bool satisfied() const noexcept {
    return stationarity_residual <= kStationarityTolerance &&
           min_relative_dual >= -kDualTolerance &&
           complementary_slackness <= kSlacknessTolerance;
  }
};

struct WaterfillSolution {
  CachingPolicy policy;
  double share = 0.0;              ///< x_c the policy was computed for
  double water_level = 0.0;        ///< 1/nu (may overflow to +inf)
  double log_water_level = 0.0;    ///< log(1/nu)
  std::vector<double> alphas;      ///< (b+delta)/(Lambda_i d_i b_c); +inf for degenerate classes
  std::size_t active_count = 0;
  std::vector<std::size_t> order;  ///< class indices by decreasing demand * availability
  KktCertificate kkt;
};

/// Ranking of classes by demand * availability, decreasing; ties keep the
/// original index order. Classes with demand * availability == 0 come last.
std::vector<std::size_t> caching_order(const Provider& provider);

/// Optimal MCR as a piecewise closed form. Thresholds in share space depend
/// on the provider only; b_opp and the reservation map them to rates.
class OptimalMcrCurve {
 public:
  struct Segment {
    double inverse_availability_sum = 0.0;  ///< B_k
    double weighted_log_sum = 0.0;          ///< sum_{i<=k} w_i / Lambda_i
    double tail_demand = 0.0;               ///< demand of the inactive classes
    double share_threshold = 0.0;           ///< x*_k, where class [k] switches on
  };

  explicit OptimalMcrCurve(const Provider& provider, double b_opp = 0.0,
                           double reservation = 1.0);

  double b_opp() const noexcept { return b_opp_; }
  double reservation() const noexcept { return reservation_; }
  double total_demand() const noexcept { return total_demand_; }
  std::span<const std::size_t> order() const noexcept { return order_; }
  std::span<const Segment> segments() const noexcept { return segments_; }

  /// x*_k for k >= 2 that are <= 1, nondecreasing.
  std::vector<double> share_thresholds() const;
  /// b*_k = (b_opp + delta) x*_k / (1 - x*_k) for retained x*_k < 1.
  std::vector<double> rate_thresholds() const;

  std::size_t active_count_at_share(double x) const;
  /// log(1/nu) + log(x) on the active segment.
  double level_at_share(double x) const;
  double value_at_share(double x) const;
  double slope_at_share(double x) const;

  double share(double b_c) const { return b_c / (b_c + b_opp_ + reservation_); }
  double value(double b_c) const { return value_at_share(share(b_c)); }
  double derivative(double b_c) const;

 private:
  double b_opp_;
  double reservation_;
  double total_demand_ = 0.0;
  std::vector<std::size_t> order_;
  std::vector<Segment> segments_;  // segments_[k-1] describes k active classes
};

/// Unique minimiser of mcr over the simplex. b_c == 0 returns the small-rate
/// limit; b_c < 0 raises SolverError(DegenerateInput).
WaterfillSolution optimal_policy(double b_c, double b_opp, const Provider& provider,
                                 double reservation);

/// Same solution via the popularity-sorted threshold formula. Requires
/// demands and availabilities both nonincreasing in class index.
WaterfillSolution optimal_policy_sorted_closed_form(double b_c, double b_opp,
                                                    const Provider& provider,
                                                    double reservation);

/// Everything on the top ranked class.
CachingPolicy limit_policy_small_b(const Provider& provider);
double limit_mcr_small_b(double b_c, double b_opp, const Provider& provider, double reservation);

OptimalMcrCurve activation_thresholds(const Provider& provider, double reservation, double b_opp);

/// U_c(b_c, b_opp) from the closed per-segment form.
double optimal_mcr(double b_c, double b_opp, const Provider& provider, double reservation);
/// dU_c/db_c.
double optimal_mcr_derivative(double b_c, double b_opp, const Provider& provider,
                              double reservation);

/// Two-class closed form.
struct TwoClassSolution {
  double cost = 0.0;
  CachingPolicy policy;
};

TwoClassSolution m2_closed_form(double b_c, double b_opp, std::array<double, 2> demand,
                                std::array<double, 2> availability, double reservation);
/// Rate above which the second-ranked class is cached; +inf if never, 0 on a tie.
double m2_threshold(std::array<double, 2> demand, std::array<double, 2> availability,
                    double b_opp, double reservation);

}  // namespace edgecache
