#pragma once

// Domain types for competitive edge caching and direct evaluation of the
// missed-cache-rate (MCR) cost.
//
// Units: distances in km, densities in small cells per km^2, rates in
// caching slots (or requests) per day. Availability is dimensionless.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace edgecache {

/// One popularity class of a content provider's catalogue.
struct ContentClass {
  double demand = 0.0;        ///< requests per day for a content of this class
  std::int64_t count = 1;     ///< number of contents in the class
  double availability = 0.0;  ///< pi r^2 Lambda N / count, or user supplied
};

/// Network environment shared by all providers.
struct Deployment {
  double sc_density = 1.0;          ///< small cells per km^2
  double radius = 0.0;              ///< UE covering radius, km
  std::int64_t slots_per_unit = 1;  ///< caching slots of a local edge cache unit
  std::int64_t unit_count = 1;      ///< number of local edge cache units
  double reservation = 1.0;         ///< operator's own caching rate, slots/day (> 0)
  double expiry_rate = 1.0;         ///< slot expiry rate, 1/day

  std::int64_t total_slots() const noexcept { return unit_count * slots_per_unit; }
};

/// A point on the probability simplex: the split of a provider's cache share
/// across its content classes.
class CachingPolicy {
 public:
  static constexpr double kSumTolerance = 1e-9;

  CachingPolicy() = default;
  /// Throws ConfigError unless every weight lies in [0, 1] and they sum to 1.
  explicit CachingPolicy(std::vector<double> weights);

  static CachingPolicy uniform(std::size_t classes);
  /// Weights proportional to `scores` (all >= 0, not all zero).
  static CachingPolicy proportional(std::span<const double> scores);

  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

  friend bool operator==(const CachingPolicy&, const CachingPolicy&) = default;

 private:
  std::vector<double> weights_;
};

/// Re-optimises its caching policy jointly with its caching rate.
struct SimultaneousOptimizer {};

/// Keeps `fixed_policy` and only chooses its caching rate.
struct CachingRateOptimizer {
  CachingPolicy fixed_policy;
};

using OptimizerKind = std::variant<SimultaneousOptimizer, CachingRateOptimizer>;

struct Provider {
  std::string name;
  std::vector<ContentClass> classes;
  double cap = 0.0;    ///< maximum caching rate B_c
  double price = 0.0;  ///< price per caching slot lambda_c
  OptimizerKind kind = SimultaneousOptimizer{};

  std::vector<double> demands() const;
  std::vector<double> availabilities() const;
  double total_demand() const;
  bool is_simultaneous() const noexcept {
    return std::holds_alternative<SimultaneousOptimizer>(kind);
  }
};

struct GameConfig {
  std::vector<Provider> providers;
  Deployment deployment;
};

// Validation throws ConfigError carrying a JSON-pointer style path.
void validate(const Deployment& deployment, std::string_view path = "/deployment");
void validate(const Provider& provider, std::string_view path = "/providers/0");
void validate(const GameConfig& config);

/// pi * radius^2 * sc_density * slots_per_unit / count.
double derive_availability(const Deployment& deployment, const ContentClass& content);

/// Copy of `provider` with every class availability derived from `deployment`.
Provider with_derived_availability(Provider provider, const Deployment& deployment);

/// Fraction of the total cache filled after `t` days from empty:
/// min{1, total_rate / (N0 eta) * (1 - exp(-eta t))}.
double fill_fraction(double total_rate, const Deployment& deployment, double t);

/// Steady-state cache share b_c / (b_c + b_opp + reservation).
double steady_share(double b_c, double b_opp, double reservation);

/// Probability that a tagged content is held by a local edge cache unit.
double hit_probability(double share_for_class, std::int64_t slots, std::int64_t count);

/// sum_i demand_i * exp(-availability_i * share * weight_i).
double mcr_at_share(std::span<const double> demands, std::span<const double> availabilities,
                    std::span<const double> weights, double share);

/// Expected missed cache rate of `provider` playing `policy` at rate b_c.
double mcr(const CachingPolicy& policy, double b_c, double b_opp, const Provider& provider,
           double reservation);

}  // namespace edgecache
