#pragma once

// The caching game: each provider c picks a caching rate b_c in [0, B_c] and
// pays U_c(b_c, b_-c) + lambda_c b_c. In share space the cost is
// V_c(x_c) + lambda_c b_c with x_c = b_c / p and p = sum_v b_v + delta, a
// generalised Kelly mechanism with reservation delta and capped bids.
//
// The unique equilibrium is found by bisection on the clearing total p:
// each player's unconstrained demand x_c(p) solves V_c'(x)(1 - x) + p lambda_c = 0,
// is clipped to [0, B_c / p], and the clipped demands must add up to 1 - delta / p.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edgecache/model.hpp"
#include "edgecache/policy.hpp"

namespace edgecache {

/// V_c(x): a provider's missed cache rate as a function of its cache share.
class ShareCost {
 public:
  explicit ShareCost(const Provider& provider);

  double value(double x) const;
  /// dV/dx; at x <= 0 the right derivative.
  double slope(double x) const;

 private:
  struct FixedPolicy {
    std::vector<double> demand;
    std::vector<double> availability;
    std::vector<double> weights;
  };
  std::variant<OptimalMcrCurve, FixedPolicy> impl_;
};

struct StrategyProfile {
  std::vector<double> rates;

  double sum() const;
  double opponents(std::size_t c) const { return sum() - rates[c]; }
  /// p = sum_c b_c + delta.
  double total(double reservation) const { return sum() + reservation; }
};

enum class EquilibriumKind { Zero, Saturated, Interior };
enum class BoundaryFlag { AtZero, AtCap, Interior };

struct PlayerOutcome {
  double share = 0.0;           ///< x_c = b*_c / p*
  double clipped_demand = 0.0;  ///< x^_c(p*)
  double cost = 0.0;
  BoundaryFlag boundary = BoundaryFlag::Interior;
};

struct EquilibriumResult {
  StrategyProfile profile;
  double clearing_total = 0.0;  ///< p* = sum b*_c + delta
  EquilibriumKind kind = EquilibriumKind::Interior;
  std::vector<PlayerOutcome> players;
  double residual = 0.0;  ///< |sum x^_c(p*) - (1 - delta / p*)|
};

struct TrivialEquilibria {
  bool zero = false;
  bool saturated = false;
};

struct NashOptions {
  /// The bracket [delta, sum B + delta] is first split into this many equal
  /// pieces and bisection runs inside the piece holding the sign change.
  std::size_t bracket_subdivisions = 1;
};

enum class PlayerOrder { RoundRobin, SeededRandom };

struct DynamicsOptions {
  std::size_t max_rounds = 500;
  double tolerance = 1e-9;  ///< max |change| over a full round
  PlayerOrder order = PlayerOrder::RoundRobin;
  std::uint64_t seed = 0;
};

struct DynamicsStep {
  std::size_t iteration = 0;  ///< 1-based step count
  std::size_t player = 0;
  StrategyProfile profile;    ///< after the move
  std::vector<double> costs;  ///< every player's cost after the move
};

struct DynamicsTrace {
  std::vector<DynamicsStep> steps;
  bool converged = false;
  std::size_t rounds = 0;
};

struct RevenuePoint {
  double price = 0.0;
  double revenue = 0.0;
  std::vector<double> rates;
  std::optional<std::string> error;
};

struct RevenueSweep {
  std::vector<RevenuePoint> points;
  std::optional<std::size_t> argmax;
};

/// A validated game with each player's share cost precomputed.
class Game {
 public:
  explicit Game(GameConfig config);

  const GameConfig& config() const noexcept { return config_; }
  std::size_t players() const noexcept { return costs_.size(); }
  double reservation() const noexcept { return config_.deployment.reservation; }

  /// MCR part of player c's cost at rate b_c against b_opp.
  double missed_rate(std::size_t c, double b_c, double b_opp) const;
  double player_cost(std::size_t c, const StrategyProfile& profile) const;
  /// dU_c/db_c (without the price term).
  double mcr_derivative(std::size_t c, double b_c, double b_opp) const;
  double best_response(std::size_t c, double b_opp) const;

  TrivialEquilibria trivial_equilibria() const;

  /// Unconstrained demand x_c(p) in [0, 1].
  double demand(std::size_t c, double p) const;
  /// max(0, min(x_c(p), B_c / p)).
  double clipped_demand(std::size_t c, double p) const;
  /// sum_c x^_c(p) - (1 - delta / p); decreasing in p.
  double clearing_gap(double p) const;

  EquilibriumResult nash_equilibrium(const NashOptions& options = {}) const;
  DynamicsTrace myopic_dynamics(const StrategyProfile& initial,
                                const DynamicsOptions& options = {}) const;

 private:
  EquilibriumResult finish(StrategyProfile profile, double p, EquilibriumKind kind) const;

  GameConfig config_;
  std::vector<ShareCost> costs_;
};

// Free-function forms; each builds a Game from `config`.
double player_cost(std::size_t c, const StrategyProfile& profile, const GameConfig& config);
double best_response(std::size_t c, double b_opp, const GameConfig& config);
TrivialEquilibria trivial_equilibria(const GameConfig& config);
EquilibriumResult nash_equilibrium(const GameConfig& config, const NashOptions& options = {});
DynamicsTrace myopic_dynamics(const GameConfig& config, const StrategyProfile& initial,
                              const DynamicsOptions& options = {});

/// Nash revenue sum_c lambda b*_c for a uniform price lambda applied to every
/// provider of `config`. Grid points are solved independently; `threads > 1`
/// spreads them over worker threads without changing the result.
RevenueSweep revenue_sweep(const GameConfig& config, std::span<const double> prices,
                           unsigned threads = 1);

}  // namespace edgecache
