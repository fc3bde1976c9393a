#include "edgecache/equilibrium.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "bisect.hpp"
#include "edgecache/errors.hpp"
#include "edgecache/random.hpp"

namespace edgecache {

namespace {

// Share-space roots are resolved down to double precision.
constexpr double kShareBracketWidth = 1e-15;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

// --- ShareCost -------------------------------------------------------------

ShareCost::ShareCost(const Provider& provider)
    : impl_(std::visit(
          Overloaded{
              [&](const SimultaneousOptimizer&) -> decltype(impl_) {
                return OptimalMcrCurve(provider);
              },
              [&](const CachingRateOptimizer& fixed) -> decltype(impl_) {
                auto w = fixed.fixed_policy.weights();
                return FixedPolicy{provider.demands(), provider.availabilities(),
                                   std::vector<double>(w.begin(), w.end())};
              },
          },
          provider.kind)) {}

double ShareCost::value(double x) const {
  return std::visit(Overloaded{
                        [&](const OptimalMcrCurve& curve) { return curve.value_at_share(x); },
                        [&](const FixedPolicy& f) {
                          return mcr_at_share(f.demand, f.availability, f.weights, x);
                        },
                    },
                    impl_);
}

double ShareCost::slope(double x) const {
  return std::visit(Overloaded{
                        [&](const OptimalMcrCurve& curve) { return curve.slope_at_share(x); },
                        [&](const FixedPolicy& f) {
                          const double xs = std::max(x, 0.0);
                          double s = 0.0;
                          for (std::size_t i = 0; i < f.demand.size(); ++i) {
                            const double rate = f.availability[i] * f.weights[i];
                            s -= f.demand[i] * rate * std::exp(-rate * xs);
                          }
                          return s;
                        },
                    },
                    impl_);
}

double StrategyProfile::sum() const { return std::accumulate(rates.begin(), rates.end(), 0.0); }

// --- Game ------------------------------------------------------------------

Game::Game(GameConfig config) : config_(std::move(config)) {
  validate(config_);
  costs_.reserve(config_.providers.size());
  for (const auto& p : config_.providers) costs_.emplace_back(p);
}

double Game::missed_rate(std::size_t c, double b_c, double b_opp) const {
  return costs_[c].value(steady_share(b_c, b_opp, reservation()));
}

double Game::player_cost(std::size_t c, const StrategyProfile& profile) const {
  const double b_c = profile.rates[c];
  return missed_rate(c, b_c, profile.opponents(c)) + config_.providers[c].price * b_c;
}

double Game::mcr_derivative(std::size_t c, double b_c, double b_opp) const {
  const double a = b_opp + reservation();
  const double p = b_c + a;
  return costs_[c].slope(b_c / p) * a / (p * p);
}

double Game::best_response(std::size_t c, double b_opp) const {
  const auto& provider = config_.providers[c];
  const double price = provider.price;
  if (mcr_derivative(c, 0.0, b_opp) + price >= 0.0) return 0.0;
  if (mcr_derivative(c, provider.cap, b_opp) + price <= 0.0) return provider.cap;
  return detail::bisect([&](double b) { return mcr_derivative(c, b, b_opp) + price; }, 0.0,
                        provider.cap);
}

TrivialEquilibria Game::trivial_equilibria() const {
  TrivialEquilibria out{true, true};
  const double delta = reservation();
  double cap_sum = 0.0;
  for (const auto& p : config_.providers) cap_sum += p.cap;
  for (std::size_t c = 0; c < players(); ++c) {
    const auto& provider = config_.providers[c];
    // -V_c'(0) is d_[1] Lambda_[1] for simultaneous optimizers and
    // sum_i d_i Lambda_i u_i for a fixed policy.
    const double marginal = -costs_[c].slope(0.0);
    if (!(marginal < provider.price * delta)) out.zero = false;
    if (!(mcr_derivative(c, provider.cap, cap_sum - provider.cap) <= -provider.price)) {
      out.saturated = false;
    }
  }
  return out;
}

double Game::demand(std::size_t c, double p) const {
  const double price = config_.providers[c].price;
  const auto& cost = costs_[c];
  auto foc = [&](double x) { return cost.slope(x) * (1.0 - x) + p * price; };
  if (foc(0.0) >= 0.0) return 0.0;
  if (price == 0.0) return 1.0;
  return detail::bisect(foc, 0.0, 1.0, kShareBracketWidth);
}

double Game::clipped_demand(std::size_t c, double p) const {
  return std::max(0.0, std::min(demand(c, p), config_.providers[c].cap / p));
}

double Game::clearing_gap(double p) const {
  double total = 0.0;
  for (std::size_t c = 0; c < players(); ++c) total += clipped_demand(c, p);
  return total - (1.0 - reservation() / p);
}

EquilibriumResult Game::finish(StrategyProfile profile, double p, EquilibriumKind kind) const {
  EquilibriumResult r;
  r.clearing_total = p;
  r.kind = kind;
  r.residual = std::abs(clearing_gap(p));
  r.players.reserve(players());
  for (std::size_t c = 0; c < players(); ++c) {
    const double b = profile.rates[c];
    const double cap = config_.providers[c].cap;
    PlayerOutcome o;
    o.share = b / p;
    o.clipped_demand = clipped_demand(c, p);
    o.cost = player_cost(c, profile);
    o.boundary = b <= 0.0                      ? BoundaryFlag::AtZero
                 : b >= cap * (1.0 - 1e-12)    ? BoundaryFlag::AtCap
                                               : BoundaryFlag::Interior;
    r.players.push_back(o);
  }
  r.profile = std::move(profile);
  return r;
}

EquilibriumResult Game::nash_equilibrium(const NashOptions& options) const {
  const double delta = reservation();
  const std::size_t n = players();
  double cap_sum = 0.0;
  for (const auto& p : config_.providers) cap_sum += p.cap;

  const auto trivial = trivial_equilibria();
  if (trivial.zero) {
    return finish(StrategyProfile{std::vector<double>(n, 0.0)}, delta, EquilibriumKind::Zero);
  }
  if (trivial.saturated) {
    StrategyProfile caps;
    for (const auto& p : config_.providers) caps.rates.push_back(p.cap);
    return finish(std::move(caps), cap_sum + delta, EquilibriumKind::Saturated);
  }

  double lo = delta;
  double hi = cap_sum + delta;
  if (!(clearing_gap(lo) >= 0.0) || !(clearing_gap(hi) <= 0.0)) {
    throw SolverError(SolverFailure::InternalConsistency,
                      "clearing equation does not change sign on [delta, sum B + delta]");
  }
  const std::size_t pieces = std::max<std::size_t>(options.bracket_subdivisions, 1);
  if (pieces > 1) {
    const double width = (hi - lo) / static_cast<double>(pieces);
    const double base = lo;
    for (std::size_t i = 1; i < pieces; ++i) {
      const double edge = base + width * static_cast<double>(i);
      if (clearing_gap(edge) >= 0.0) {
        lo = edge;
      } else {
        hi = edge;
        break;
      }
    }
  }
  const double p_star = detail::bisect([&](double p) { return clearing_gap(p); }, lo, hi);

  StrategyProfile profile;
  profile.rates.reserve(n);
  for (std::size_t c = 0; c < n; ++c) profile.rates.push_back(p_star * clipped_demand(c, p_star));
  return finish(std::move(profile), p_star, EquilibriumKind::Interior);
}

DynamicsTrace Game::myopic_dynamics(const StrategyProfile& initial,
                                    const DynamicsOptions& options) const {
  const std::size_t n = players();
  if (initial.rates.size() != n) {
    throw ConfigError("initial profile has " + std::to_string(initial.rates.size()) +
                      " rates for " + std::to_string(n) + " players");
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double b = initial.rates[c];
    if (!(b >= 0.0 && b <= config_.providers[c].cap)) {
      throw ConfigError("initial rate outside [0, cap]", "/initial/" + std::to_string(c));
    }
  }

  DynamicsTrace trace;
  StrategyProfile profile = initial;
  Rng rng(options.seed);
  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t round = 1; round <= options.max_rounds; ++round) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (options.order == PlayerOrder::SeededRandom) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    double max_change = 0.0;
    for (std::size_t c : order) {
      const double next = best_response(c, profile.opponents(c));
      max_change = std::max(max_change, std::abs(next - profile.rates[c]));
      profile.rates[c] = next;
      DynamicsStep s;
      s.iteration = ++step;
      s.player = c;
      s.profile = profile;
      s.costs.reserve(n);
      for (std::size_t v = 0; v < n; ++v) s.costs.push_back(player_cost(v, profile));
      trace.steps.push_back(std::move(s));
    }
    trace.rounds = round;
    if (max_change < options.tolerance) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

// --- free functions --------------------------------------------------------

double player_cost(std::size_t c, const StrategyProfile& profile, const GameConfig& config) {
  return Game(config).player_cost(c, profile);
}

double best_response(std::size_t c, double b_opp, const GameConfig& config) {
  if (!(b_opp >= 0.0)) throw ConfigError("opponents' rate must be >= 0", "/b_opp");
  return Game(config).best_response(c, b_opp);
}

TrivialEquilibria trivial_equilibria(const GameConfig& config) {
  return Game(config).trivial_equilibria();
}

EquilibriumResult nash_equilibrium(const GameConfig& config, const NashOptions& options) {
  return Game(config).nash_equilibrium(options);
}

DynamicsTrace myopic_dynamics(const GameConfig& config, const StrategyProfile& initial,
                              const DynamicsOptions& options) {
  return Game(config).myopic_dynamics(initial, options);
}

RevenueSweep revenue_sweep(const GameConfig& config, std::span<const double> prices,
                           unsigned threads) {
  RevenueSweep sweep;
  sweep.points.resize(prices.size());

  auto solve = [&](std::size_t i) {
    RevenuePoint& point = sweep.points[i];
    point.price = prices[i];
    try {
      GameConfig priced = config;
      for (auto& p : priced.providers) p.price = prices[i];
      const auto eq = Game(std::move(priced)).nash_equilibrium();
      point.rates = eq.profile.rates;
      point.revenue = prices[i] * eq.profile.sum();
    } catch (const Error& e) {
      point.error = e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, prices.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < prices.size(); ++i) solve(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < prices.size(); i = next++) solve(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& pt = sweep.points[i];
    if (pt.error) continue;
    if (!sweep.argmax || pt.revenue > sweep.points[*sweep.argmax].revenue) sweep.argmax = i;
  }
  return sweep;
}

}  // namespace edgecache
