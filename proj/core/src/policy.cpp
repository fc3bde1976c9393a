#include "edgecache/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "edgecache/errors.hpp"

namespace edgecache {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t count_content(const Provider& p, std::span<const std::size_t> order) {
  std::size_t k = 0;
  for (auto i : order) {
    if (p.classes[i].demand * p.classes[i].availability > 0.0) ++k;
  }
  return k;
}

double log_weight(const ContentClass& c) { return std::log(c.demand * c.availability); }

void require_rate(double b_c) {
  if (!(b_c >= 0.0) || !std::isfinite(b_c)) {
    throw SolverError(SolverFailure::DegenerateInput,
                      "caching rate must be finite and >= 0 (use the small-rate limit at 0)");
  }
}

std::vector<double> alphas_at(const Provider& p, double x) {
  std::vector<double> out;
  out.reserve(p.classes.size());
  for (const auto& c : p.classes) {
    const double prod = c.demand * c.availability;
    out.push_back(prod > 0.0 && x > 0.0 ? 1.0 / (prod * x) : kInf);
  }
  return out;
}

// Builds the solution for the first `active` classes of `order` at level tau.
WaterfillSolution assemble(const Provider& p, std::vector<std::size_t> order, std::size_t active,
                           double x, double tau) {
  const std::size_t m = p.classes.size();
  std::vector<double> u(m, 0.0);
  for (std::size_t r = 0; r < active; ++r) {
    const auto& c = p.classes[order[r]];
    u[order[r]] = std::max(0.0, (tau + log_weight(c)) / (c.availability * x));
  }
  const double raw_sum = std::accumulate(u.begin(), u.end(), 0.0);
  for (auto& v : u) v /= raw_sum;

  WaterfillSolution s;
  s.share = x;
  s.log_water_level = tau - std::log(x);
  s.water_level = std::exp(s.log_water_level);
  s.alphas = alphas_at(p, x);
  s.active_count = active;

  KktCertificate& kkt = s.kkt;
  kkt.level = x * std::exp(-tau);
  kkt.duals.assign(m, 0.0);
  kkt.stationarity_residual = std::abs(raw_sum - 1.0);
  kkt.min_relative_dual = 1.0;
  kkt.complementary_slackness = 0.0;
  std::vector<bool> is_active(m, false);
  for (std::size_t r = 0; r < active; ++r) is_active[order[r]] = true;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = p.classes[i];
    const double prod = c.demand * c.availability;
    // mu_i / nu = 1 - Lambda_i d_i exp(-Lambda_i x u_i) / nu, evaluated in log space.
    const double relative =
        prod > 0.0 ? 1.0 - std::exp(std::log(prod) + tau - c.availability * x * u[i]) : 1.0;
    kkt.duals[i] = relative * kkt.level;
    if (is_active[i]) {
      kkt.stationarity_residual = std::max(kkt.stationarity_residual, std::abs(relative));
    } else {
      kkt.min_relative_dual = std::min(kkt.min_relative_dual, relative);
    }
    kkt.complementary_slackness = std::max(kkt.complementary_slackness, std::abs(relative * u[i]));
  }

  s.policy = CachingPolicy(std::move(u));
  s.order = std::move(order);
  return s;
}

WaterfillSolution limit_solution(const Provider& p, std::vector<std::size_t> order) {
  WaterfillSolution s;
  s.policy = limit_policy_small_b(p);
  s.share = 0.0;
  s.water_level = kInf;
  s.log_water_level = kInf;
  s.alphas.assign(p.classes.size(), kInf);
  s.active_count = 1;
  s.order = std::move(order);
  s.kkt.duals.assign(p.classes.size(), 0.0);
  s.kkt.min_relative_dual = 1.0;
  return s;
}

}  // namespace

std::vector<std::size_t> caching_order(const Provider& provider) {
  std::vector<std::size_t> order(provider.classes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = provider.classes[a];
    const auto& cb = provider.classes[b];
    return ca.demand * ca.availability > cb.demand * cb.availability;
  });
  return order;
}

// --- OptimalMcrCurve -------------------------------------------------------

OptimalMcrCurve::OptimalMcrCurve(const Provider& provider, double b_opp, double reservation)
    : b_opp_(b_opp), reservation_(reservation), order_(caching_order(provider)) {
  const std::size_t k_max = count_content(provider, order_);
  if (k_max == 0) {
    throw SolverError(SolverFailure::NoContent, "every class has demand * availability == 0");
  }
  total_demand_ = provider.total_demand();

  std::vector<double> w(k_max);
  std::vector<double> lam(k_max);
  for (std::size_t r = 0; r < k_max; ++r) {
    const auto& c = provider.classes[order_[r]];
    w[r] = log_weight(c);
    lam[r] = c.availability;
  }

  segments_.resize(k_max);
  double b_sum = 0.0;
  double s_sum = 0.0;
  double cached_demand = 0.0;
  for (std::size_t r = 0; r < k_max; ++r) {
    b_sum += 1.0 / lam[r];
    s_sum += w[r] / lam[r];
    cached_demand += provider.classes[order_[r]].demand;
    double threshold = 0.0;
    for (std::size_t i = 0; i < r; ++i) threshold += (w[i] - w[r]) / lam[i];
    segments_[r] = {b_sum, s_sum, std::max(0.0, total_demand_ - cached_demand), threshold};
  }
}

std::vector<double> OptimalMcrCurve::share_thresholds() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < segments_.size(); ++k) {
    if (segments_[k].share_threshold <= 1.0) out.push_back(segments_[k].share_threshold);
  }
  return out;
}

std::vector<double> OptimalMcrCurve::rate_thresholds() const {
  std::vector<double> out;
  for (double x : share_thresholds()) {
    if (x < 1.0) out.push_back((b_opp_ + reservation_) * x / (1.0 - x));
  }
  return out;
}

std::size_t OptimalMcrCurve::active_count_at_share(double x) const {
  if (!(x > 0.0)) return 0;
  // Thresholds are nondecreasing; count those strictly below x.
  auto it = std::lower_bound(segments_.begin(), segments_.end(), x,
                             [](const Segment& s, double v) { return s.share_threshold < v; });
  return static_cast<std::size_t>(it - segments_.begin());
}

double OptimalMcrCurve::level_at_share(double x) const {
  const auto& s = segments_[std::max<std::size_t>(active_count_at_share(x), 1) - 1];
  return (x - s.weighted_log_sum) / s.inverse_availability_sum;
}

double OptimalMcrCurve::value_at_share(double x) const {
  const std::size_t k = active_count_at_share(x);
  if (k == 0) return total_demand_;
  const auto& s = segments_[k - 1];
  return s.inverse_availability_sum * std::exp(-level_at_share(x)) + s.tail_demand;
}

double OptimalMcrCurve::slope_at_share(double x) const {
  // At x <= 0 this is the right derivative, -d_[1] Lambda_[1].
  return -std::exp(-level_at_share(std::max(x, 0.0)));
}

double OptimalMcrCurve::derivative(double b_c) const {
  const double a = b_opp_ + reservation_;
  const double p = b_c + a;
  return slope_at_share(share(b_c)) * a / (p * p);
}

// --- policies --------------------------------------------------------------

WaterfillSolution optimal_policy(double b_c, double b_opp, const Provider& provider,
                                 double reservation) {
  auto order = caching_order(provider);
  const std::size_t k_max = count_content(provider, order);
  if (k_max == 0) {
    throw SolverError(SolverFailure::NoContent, "every class has demand * availability == 0");
  }
  require_rate(b_c);
  if (b_c == 0.0) return limit_solution(provider, std::move(order));

  const double x = steady_share(b_c, b_opp, reservation);

  // Candidate levels for k = 1..K active classes; pick the unique k with
  // alpha_[k] < 1/nu <= alpha_[k+1], i.e. tau + w_[k] > 0 >= tau + w_[k+1].
  double b_sum = 0.0;
  double s_sum = 0.0;
  std::size_t chosen = 0;
  double chosen_tau = 0.0;
  std::size_t fallback = 1;
  double fallback_tau = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto& c = provider.classes[order[k - 1]];
    const double w = log_weight(c);
    b_sum += 1.0 / c.availability;
    s_sum += w / c.availability;
    const double tau = (x - s_sum) / b_sum;
    if (!(tau + w > 0.0)) continue;
    fallback = k;
    fallback_tau = tau;
    const bool next_inactive =
        k == k_max || tau + log_weight(provider.classes[order[k]]) <= 0.0;
    if (next_inactive) {
      chosen = k;
      chosen_tau = tau;
      break;
    }
  }
  if (chosen == 0) {
    // Rounding at an exact threshold; the largest feasible prefix is optimal.
    chosen = fallback;
    chosen_tau = fallback_tau;
  }
  return assemble(provider, std::move(order), chosen, x, chosen_tau);
}

WaterfillSolution optimal_policy_sorted_closed_form(double b_c, double b_opp,
                                                    const Provider& provider,
                                                    double reservation) {
  const auto& cls = provider.classes;
  for (std::size_t i = 1; i < cls.size(); ++i) {
    if (cls[i].demand > cls[i - 1].demand || cls[i].availability > cls[i - 1].availability) {
      throw SolverError(SolverFailure::Precondition,
                        "closed form needs demands and availabilities nonincreasing in class "
                        "index (contents more popular and less abundant first)");
    }
  }
  auto order = caching_order(provider);
  if (count_content(provider, order) == 0) {
    throw SolverError(SolverFailure::NoContent, "every class has demand * availability == 0");
  }
  require_rate(b_c);
  if (b_c == 0.0) return limit_solution(provider, std::move(order));

  const double x = steady_share(b_c, b_opp, reservation);
  const std::size_t m = cls.size();
  for (std::size_t r0 = m; r0 >= 1; --r0) {
    const auto& top = cls[r0 - 1];
    const double top_prod = top.demand * top.availability;
    if (!(top_prod > 0.0)) continue;
    double log_sum = 0.0;
    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < r0; ++i) {
      log_sum += std::log(top_prod / (cls[i].demand * cls[i].availability)) / cls[i].availability;
      ratio_sum += top.availability / cls[i].availability;
    }
    const double u_r0 = (1.0 + log_sum / x) / ratio_sum;
    if (u_r0 >= 0.0 && u_r0 <= 1.0) {
      // The threshold formula fixes u_[r0]; recover the level from it.
      const double tau = top.availability * x * u_r0 - std::log(top_prod);
      // Input is already in caching order, so order == identity on the prefix.
      return assemble(provider, std::move(order), r0, x, tau);
    }
  }
  throw SolverError(SolverFailure::InternalConsistency,
                    "no threshold index produced a weight in [0, 1]");
}

CachingPolicy limit_policy_small_b(const Provider& provider) {
  const auto order = caching_order(provider);
  std::vector<double> u(provider.classes.size(), 0.0);
  u[order.front()] = 1.0;
  return CachingPolicy(std::move(u));
}

double limit_mcr_small_b(double b_c, double b_opp, const Provider& provider, double reservation) {
  const auto order = caching_order(provider);
  const double x = steady_share(b_c, b_opp, reservation);
  double total = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& c = provider.classes[order[r]];
    total += r == 0 ? c.demand * std::exp(-c.availability * x) : c.demand;
  }
  return total;
}

OptimalMcrCurve activation_thresholds(const Provider& provider, double reservation,
                                      double b_opp) {
  return OptimalMcrCurve(provider, b_opp, reservation);
}

double optimal_mcr(double b_c, double b_opp, const Provider& provider, double reservation) {
  require_rate(b_c);
  return OptimalMcrCurve(provider, b_opp, reservation).value(b_c);
}

double optimal_mcr_derivative(double b_c, double b_opp, const Provider& provider,
                              double reservation) {
  require_rate(b_c);
  return OptimalMcrCurve(provider, b_opp, reservation).derivative(b_c);
}

// --- two classes -----------------------------------------------------------

namespace {

struct TwoClassRoles {
  std::size_t first;   // always cached once b_c > 0
  std::size_t second;  // switches on at the threshold
  double gamma;        // d_second Lambda_second / (d_first Lambda_first), in [0, 1]
};

TwoClassRoles roles(std::array<double, 2> d, std::array<double, 2> lam) {
  const double p0 = d[0] * lam[0];
  const double p1 = d[1] * lam[1];
  if (!(p0 > 0.0) && !(p1 > 0.0)) {
    throw SolverError(SolverFailure::NoContent, "both classes have demand * availability == 0");
  }
  if (p1 > p0) return {1, 0, p0 / p1};
  return {0, 1, p1 / p0};
}

}  // namespace

double m2_threshold(std::array<double, 2> demand, std::array<double, 2> availability,
                    double b_opp, double reservation) {
  const auto r = roles(demand, availability);
  if (r.gamma == 1.0) return 0.0;
  const double log_inv_gamma = std::log(1.0 / r.gamma);
  const double lam_first = availability[r.first];
  if (!(lam_first > log_inv_gamma)) return kInf;
  return (b_opp + reservation) * log_inv_gamma / (lam_first - log_inv_gamma);
}

TwoClassSolution m2_closed_form(double b_c, double b_opp, std::array<double, 2> demand,
                                std::array<double, 2> availability, double reservation) {
  require_rate(b_c);
  const auto r = roles(demand, availability);
  const double x = steady_share(b_c, b_opp, reservation);
  const double threshold = m2_threshold(demand, availability, b_opp, reservation);
  const double d1 = demand[r.first];
  const double d2 = demand[r.second];
  const double l1 = availability[r.first];
  const double l2 = availability[r.second];

  std::array<double, 2> u{};
  TwoClassSolution out;
  if (x == 0.0 || b_c < threshold) {
    u[r.first] = 1.0;
    out.cost = d1 * std::exp(-l1 * x) + d2;
  } else {
    const double sum = l1 + l2;
    const double k_c = d1 * std::pow(r.gamma, l1 / sum) + d2 * std::pow(r.gamma, -l2 / sum);
    out.cost = k_c * std::exp(-(l1 * l2 / sum) * x);
    const double u1 = std::clamp(l2 / sum - std::log(r.gamma) / (x * sum), 0.0, 1.0);
    u[r.first] = u1;
    u[r.second] = 1.0 - u1;
  }
  out.policy = CachingPolicy({u[0], u[1]});
  return out;
}

}  // namespace edgecache
