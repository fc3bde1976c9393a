#include "edgecache/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "edgecache/errors.hpp"

namespace edgecache {

namespace {

std::string join(std::string_view base, std::string_view leaf) {
  std::string out(base);
  out += '/';
  out += leaf;
  return out;
}

void require(bool ok, std::string_view path, const std::string& message) {
  if (!ok) throw ConfigError(message, std::string(path));
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

CachingPolicy::CachingPolicy(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ConfigError("caching policy must have at least one weight");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ConfigError("weight " + std::to_string(w) + " outside [0, 1]", "/" + std::to_string(i));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ConfigError("caching policy weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

CachingPolicy CachingPolicy::uniform(std::size_t classes) {
  if (classes == 0) throw ConfigError("caching policy must have at least one weight");
  return CachingPolicy(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

CachingPolicy CachingPolicy::proportional(std::span<const double> scores) {
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("proportional policy needs a positive total score");
  std::vector<double> w(scores.size());
  std::transform(scores.begin(), scores.end(), w.begin(), [&](double s) { return s / total; });
  return CachingPolicy(std::move(w));
}

std::vector<double> Provider::demands() const {
  std::vector<double> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.demand);
  return out;
}

std::vector<double> Provider::availabilities() const {
  std::vector<double> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.availability);
  return out;
}

double Provider::total_demand() const {
  double total = 0.0;
  for (const auto& c : classes) total += c.demand;
  return total;
}

void validate(const Deployment& d, std::string_view path) {
  require(finite(d.sc_density) && d.sc_density > 0.0, join(path, "sc_density"),
          "small-cell density must be > 0");
  require(finite(d.radius) && d.radius >= 0.0, join(path, "radius"), "radius must be >= 0");
  require(d.slots_per_unit >= 1, join(path, "slots_per_unit"), "slots_per_unit must be >= 1");
  require(d.unit_count >= 1, join(path, "unit_count"), "unit_count must be >= 1");
  require(finite(d.reservation) && d.reservation > 0.0, join(path, "reservation"),
          "operator reservation must be > 0 (a zero reservation has no well-defined equilibrium)");
  require(finite(d.expiry_rate) && d.expiry_rate > 0.0, join(path, "expiry_rate"),
          "expiry_rate must be > 0");
}

void validate(const Provider& p, std::string_view path) {
  const std::string classes_path = join(path, "classes");
  require(!p.classes.empty(), classes_path, "provider needs at least one content class");
  bool any_content = false;
  for (std::size_t i = 0; i < p.classes.size(); ++i) {
    const auto& c = p.classes[i];
    const std::string cp = join(classes_path, std::to_string(i));
    require(finite(c.demand) && c.demand >= 0.0, join(cp, "demand"), "demand must be >= 0");
    require(c.count >= 1, join(cp, "count"), "count must be >= 1");
    require(finite(c.availability) && c.availability >= 0.0, join(cp, "availability"),
            "availability must be >= 0");
    any_content = any_content || c.demand * c.availability > 0.0;
  }
  require(any_content, classes_path,
          "at least one class needs demand * availability > 0");
  require(finite(p.cap) && p.cap > 0.0, join(path, "cap"), "cap must be > 0");
  require(finite(p.price) && p.price >= 0.0, join(path, "price"), "price must be >= 0");
  if (const auto* fixed = std::get_if<CachingRateOptimizer>(&p.kind)) {
    require(fixed->fixed_policy.size() == p.classes.size(), join(path, "fixed_policy"),
            "fixed_policy length " + std::to_string(fixed->fixed_policy.size()) +
                " does not match class count " + std::to_string(p.classes.size()));
  }
}

void validate(const GameConfig& config) {
  validate(config.deployment);
  require(!config.providers.empty(), "/providers", "at least one provider is required");
  for (std::size_t c = 0; c < config.providers.size(); ++c) {
    validate(config.providers[c], "/providers/" + std::to_string(c));
  }
}

double derive_availability(const Deployment& deployment, const ContentClass& content) {
  return std::numbers::pi * deployment.radius * deployment.radius * deployment.sc_density *
         static_cast<double>(deployment.slots_per_unit) / static_cast<double>(content.count);
}

Provider with_derived_availability(Provider provider, const Deployment& deployment) {
  for (auto& c : provider.classes) c.availability = derive_availability(deployment, c);
  return provider;
}

double fill_fraction(double total_rate, const Deployment& deployment, double t) {
  const double eta = deployment.expiry_rate;
  const double scale = total_rate / (static_cast<double>(deployment.total_slots()) * eta);
  return std::min(1.0, scale * -std::expm1(-eta * t));
}

double steady_share(double b_c, double b_opp, double reservation) {
  return b_c / (b_c + b_opp + reservation);
}

double hit_probability(double share_for_class, std::int64_t slots, std::int64_t count) {
  return std::min(static_cast<double>(slots) * share_for_class / static_cast<double>(count), 1.0);
}

double mcr_at_share(std::span<const double> demands, std::span<const double> availabilities,
                    std::span<const double> weights, double share) {
  double total = 0.0;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    // exp underflows cleanly to 0 for availabilities in the thousands.
    total += demands[i] * std::exp(-availabilities[i] * share * weights[i]);
  }
  return total;
}

double mcr(const CachingPolicy& policy, double b_c, double b_opp, const Provider& provider,
           double reservation) {
  if (policy.size() != provider.classes.size()) {
    throw ConfigError("policy length does not match the provider's class count");
  }
  const double share = steady_share(b_c, b_opp, reservation);
  return mcr_at_share(provider.demands(), provider.availabilities(), policy.weights(), share);
}

}  // namespace edgecache
