#include "edgecache/spatial.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "edgecache/equilibrium.hpp"
#include "edgecache/errors.hpp"
#include "edgecache/policy.hpp"
#include "edgecache/random.hpp"

namespace edgecache {

namespace {

constexpr std::size_t kMaxGridCells = 1 << 22;

// Uniform bucket grid over the region for fixed-radius neighbour counts.
class CellIndex {
 public:
  CellIndex(const PointSet& set, double radius) : region_(set.region) {
    cell_ = radius > 0.0 ? radius : std::max(region_.width, region_.height);
    if (!(cell_ > 0.0)) cell_ = 1.0;
    auto dims = [&] {
      nx_ = static_cast<std::size_t>(std::floor(region_.width / cell_)) + 1;
      ny_ = static_cast<std::size_t>(std::floor(region_.height / cell_)) + 1;
    };
    dims();
    while (nx_ * ny_ > kMaxGridCells) {
      cell_ *= 2.0;
      dims();
    }
    std::vector<std::size_t> counts(nx_ * ny_ + 1, 0);
    for (const auto& p : set.points) ++counts[bucket(p) + 1];
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    start_ = counts;
    points_.resize(set.points.size());
    for (const auto& p : set.points) points_[counts[bucket(p)]++] = p;
  }

  std::size_t count_within(const Point& q, double radius) const {
    if (!(radius > 0.0)) return 0;
    const double r2 = radius * radius;
    const std::size_t ix0 = clamp_x(q.x - radius);
    const std::size_t ix1 = clamp_x(q.x + radius);
    const std::size_t iy0 = clamp_y(q.y - radius);
    const std::size_t iy1 = clamp_y(q.y + radius);
    std::size_t k = 0;
    for (std::size_t iy = iy0; iy <= iy1; ++iy) {
      for (std::size_t ix = ix0; ix <= ix1; ++ix) {
        const std::size_t b = iy * nx_ + ix;
        for (std::size_t j = start_[b]; j < start_[b + 1]; ++j) {
          const double dx = points_[j].x - q.x;
          const double dy = points_[j].y - q.y;
          if (dx * dx + dy * dy < r2) ++k;
        }
      }
    }
    return k;
  }

 private:
  std::size_t clamp_index(double v, std::size_t n) const {
    if (!(v > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(v / cell_), n - 1);
  }
  std::size_t clamp_x(double x) const { return clamp_index(x - region_.x0, nx_); }
  std::size_t clamp_y(double y) const { return clamp_index(y - region_.y0, ny_); }
  std::size_t bucket(const Point& p) const { return clamp_y(p.y) * nx_ + clamp_x(p.x); }

  Region region_;
  double cell_ = 1.0;
  std::size_t nx_ = 1;
  std::size_t ny_ = 1;
  std::vector<std::size_t> start_;
  std::vector<Point> points_;
};

struct ClassCounts {
  std::vector<std::uint64_t> trials;
  std::vector<std::uint64_t> misses;

  explicit ClassCounts(std::size_t m) : trials(m, 0), misses(m, 0) {}
  void add(const ClassCounts& o) {
    for (std::size_t i = 0; i < trials.size(); ++i) {
      trials[i] += o.trials[i];
      misses[i] += o.misses[i];
    }
  }
};

struct TrialModel {
  std::vector<double> cumulative;  // class sampling CDF
  std::vector<double> hold;        // P_i
};

TrialModel make_model(const Deployment& deployment, const Provider& provider,
                      std::span<const double> class_shares) {
  const std::size_t m = provider.classes.size();
  if (class_shares.size() != m) {
    throw ConfigError("class_shares length does not match the provider's class count");
  }
  const double total = provider.total_demand();
  if (!(total > 0.0)) throw ConfigError("provider has zero total demand");
  TrialModel model;
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double share = class_shares[i];
    if (!(share >= 0.0 && share <= 1.0)) {
      throw ConfigError("class share outside [0, 1]", "/class_shares/" + std::to_string(i));
    }
    acc += provider.classes[i].demand / total;
    model.cumulative.push_back(acc);
    model.hold.push_back(
        hit_probability(share, deployment.slots_per_unit, provider.classes[i].count));
  }
  model.cumulative.back() = 1.0;
  return model;
}

ClassCounts simulate_counts(const PointSet& set, const TrialModel& model, double radius,
                            std::size_t trials, std::uint64_t seed, const SimOptions& options) {
  const std::size_t m = model.hold.size();
  const Region& reg = set.region;
  const double inner_w = reg.width - 2.0 * radius;
  const double inner_h = reg.height - 2.0 * radius;
  if (!(inner_w > 0.0) || !(inner_h > 0.0)) {
    throw ConfigError("region " + std::to_string(reg.width) + " x " + std::to_string(reg.height) +
                      " km is too small for radius " + std::to_string(radius) + " km");
  }
  const CellIndex index(set, radius);

  const std::size_t shard = std::max<std::size_t>(options.shard_size, 1);
  const std::size_t shards = (trials + shard - 1) / shard;
  std::vector<ClassCounts> partial(shards, ClassCounts(m));

  auto run_shard = [&](std::size_t s) {
    Rng rng(stream_seed(seed, s));
    ClassCounts& out = partial[s];
    const std::size_t n = std::min(shard, trials - s * shard);
    for (std::size_t t = 0; t < n; ++t) {
      const Point ue{reg.x0 + radius + inner_w * rng.uniform(),
                     reg.y0 + radius + inner_h * rng.uniform()};
      const double pick = rng.uniform();
      const std::size_t cls = static_cast<std::size_t>(
          std::upper_bound(model.cumulative.begin(), model.cumulative.end(), pick) -
          model.cumulative.begin());
      const std::size_t i = std::min(cls, m - 1);
      const std::size_t in_range = index.count_within(ue, radius);
      // Independent retention by each in-range cell: the content is missed
      // with probability (1 - P_i)^k.
      const double p_miss = std::pow(1.0 - model.hold[i], static_cast<double>(in_range));
      ++out.trials[i];
      if (rng.uniform() < p_miss) ++out.misses[i];
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(options.threads, shards)));
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < shards; s = next++) run_shard(s);
      });
    }
    for (auto& th : pool) th.join();
  }

  ClassCounts total(m);
  for (const auto& p : partial) total.add(p);
  return total;
}

SimEstimate summarise(const ClassCounts& counts, const Deployment& deployment,
                      const Provider& provider, const TrialModel& model, double radius,
                      std::size_t trials, PolicyLabel label) {
  SimEstimate est;
  est.policy = label;
  est.radius = radius;
  est.trials = trials;
  const double coverage = std::numbers::pi * radius * radius * deployment.sc_density;
  double variance = 0.0;
  for (std::size_t i = 0; i < model.hold.size(); ++i) {
    const double d = provider.classes[i].demand;
    const auto n = counts.trials[i];
    // A class never drawn contributes its full demand (no observed hits).
    const double freq = n == 0 ? 1.0 : static_cast<double>(counts.misses[i]) / static_cast<double>(n);
    est.miss_rate += d * freq;
    if (n > 0) variance += d * d * freq * (1.0 - freq) / static_cast<double>(n);
    est.analytic += d * std::exp(-coverage * model.hold[i]);
  }
  est.std_error = std::sqrt(variance);
  return est;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::string_view to_string(PolicyLabel label) {
  switch (label) {
    case PolicyLabel::Random: return "random";
    case PolicyLabel::PopularityBased: return "popularity";
    case PolicyLabel::CachingRateOptimizer: return "caching_rate_optimizer";
    case PolicyLabel::SimultaneousOptimizer: return "simultaneous_optimizer";
  }
  return "unknown";
}

PointSet generate_poisson(const Region& region, double density, std::uint64_t seed) {
  if (!(density >= 0.0) || !(region.area() >= 0.0)) {
    throw ConfigError("Poisson process needs density >= 0 and a non-negative area");
  }
  PointSet set;
  set.region = region;
  set.source = PoissonSource{seed};
  Rng rng(seed);
  const double mean = density * region.area();
  // Count of unit-rate arrivals in [0, mean] is Poisson(mean).
  std::size_t count = 0;
  for (double t = rng.exponential(); t <= mean; t += rng.exponential()) ++count;
  set.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = rng.uniform(region.x0, region.x0 + region.width);
    const double y = rng.uniform(region.y0, region.y0 + region.height);
    set.points.push_back({x, y});
  }
  return set;
}

PointSet parse_dataset(std::istream& in, Projection projection, std::string name) {
  const bool latlon = projection == Projection::EquirectangularLatLon;
  const std::string_view want_a = latlon ? "lat" : "x_km";
  const std::string_view want_b = latlon ? "lon" : "y_km";

  std::vector<Point> raw;  // (x, y) or (lat, lon)
  std::vector<std::size_t> bad_lines;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    view = trim(view);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split_fields(view);
    if (!have_header) {
      if (fields.size() != 2 || fields[0] != want_a || fields[1] != want_b) {
        throw IoError(name + ":" + std::to_string(line_no) + ": expected header '" +
                      std::string(want_a) + "," + std::string(want_b) + "'");
      }
      have_header = true;
      continue;
    }
    double a = 0.0;
    double b = 0.0;
    if (fields.size() != 2 || !parse_double(fields[0], a) || !parse_double(fields[1], b) ||
        (latlon && (std::abs(a) > 90.0 || std::abs(b) > 180.0))) {
      bad_lines.push_back(line_no);
      continue;
    }
    raw.push_back({a, b});
  }
  if (!bad_lines.empty()) {
    std::string msg = name + ": malformed rows at line";
    msg += bad_lines.size() > 1 ? "s " : " ";
    for (std::size_t i = 0; i < bad_lines.size(); ++i) {
      if (i) msg += ", ";
      msg += std::to_string(bad_lines[i]);
    }
    throw IoError(msg);
  }
  if (!have_header) throw IoError(name + ": empty file (no header)");
  if (raw.empty()) throw IoError(name + ": no data rows");

  PointSet set;
  set.source = DatasetSource{name};
  set.points.reserve(raw.size());
  if (latlon) {
    const auto [lat_lo, lat_hi] = std::minmax_element(
        raw.begin(), raw.end(), [](const Point& p, const Point& q) { return p.x < q.x; });
    const auto [lon_lo, lon_hi] = std::minmax_element(
        raw.begin(), raw.end(), [](const Point& p, const Point& q) { return p.y < q.y; });
    const double lat0 = 0.5 * (lat_lo->x + lat_hi->x);
    const double lon0 = 0.5 * (lon_lo->y + lon_hi->y);
    constexpr double deg = std::numbers::pi / 180.0;
    const double cos_lat0 = std::cos(lat0 * deg);
    for (const auto& r : raw) {
      set.points.push_back({kEarthRadiusKm * (r.y - lon0) * deg * cos_lat0,
                            kEarthRadiusKm * (r.x - lat0) * deg});
    }
  } else {
    set.points = std::move(raw);
  }

  double x_lo = set.points.front().x, x_hi = x_lo;
  double y_lo = set.points.front().y, y_hi = y_lo;
  for (const auto& p : set.points) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  set.region = {x_lo, y_lo, x_hi - x_lo, y_hi - y_lo};
  return set;
}

PointSet ingest_dataset(const std::filesystem::path& path, Projection projection) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return parse_dataset(in, projection, path.string());
}

SimEstimate estimate_miss_rate(const PointSet& points, const Deployment& deployment,
                               const Provider& provider, std::span<const double> class_shares,
                               double radius, const SimOptions& options, PolicyLabel label) {
  if (options.trials < 1) throw ConfigError("trials must be >= 1", "/experiment/trials");
  if (!(radius >= 0.0)) throw ConfigError("radius must be >= 0", "/experiment/radii");
  const auto model = make_model(deployment, provider, class_shares);
  const auto counts = simulate_counts(points, model, radius, options.trials, options.seed, options);
  return summarise(counts, deployment, provider, model, radius, options.trials, label);
}

SimEstimate estimate_miss_rate_poisson(const Region& region, const Deployment& deployment,
                                       const Provider& provider,
                                       std::span<const double> class_shares, double radius,
                                       std::size_t deployments, const SimOptions& options,
                                       PolicyLabel label) {
  if (options.trials < 1) throw ConfigError("trials must be >= 1", "/experiment/trials");
  if (deployments < 1) throw ConfigError("need at least one deployment");
  const auto model = make_model(deployment, provider, class_shares);
  ClassCounts total(provider.classes.size());
  const std::size_t per = options.trials / deployments;
  const std::size_t extra = options.trials % deployments;
  for (std::size_t j = 0; j < deployments; ++j) {
    const std::size_t n = per + (j < extra ? 1 : 0);
    if (n == 0) continue;
    // Even streams place the cells, odd streams drive the trials.
    const auto set = generate_poisson(region, deployment.sc_density, stream_seed(options.seed, 2 * j));
    total.add(simulate_counts(set, model, radius, n, stream_seed(options.seed, 2 * j + 1), options));
  }
  return summarise(total, deployment, provider, model, radius, options.trials, label);
}

std::vector<PolicyRun> compare_policies(const PointSet& points, const Deployment& deployment,
                                        const Provider& provider, double b_c, double b_opp,
                                        std::span<const double> radii,
                                        const ComparisonOptions& options) {
  if (radii.empty()) throw ConfigError("radius grid must not be empty", "/experiment/radii");
  constexpr PolicyLabel kLabels[] = {PolicyLabel::Random, PolicyLabel::PopularityBased,
                                     PolicyLabel::CachingRateOptimizer,
                                     PolicyLabel::SimultaneousOptimizer};
  const double delta = deployment.reservation;
  const auto demands = provider.demands();
  const auto popularity = CachingPolicy::proportional(demands);

  std::vector<PolicyRun> runs;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    Deployment at_radius = deployment;
    at_radius.radius = radii[ri];
    const Provider derived = with_derived_availability(provider, at_radius);
    bool any_content = false;
    for (const auto& c : derived.classes) any_content = any_content || c.demand * c.availability > 0.0;

    for (std::size_t li = 0; li < std::size(kLabels); ++li) {
      const PolicyLabel label = kLabels[li];
      PolicyRun run;
      switch (label) {
        case PolicyLabel::Random:
          run.rate = b_c;
          run.policy = CachingPolicy::uniform(derived.classes.size());
          break;
        case PolicyLabel::PopularityBased:
          run.rate = b_c;
          run.policy = popularity;
          break;
        case PolicyLabel::CachingRateOptimizer: {
          run.policy = popularity;
          if (any_content) {
            Provider fixed = derived;
            fixed.kind = CachingRateOptimizer{popularity};
            run.rate = Game(GameConfig{{fixed}, at_radius}).best_response(0, b_opp);
          }
          break;
        }
        case PolicyLabel::SimultaneousOptimizer: {
          if (any_content) {
            Provider joint = derived;
            joint.kind = SimultaneousOptimizer{};
            run.rate = Game(GameConfig{{joint}, at_radius}).best_response(0, b_opp);
            run.policy = optimal_policy(run.rate, b_opp, derived, delta).policy;
          } else {
            run.policy = limit_policy_small_b(derived);
          }
          break;
        }
      }
      const double x = steady_share(run.rate, b_opp, delta);
      std::vector<double> shares(run.policy.size());
      for (std::size_t i = 0; i < shares.size(); ++i) shares[i] = x * run.policy[i];

      SimOptions sim = options.sim;
      sim.seed = stream_seed(options.sim.seed, ri * std::size(kLabels) + li);
      run.estimate = options.poisson_deployments > 0
                         ? estimate_miss_rate_poisson(points.region, at_radius, derived, shares,
                                                      radii[ri], options.poisson_deployments, sim,
                                                      label)
                         : estimate_miss_rate(points, at_radius, derived, shares, radii[ri], sim,
                                              label);
      run.model_mcr = mcr(run.policy, run.rate, b_opp, derived, delta);
      run.model_cost = run.model_mcr + provider.price * run.rate;
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

}  // namespace edgecache
