#pragma once

// Monte-Carlo validation of the missed cache rate over small-cell point sets.
//
// A trial drops a UE uniformly in the region (inset by the radius so every
// disk lies inside the region), draws a requested class with probability
// d_i / sum d, and counts a miss when none of the in-range cells holds the
// content. Each in-range cell holds it independently with probability
// P_i = min{N x_i / n_i, 1}, drawn fresh per trial.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edgecache/model.hpp"

namespace edgecache {

struct Point {
  double x = 0.0;  ///< km
  double y = 0.0;  ///< km
};

struct Region {
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;   ///< km
  double height = 0.0;  ///< km

  double area() const noexcept { return width * height; }
  bool contains(const Point& p) const noexcept {
    return p.x >= x0 && p.x <= x0 + width && p.y >= y0 && p.y <= y0 + height;
  }
};

struct PoissonSource {
  std::uint64_t seed = 0;
};
struct DatasetSource {
  std::string path;
};

struct PointSet {
  std::vector<Point> points;
  Region region;
  std::variant<PoissonSource, DatasetSource> source;

  double density() const { return static_cast<double>(points.size()) / region.area(); }
};

enum class Projection { PlanarXY, EquirectangularLatLon };

inline constexpr double kEarthRadiusKm = 6371.0;

/// Homogeneous Poisson process on `region`; deterministic given `seed`.
PointSet generate_poisson(const Region& region, double density, std::uint64_t seed);

/// Reads a CSV with a `x_km,y_km` (PlanarXY) or `lat,lon` (EquirectangularLatLon)
/// header. `#` lines and blank lines are skipped. Lat/lon is projected about
/// the bounding-box centre. Throws IoError listing malformed line numbers.
PointSet ingest_dataset(const std::filesystem::path& path, Projection projection);
PointSet parse_dataset(std::istream& in, Projection projection, std::string name = "<stream>");

enum class PolicyLabel { Random, PopularityBased, CachingRateOptimizer, SimultaneousOptimizer };

std::string_view to_string(PolicyLabel label);

struct SimEstimate {
  PolicyLabel policy = PolicyLabel::Random;
  double radius = 0.0;
  std::size_t trials = 0;
  double miss_rate = 0.0;  ///< sum_i d_i * empirical miss frequency of class i
  double std_error = 0.0;
  double analytic = 0.0;   ///< sum_i d_i exp(-pi r^2 Lambda P_i), the simulator's expectation
};

struct SimOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Trials per RNG stream. Results depend on this and the seed, never on
  /// the thread count.
  std::size_t shard_size = 4096;
};

/// `class_shares[i]` is x_c^i, the cache fraction held by class i. Uses
/// `deployment.slots_per_unit` for N and `deployment.sc_density` for the
/// analytic value; `radius` overrides `deployment.radius`.
SimEstimate estimate_miss_rate(const PointSet& points, const Deployment& deployment,
                               const Provider& provider, std::span<const double> class_shares,
                               double radius, const SimOptions& options,
                               PolicyLabel label = PolicyLabel::Random);

/// Pools `deployments` independent Poisson realisations of `region`, each
/// contributing trials / deployments trials, so the estimate targets the
/// ensemble expectation rather than one realisation.
SimEstimate estimate_miss_rate_poisson(const Region& region, const Deployment& deployment,
                                       const Provider& provider,
                                       std::span<const double> class_shares, double radius,
                                       std::size_t deployments, const SimOptions& options,
                                       PolicyLabel label = PolicyLabel::Random);

struct PolicyRun {
  SimEstimate estimate;
  double rate = 0.0;          ///< b_c used
  CachingPolicy policy;
  double model_mcr = 0.0;     ///< mcr(policy, rate, b_opp) with radius-derived availabilities
  double model_cost = 0.0;    ///< model_mcr + price * rate
};

struct ComparisonOptions {
  SimOptions sim;
  /// 0 simulates on the given point set; otherwise fresh Poisson deployments
  /// of the point set's region at `deployment.sc_density` are pooled.
  std::size_t poisson_deployments = 0;
};

/// The four policies at every radius: Random and PopularityBased at the
/// fixed rate b_c; CachingRateOptimizer (popularity weights) and
/// SimultaneousOptimizer (waterfilling) at their best-response rates.
std::vector<PolicyRun> compare_policies(const PointSet& points, const Deployment& deployment,
                                        const Provider& provider, double b_c, double b_opp,
                                        std::span<const double> radii,
                                        const ComparisonOptions& options);

}  // namespace edgecache
