#include "edgecache_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "edgecache/errors.hpp"
#include "edgecache_cli/format.hpp"

namespace edgecache::cli {

namespace {

using json = nlohmann::json;

std::string child(const std::string& path, std::string_view key) {
  std::string out = path + "/";
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

std::string where(const std::string& path) { return path.empty() ? "/" : path; }

void expect_object(const json& v, const std::string& path,
                   std::initializer_list<std::string_view> allowed) {
  if (!v.is_object()) throw ConfigError("expected an object", where(path));
  for (const auto& item : v.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "'", child(path, item.key()));
    }
  }
}

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, std::string_view key, const std::string& path) {
  if (const json* v = find(obj, key)) return *v;
  throw ConfigError("missing required key '" + std::string(key) + "'", child(path, key));
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError("expected a number", path);
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError("expected an integer", path);
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw ConfigError("integer out of range", path);
  }
  return v.get<std::int64_t>();
}

std::size_t as_count(const json& v, const std::string& path, std::size_t minimum) {
  const auto n = as_integer(v, path);
  if (n < static_cast<std::int64_t>(minimum)) {
    throw ConfigError("must be >= " + std::to_string(minimum), path);
  }
  return static_cast<std::size_t>(n);
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw ConfigError("seed must be >= 0", path);
  throw ConfigError("expected an unsigned integer", path);
}

const std::string& as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError("expected a string", path);
  return v.get_ref<const std::string&>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError("expected true or false", path);
  return v.get<bool>();
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError("expected an array of numbers", path);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(path, i)));
  return out;
}

double nonnegative(const json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!(x >= 0.0)) throw ConfigError("must be >= 0", path);
  return x;
}

// --- sections ----------------------------------------------------------------

struct DeploymentParse {
  Deployment deployment;
  bool has_radius = false;
};

DeploymentParse parse_deployment(const json& v, const std::string& path) {
  expect_object(v, path,
                {"sc_density", "radius", "slots_per_unit", "unit_count", "reservation",
                 "expiry_rate"});
  DeploymentParse out;
  Deployment& d = out.deployment;
  d.sc_density = as_number(require(v, "sc_density", path), child(path, "sc_density"));
  d.slots_per_unit = as_integer(require(v, "slots_per_unit", path), child(path, "slots_per_unit"));
  d.reservation = as_number(require(v, "reservation", path), child(path, "reservation"));
  if (const json* r = find(v, "radius")) {
    d.radius = as_number(*r, child(path, "radius"));
    out.has_radius = true;
  }
  if (const json* k = find(v, "unit_count")) d.unit_count = as_integer(*k, child(path, "unit_count"));
  if (const json* e = find(v, "expiry_rate")) d.expiry_rate = as_number(*e, child(path, "expiry_rate"));
  validate(d, path);
  return out;
}

struct ProviderParse {
  Provider provider;
  bool needs_radius = false;
};

ProviderParse parse_provider(const json& v, const std::string& path, std::size_t index) {
  expect_object(v, path, {"name", "classes", "cap", "price", "kind", "fixed_policy"});
  ProviderParse out;
  Provider& p = out.provider;
  p.name = "cp" + std::to_string(index + 1);
  if (const json* n = find(v, "name")) p.name = as_string(*n, child(path, "name"));
  p.cap = as_number(require(v, "cap", path), child(path, "cap"));
  if (const json* pr = find(v, "price")) p.price = as_number(*pr, child(path, "price"));

  const std::string classes_path = child(path, "classes");
  const json& classes = require(v, "classes", path);
  if (!classes.is_array()) throw ConfigError("expected an array of classes", classes_path);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string cp = child(classes_path, i);
    const json& c = classes[i];
    expect_object(c, cp, {"demand", "count", "availability"});
    ContentClass cls;
    cls.demand = as_number(require(c, "demand", cp), child(cp, "demand"));
    if (const json* n = find(c, "count")) cls.count = as_integer(*n, child(cp, "count"));
    if (const json* a = find(c, "availability")) {
      cls.availability = as_number(*a, child(cp, "availability"));
    } else {
      cls.availability = std::nan("");  // derived later
      out.needs_radius = true;
      if (!find(c, "count")) {
        throw ConfigError("count is required when availability is derived", child(cp, "count"));
      }
    }
    p.classes.push_back(cls);
  }

  std::string kind = "simultaneous";
  if (const json* k = find(v, "kind")) kind = as_string(*k, child(path, "kind"));
  const json* fixed = find(v, "fixed_policy");
  if (kind == "simultaneous") {
    if (fixed) {
      throw ConfigError("fixed_policy applies only to kind 'caching_rate'",
                        child(path, "fixed_policy"));
    }
    p.kind = SimultaneousOptimizer{};
  } else if (kind == "caching_rate") {
    const std::string fp = child(path, "fixed_policy");
    std::vector<double> demands;
    for (const auto& c : p.classes) demands.push_back(c.demand);
    CachingPolicy policy;
    if (!fixed || (fixed->is_string() && fixed->get<std::string>() == "popularity")) {
      if (std::all_of(demands.begin(), demands.end(), [](double d) { return d == 0.0; })) {
        throw ConfigError("popularity policy needs some positive demand", fp);
      }
      for (std::size_t i = 0; i < demands.size(); ++i) {
        if (!(demands[i] >= 0.0)) {
          throw ConfigError("demand must be >= 0", child(child(classes_path, i), "demand"));
        }
      }
      policy = CachingPolicy::proportional(demands);
    } else if (fixed->is_string() && fixed->get<std::string>() == "uniform") {
      policy = CachingPolicy::uniform(std::max<std::size_t>(p.classes.size(), 1));
    } else if (fixed->is_array()) {
      try {
        policy = CachingPolicy(number_list(*fixed, fp));
      } catch (const ConfigError& e) {
        if (!e.path().empty()) throw;
        throw ConfigError(e.what(), fp);
      }
    } else {
      throw ConfigError("expected 'popularity', 'uniform' or an array of weights", fp);
    }
    p.kind = CachingRateOptimizer{std::move(policy)};
  } else {
    throw ConfigError("kind must be 'simultaneous' or 'caching_rate'", child(path, "kind"));
  }
  return out;
}

GridSpec parse_grid(const json& v, const std::string& path, bool allow_zero_threshold) {
  GridSpec g;
  if (v.is_array()) {
    g.values = number_list(v, path);
    if (g.values.empty()) throw ConfigError("grid must not be empty", path);
    return g;
  }
  expect_object(v, path, {"lo", "hi", "steps", "spacing", "include_zero"});
  g.lo = as_number(require(v, "lo", path), child(path, "lo"));
  g.steps = as_count(require(v, "steps", path), child(path, "steps"), 1);
  if (const json* hi = find(v, "hi")) {
    if (allow_zero_threshold && hi->is_string() && hi->get<std::string>() == "zero_threshold") {
      g.hi_at_zero_threshold = true;
    } else {
      g.hi = as_number(*hi, child(path, "hi"));
    }
  }
  if (const json* s = find(v, "spacing")) {
    const auto& spacing = as_string(*s, child(path, "spacing"));
    if (spacing == "log") g.log_spacing = true;
    else if (spacing != "linear") {
      throw ConfigError("spacing must be 'linear' or 'log'", child(path, "spacing"));
    }
  }
  if (const json* z = find(v, "include_zero")) g.include_zero = as_bool(*z, child(path, "include_zero"));
  if (!(g.lo >= 0.0)) throw ConfigError("must be >= 0", child(path, "lo"));
  if (g.log_spacing && !(g.lo > 0.0)) {
    throw ConfigError("log spacing needs lo > 0", child(path, "lo"));
  }
  if (g.hi && !(*g.hi >= g.lo)) throw ConfigError("hi must be >= lo", child(path, "hi"));
  return g;
}

DynamicsSpec parse_dynamics(const json& v, const std::string& path) {
  expect_object(v, path, {"initial", "max_rounds", "tolerance", "order"});
  DynamicsSpec d;
  if (const json* init = find(v, "initial")) {
    const std::string ip = child(path, "initial");
    if (init->is_array()) {
      d.initial = InitialProfile::Explicit;
      d.initial_rates = number_list(*init, ip);
    } else {
      const auto& s = as_string(*init, ip);
      if (s == "zero") d.initial = InitialProfile::Zero;
      else if (s == "caps") d.initial = InitialProfile::Caps;
      else if (s == "equilibrium") d.initial = InitialProfile::Equilibrium;
      else throw ConfigError("expected 'zero', 'caps', 'equilibrium' or an array of rates", ip);
    }
  }
  if (const json* m = find(v, "max_rounds")) d.max_rounds = as_count(*m, child(path, "max_rounds"), 1);
  if (const json* t = find(v, "tolerance")) {
    d.tolerance = as_number(*t, child(path, "tolerance"));
    if (!(d.tolerance > 0.0)) throw ConfigError("must be > 0", child(path, "tolerance"));
  }
  if (const json* o = find(v, "order")) {
    const auto& s = as_string(*o, child(path, "order"));
    if (s == "round_robin") d.order = PlayerOrder::RoundRobin;
    else if (s == "random") d.order = PlayerOrder::SeededRandom;
    else throw ConfigError("order must be 'round_robin' or 'random'", child(path, "order"));
  }
  return d;
}

SimulationSpec parse_simulation(const json& v, const std::string& path,
                                const std::filesystem::path& base_dir) {
  expect_object(v, path,
                {"region", "dataset", "radii", "trials", "poisson_deployments", "shard_size"});
  SimulationSpec s;
  if (const json* r = find(v, "region")) {
    const std::string rp = child(path, "region");
    expect_object(*r, rp, {"x0", "y0", "width", "height"});
    if (const json* x = find(*r, "x0")) s.region.x0 = as_number(*x, child(rp, "x0"));
    if (const json* y = find(*r, "y0")) s.region.y0 = as_number(*y, child(rp, "y0"));
    s.region.width = as_number(require(*r, "width", rp), child(rp, "width"));
    s.region.height = as_number(require(*r, "height", rp), child(rp, "height"));
    if (!(s.region.width > 0.0)) throw ConfigError("must be > 0", child(rp, "width"));
    if (!(s.region.height > 0.0)) throw ConfigError("must be > 0", child(rp, "height"));
  }
  if (const json* d = find(v, "dataset")) {
    const std::string dp = child(path, "dataset");
    expect_object(*d, dp, {"path", "projection"});
    std::filesystem::path file = as_string(require(*d, "path", dp), child(dp, "path"));
    s.dataset = file.is_relative() && !base_dir.empty() ? base_dir / file : file;
    if (const json* pr = find(*d, "projection")) {
      const auto& name = as_string(*pr, child(dp, "projection"));
      if (name == "xy") s.projection = Projection::PlanarXY;
      else if (name == "latlon") s.projection = Projection::EquirectangularLatLon;
      else throw ConfigError("projection must be 'xy' or 'latlon'", child(dp, "projection"));
    }
  }
  if (const json* r = find(v, "radii")) {
    const std::string rp = child(path, "radii");
    s.radii = number_list(*r, rp);
    if (s.radii.empty()) throw ConfigError("radius grid must not be empty", rp);
    for (std::size_t i = 0; i < s.radii.size(); ++i) nonnegative((*r)[i], child(rp, i));
  }
  if (const json* t = find(v, "trials")) s.trials = as_count(*t, child(path, "trials"), 1);
  if (const json* p = find(v, "poisson_deployments")) {
    s.poisson_deployments = as_count(*p, child(path, "poisson_deployments"), 0);
  }
  if (const json* sh = find(v, "shard_size")) s.shard_size = as_count(*sh, child(path, "shard_size"), 1);
  return s;
}

ExperimentSpec parse_experiment(const json& v, const std::string& path,
                                const std::filesystem::path& base_dir) {
  expect_object(v, path,
                {"seed", "player", "b_c", "b_opp", "b_opp_values", "bc_grid", "lambda_grid",
                 "nash", "dynamics", "simulation"});
  ExperimentSpec e;
  if (const json* s = find(v, "seed")) e.seed = as_seed(*s, child(path, "seed"));
  if (const json* p = find(v, "player")) e.player = as_count(*p, child(path, "player"), 0);
  if (const json* b = find(v, "b_c")) e.b_c = nonnegative(*b, child(path, "b_c"));
  if (const json* b = find(v, "b_opp")) e.b_opp = nonnegative(*b, child(path, "b_opp"));
  if (const json* b = find(v, "b_opp_values")) {
    const std::string bp = child(path, "b_opp_values");
    e.b_opp_values = number_list(*b, bp);
    for (std::size_t i = 0; i < e.b_opp_values.size(); ++i) nonnegative((*b)[i], child(bp, i));
  }
  if (const json* g = find(v, "bc_grid")) e.bc_grid = parse_grid(*g, child(path, "bc_grid"), false);
  if (const json* g = find(v, "lambda_grid")) {
    e.lambda_grid = parse_grid(*g, child(path, "lambda_grid"), true);
  }
  if (const json* n = find(v, "nash")) {
    const std::string np = child(path, "nash");
    expect_object(*n, np, {"bracket_subdivisions"});
    if (const json* b = find(*n, "bracket_subdivisions")) {
      e.bracket_subdivisions = as_count(*b, child(np, "bracket_subdivisions"), 1);
    }
  }
  if (const json* d = find(v, "dynamics")) e.dynamics = parse_dynamics(*d, child(path, "dynamics"));
  if (const json* s = find(v, "simulation")) {
    e.simulation = parse_simulation(*s, child(path, "simulation"), base_dir);
  }
  return e;
}

OutputSpec parse_output(const json& v, const std::string& path,
                        const std::filesystem::path& base_dir) {
  expect_object(v, path, {"directory", "format"});
  OutputSpec o;
  if (const json* d = find(v, "directory")) {
    std::filesystem::path dir = as_string(*d, child(path, "directory"));
    o.directory = dir.is_relative() && !base_dir.empty() ? base_dir / dir : dir;
  }
  if (const json* f = find(v, "format")) {
    const auto& name = as_string(*f, child(path, "format"));
    if (name == "csv") o.format = OutputFormat::Csv;
    else if (name == "json") o.format = OutputFormat::Json;
    else throw ConfigError("format must be 'csv' or 'json'", child(path, "format"));
  }
  return o;
}

}  // namespace

std::vector<double> GridSpec::expand(double default_hi) const {
  if (explicit_values()) return values;
  const double top = hi.value_or(default_hi);
  std::vector<double> out;
  if (include_zero) out.push_back(0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    if (steps == 1) {
      out.push_back(lo);
      break;
    }
    const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
    double v = log_spacing ? std::exp(std::log(lo) + t * (std::log(top) - std::log(lo)))
                           : lo + t * (top - lo);
    if (i == steps - 1) v = top;
    if (i == 0) v = lo;
    out.push_back(v);
  }
  return out;
}

GridSpec parse_grid_flag(const std::string& text, const std::string& what) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  auto fail = [&]() -> GridSpec {
    throw ConfigError(what + " expects lo:hi:steps, got '" + text + "'");
  };
  if (parts.size() != 3) return fail();
  GridSpec g;
  double hi = 0.0;
  long long steps = 0;
  auto num = [](const std::string& s, auto& out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
  };
  if (!num(parts[0], g.lo) || !num(parts[1], hi) || !num(parts[2], steps)) return fail();
  if (!(g.lo >= 0.0) || !(hi >= g.lo) || steps < 1) return fail();
  g.hi = hi;
  g.steps = static_cast<std::size_t>(steps);
  return g;
}

RunConfig parse_config(const json& document, const std::filesystem::path& base_dir) {
  expect_object(document, "", {"deployment", "providers", "experiment", "output"});
  RunConfig rc;
  rc.document = document;
  rc.hash = hex64(fnv1a64(document.dump()));

  auto dep = parse_deployment(require(document, "deployment", ""), "/deployment");
  rc.game.deployment = dep.deployment;

  const json& providers = require(document, "providers", "");
  if (!providers.is_array() || providers.empty()) {
    throw ConfigError("expected a non-empty array of providers", "/providers");
  }
  bool needs_radius = false;
  for (std::size_t c = 0; c < providers.size(); ++c) {
    auto parsed = parse_provider(providers[c], child("/providers", c), c);
    needs_radius = needs_radius || parsed.needs_radius;
    rc.game.providers.push_back(std::move(parsed.provider));
  }

  rc.availability_resolved = !needs_radius || dep.has_radius;
  Deployment probe = rc.game.deployment;
  if (!rc.availability_resolved) probe.radius = 1.0;  // structural checks only
  for (std::size_t c = 0; c < rc.game.providers.size(); ++c) {
    auto& p = rc.game.providers[c];
    Provider resolved = p;
    for (auto& cls : resolved.classes) {
      if (std::isnan(cls.availability)) cls.availability = derive_availability(probe, cls);
    }
    validate(resolved, child("/providers", c));
    if (rc.availability_resolved) p = std::move(resolved);
  }

  if (const json* e = find(document, "experiment")) {
    rc.experiment = parse_experiment(*e, "/experiment", base_dir);
  }
  if (rc.experiment.player >= rc.game.providers.size()) {
    throw ConfigError("player index out of range", "/experiment/player");
  }
  if (rc.experiment.dynamics.initial == InitialProfile::Explicit &&
      rc.experiment.dynamics.initial_rates.size() != rc.game.providers.size()) {
    throw ConfigError("initial profile needs one rate per provider",
                      "/experiment/dynamics/initial");
  }
  if (const json* o = find(document, "output")) rc.output = parse_output(*o, "/output", base_dir);
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json document;
  try {
    document = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(document, path.parent_path());
}

}  // namespace edgecache::cli
