#include "edgecache_cli/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <variant>

#include "edgecache/equilibrium.hpp"
#include "edgecache/errors.hpp"
#include "edgecache/policy.hpp"
#include "edgecache/random.hpp"
#include "edgecache/spatial.hpp"
#include "edgecache_cli/config.hpp"
#include "edgecache_cli/format.hpp"

#ifndef EDGECACHE_VERSION
#define EDGECACHE_VERSION "0.0.0"
#endif

namespace edgecache::cli {

namespace {

using json = nlohmann::json;

struct Globals {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool no_banner = false;
};

struct Flags {
  std::optional<double> b_c;
  std::optional<double> b_opp;
  std::vector<double> b_opp_list;
  std::string sweep_bc;
  std::string grid;
  std::string lambda_grid;
  std::optional<std::size_t> player;
  std::optional<std::size_t> max_iters;
};

// --- output rendering ----------------------------------------------------------

using Cell = std::variant<double, std::size_t, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
  bool fixed_digits = false;  // %.17g instead of shortest
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string render_csv(const Table& t) {
  std::string body = join_csv(t.header) + "\n";
  std::vector<std::string> fields;
  for (const auto& row : t.rows) {
    fields.clear();
    for (const auto& cell : row) {
      if (const double* d = std::get_if<double>(&cell)) {
        fields.push_back(t.fixed_digits ? g17(*d) : shortest(*d));
      } else if (const std::size_t* n = std::get_if<std::size_t>(&cell)) {
        fields.push_back(std::to_string(*n));
      } else {
        fields.push_back(csv_field(std::get<std::string>(cell)));
      }
    }
    body += join_csv(fields) + "\n";
  }
  return body;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string render_json_table(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit([&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) obj[t.header[i]] = number(v);
        else if constexpr (std::is_same_v<T, std::string>) {
          obj[t.header[i]] = v.empty() ? json(nullptr) : json(v);
        } else obj[t.header[i]] = v;
      }, row[i]);
    }
    rows.push_back(std::move(obj));
  }
  return rows.dump(2) + "\n";
}

struct Artifact {
  std::string stem;
  std::string body;
  bool is_json = false;
};

Artifact table_artifact(std::string stem, const Table& t, OutputFormat format) {
  if (format == OutputFormat::Json) return {std::move(stem), render_json_table(t), true};
  return {std::move(stem), render_csv(t), false};
}

Artifact report_artifact(std::string stem, const json& report) {
  return {std::move(stem), report.dump(2) + "\n", true};
}

// --- command helpers -----------------------------------------------------------

struct Context {
  const RunConfig& rc;
  const Flags& flags;
  std::uint64_t seed;
  unsigned threads;
};

void require_resolved(const RunConfig& rc) {
  if (!rc.availability_resolved) {
    throw ConfigError("required to derive class availabilities (or give every class an "
                      "explicit availability)",
                      "/deployment/radius");
  }
}

std::size_t player_of(const Context& ctx) {
  const std::size_t c = ctx.flags.player.value_or(ctx.rc.experiment.player);
  if (c >= ctx.rc.game.providers.size()) {
    throw ConfigError("player " + std::to_string(c) + " out of range (" +
                      std::to_string(ctx.rc.game.providers.size()) + " providers)");
  }
  return c;
}

double b_opp_of(const Context& ctx) {
  const double b = ctx.flags.b_opp.value_or(ctx.rc.experiment.b_opp);
  if (!(b >= 0.0)) throw ConfigError("b_opp must be >= 0", "/experiment/b_opp");
  return b;
}

double b_c_of(const Context& ctx) {
  if (ctx.flags.b_c) {
    if (!(*ctx.flags.b_c >= 0.0)) throw ConfigError("--b-c must be >= 0");
    return *ctx.flags.b_c;
  }
  if (ctx.rc.experiment.b_c) return *ctx.rc.experiment.b_c;
  throw ConfigError("caching rate required (--b-c or experiment.b_c)", "/experiment/b_c");
}

std::vector<double> weight_vector(const CachingPolicy& p) {
  return {p.weights().begin(), p.weights().end()};
}

std::string kind_name(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::Zero: return "zero";
    case EquilibriumKind::Saturated: return "saturated";
    case EquilibriumKind::Interior: return "interior";
  }
  return "unknown";
}

std::string boundary_name(BoundaryFlag b) {
  switch (b) {
    case BoundaryFlag::AtZero: return "at_zero";
    case BoundaryFlag::AtCap: return "at_cap";
    case BoundaryFlag::Interior: return "interior";
  }
  return "unknown";
}

// --- commands --------------------------------------------------------------------

Artifact cmd_policy(const Context& ctx) {
  require_resolved(ctx.rc);
  const std::size_t c = player_of(ctx);
  const Provider& provider = ctx.rc.game.providers[c];
  const double delta = ctx.rc.game.deployment.reservation;
  const double b_opp = b_opp_of(ctx);

  if (!ctx.flags.sweep_bc.empty()) {
    const auto grid = parse_grid_flag(ctx.flags.sweep_bc, "--sweep-bc").expand(provider.cap);
    Table t;
    t.header.push_back("b_c");
    for (std::size_t i = 0; i < provider.classes.size(); ++i) t.header.push_back("u_" + std::to_string(i + 1));
    for (double b : grid) {
      const auto sol = optimal_policy(b, b_opp, provider, delta);
      std::vector<Cell> row{b};
      for (double u : sol.policy.weights()) row.emplace_back(u);
      t.rows.push_back(std::move(row));
    }
    return table_artifact("policy_sweep", t, ctx.rc.output.format);
  }

  const double b_c = b_c_of(ctx);
  const auto sol = optimal_policy(b_c, b_opp, provider, delta);
  json report;
  report["provider"] = provider.name;
  report["b_c"] = b_c;
  report["b_opp"] = b_opp;
  report["reservation"] = delta;
  report["share"] = sol.share;
  report["weights"] = weight_vector(sol.policy);
  json active = json::array();
  for (std::size_t k = 0; k < sol.active_count; ++k) active.push_back(sol.order[k]);
  report["active_set"] = active;
  report["active_count"] = sol.active_count;
  report["order"] = sol.order;
  report["water_level"] = number(sol.water_level);
  report["log_water_level"] = number(sol.log_water_level);
  json alphas = json::array();
  for (double a : sol.alphas) alphas.push_back(number(a));
  report["alphas"] = alphas;
  report["mcr"] = mcr(sol.policy, b_c, b_opp, provider, delta);
  report["kkt"] = {
      {"level", number(sol.kkt.level)},
      {"stationarity_residual", number(sol.kkt.stationarity_residual)},
      {"min_relative_dual", number(sol.kkt.min_relative_dual)},
      {"complementary_slackness", number(sol.kkt.complementary_slackness)},
      {"satisfied", sol.kkt.satisfied()},
  };
  return report_artifact("policy", report);
}

Artifact cmd_mcr_curve(const Context& ctx) {
  require_resolved(ctx.rc);
  const std::size_t c = player_of(ctx);
  const Provider& provider = ctx.rc.game.providers[c];
  const double delta = ctx.rc.game.deployment.reservation;

  std::vector<double> b_opps = ctx.flags.b_opp_list;
  if (b_opps.empty()) b_opps = ctx.rc.experiment.b_opp_values;
  if (b_opps.empty()) b_opps.push_back(ctx.rc.experiment.b_opp);
  for (double b : b_opps) {
    if (!(b >= 0.0)) throw ConfigError("b_opp values must be >= 0", "/experiment/b_opp_values");
  }

  GridSpec spec;
  if (!ctx.flags.grid.empty()) spec = parse_grid_flag(ctx.flags.grid, "--grid");
  else if (ctx.rc.experiment.bc_grid) spec = *ctx.rc.experiment.bc_grid;
  else spec.steps = 101;
  const auto grid = spec.expand(provider.cap);

  const bool family = b_opps.size() > 1;
  Table t;
  if (family) t.header.push_back("b_opp");
  t.header.insert(t.header.end(), {"b_c", "U", "dU"});
  for (double b_opp : b_opps) {
    const OptimalMcrCurve curve(provider, b_opp, delta);
    for (double b : grid) {
      std::vector<Cell> row;
      if (family) row.emplace_back(b_opp);
      row.emplace_back(b);
      row.emplace_back(curve.value(b));
      row.emplace_back(curve.derivative(b));
      t.rows.push_back(std::move(row));
    }
  }
  return table_artifact("mcr_curve", t, ctx.rc.output.format);
}

Artifact cmd_best_response(const Context& ctx) {
  require_resolved(ctx.rc);
  const Game game(ctx.rc.game);
  const std::size_t c = player_of(ctx);
  const double b_opp = b_opp_of(ctx);
  const double rate = game.best_response(c, b_opp);
  const Provider& p = ctx.rc.game.providers[c];
  const double missed = game.missed_rate(c, rate, b_opp);
  json report;
  report["player"] = c;
  report["provider"] = p.name;
  report["b_opp"] = b_opp;
  report["rate"] = rate;
  report["mcr"] = missed;
  report["cost"] = missed + p.price * rate;
  report["marginal_cost"] = game.mcr_derivative(c, rate, b_opp) + p.price;
  return report_artifact("best_response", report);
}

json equilibrium_report(const RunConfig& rc, const EquilibriumResult& eq, const Game& game) {
  const auto trivial = game.trivial_equilibria();
  json report;
  report["kind"] = kind_name(eq.kind);
  report["clearing_total"] = eq.clearing_total;
  report["residual"] = eq.residual;
  report["trivial"] = {{"zero", trivial.zero}, {"saturated", trivial.saturated}};
  report["rates"] = eq.profile.rates;
  json players = json::array();
  for (std::size_t c = 0; c < eq.players.size(); ++c) {
    const auto& o = eq.players[c];
    players.push_back({
        {"name", rc.game.providers[c].name},
        {"rate", eq.profile.rates[c]},
        {"share", o.share},
        {"clipped_demand", o.clipped_demand},
        {"cost", o.cost},
        {"boundary", boundary_name(o.boundary)},
    });
  }
  report["players"] = players;
  return report;
}

Artifact cmd_equilibrium(const Context& ctx) {
  require_resolved(ctx.rc);
  const Game game(ctx.rc.game);
  NashOptions options;
  options.bracket_subdivisions = ctx.rc.experiment.bracket_subdivisions;
  const auto eq = game.nash_equilibrium(options);
  return report_artifact("equilibrium", equilibrium_report(ctx.rc, eq, game));
}

Artifact cmd_dynamics(const Context& ctx, std::ostream& err) {
  require_resolved(ctx.rc);
  const Game game(ctx.rc.game);
  const auto& spec = ctx.rc.experiment.dynamics;
  const std::size_t n = game.players();

  StrategyProfile initial;
  switch (spec.initial) {
    case InitialProfile::Zero: initial.rates.assign(n, 0.0); break;
    case InitialProfile::Caps:
      for (const auto& p : ctx.rc.game.providers) initial.rates.push_back(p.cap);
      break;
    case InitialProfile::Equilibrium: {
      NashOptions options;
      options.bracket_subdivisions = ctx.rc.experiment.bracket_subdivisions;
      initial = game.nash_equilibrium(options).profile;
      break;
    }
    case InitialProfile::Explicit: initial.rates = spec.initial_rates; break;
  }

  DynamicsOptions options;
  options.max_rounds = ctx.flags.max_iters.value_or(spec.max_rounds);
  options.tolerance = spec.tolerance;
  options.order = spec.order;
  options.seed = ctx.seed;
  const auto trace = game.myopic_dynamics(initial, options);
  if (!trace.converged) {
    err << "warning: dynamics did not converge within " << options.max_rounds << " rounds\n";
  }

  Table t;
  t.header = {"iter", "player"};
  for (std::size_t c = 0; c < n; ++c) t.header.push_back("b_" + std::to_string(c + 1));
  for (std::size_t c = 0; c < n; ++c) t.header.push_back("cost_" + std::to_string(c + 1));
  for (const auto& step : trace.steps) {
    std::vector<Cell> row{step.iteration, step.player + 1};
    for (double b : step.profile.rates) row.emplace_back(b);
    for (double v : step.costs) row.emplace_back(v);
    t.rows.push_back(std::move(row));
  }
  return table_artifact("dynamics", t, ctx.rc.output.format);
}

/// Smallest uniform price at which doing nothing is the equilibrium.
double zero_price_threshold(const GameConfig& game) {
  double top = 0.0;
  for (const auto& p : game.providers) top = std::max(top, -ShareCost(p).slope(0.0));
  return top / game.deployment.reservation;
}

Artifact cmd_revenue(const Context& ctx) {
  require_resolved(ctx.rc);
  const double threshold = zero_price_threshold(ctx.rc.game);
  GridSpec spec;
  if (!ctx.flags.lambda_grid.empty()) {
    spec = parse_grid_flag(ctx.flags.lambda_grid, "--lambda-grid");
  } else if (ctx.rc.experiment.lambda_grid) {
    spec = *ctx.rc.experiment.lambda_grid;
  } else {
    spec.include_zero = true;
    spec.log_spacing = true;
    spec.steps = 49;
    spec.lo = threshold * 1e-3;
    spec.hi_at_zero_threshold = true;
  }
  if (spec.log_spacing && !(threshold > 0.0) && !spec.hi) {
    throw ConfigError("zero-equilibrium price threshold is 0; give an explicit grid",
                      "/experiment/lambda_grid");
  }
  const auto prices = spec.expand(threshold);
  const auto sweep = revenue_sweep(ctx.rc.game, prices, ctx.threads);

  const std::size_t n = ctx.rc.game.providers.size();
  Table t;
  t.header = {"lambda", "revenue"};
  for (std::size_t c = 0; c < n; ++c) t.header.push_back("b_" + std::to_string(c + 1));
  t.header.push_back("error");
  for (const auto& pt : sweep.points) {
    std::vector<Cell> row{pt.price};
    if (pt.error) {
      row.emplace_back(std::nan(""));
      for (std::size_t c = 0; c < n; ++c) row.emplace_back(std::nan(""));
      row.emplace_back(*pt.error);
    } else {
      row.emplace_back(pt.revenue);
      for (double b : pt.rates) row.emplace_back(b);
      row.emplace_back(std::string());
    }
    t.rows.push_back(std::move(row));
  }
  return table_artifact("revenue", t, ctx.rc.output.format);
}

Artifact cmd_simulate(const Context& ctx) {
  const auto& sim = ctx.rc.experiment.simulation;
  const std::size_t c = player_of(ctx);
  const Provider& provider = ctx.rc.game.providers[c];
  const Deployment& deployment = ctx.rc.game.deployment;

  PointSet points = sim.dataset
                        ? ingest_dataset(*sim.dataset, sim.projection)
                        : generate_poisson(sim.region, deployment.sc_density,
                                           stream_seed(ctx.seed, 0x5eed5eedULL));
  ComparisonOptions options;
  options.sim.trials = sim.trials;
  options.sim.seed = ctx.seed;
  options.sim.threads = ctx.threads;
  options.sim.shard_size = sim.shard_size;
  options.poisson_deployments = sim.poisson_deployments;
  const auto runs =
      compare_policies(points, deployment, provider, b_c_of(ctx), b_opp_of(ctx), sim.radii, options);

  Table t;
  t.fixed_digits = true;
  t.header = {"policy", "radius_km", "trials", "miss_rate", "std_error", "analytic"};
  for (const auto& run : runs) {
    const auto& e = run.estimate;
    t.rows.push_back({std::string(to_string(e.policy)), e.radius, e.trials, e.miss_rate,
                      e.std_error, e.analytic});
  }
  return table_artifact("simulate", t, ctx.rc.output.format);
}

std::string validate_summary(const RunConfig& rc) {
  std::size_t classes = 0;
  for (const auto& p : rc.game.providers) classes += p.classes.size();
  std::string s = "config ok: " + std::to_string(rc.game.providers.size()) + " provider(s), " +
                  std::to_string(classes) + " class(es), hash " + rc.hash;
  if (!rc.availability_resolved) s += "; availabilities derived per simulation radius";
  return s + "\n";
}

void emit(const Artifact& a, const Globals& g, const RunConfig& rc, const std::string& command,
          std::uint64_t seed, std::ostream& out) {
  std::string text;
  if (!g.no_banner) {
    text = "# edgecache " EDGECACHE_VERSION " command=" + command + " config=fnv1a64:" + rc.hash +
           " seed=" + std::to_string(seed) + " rng=" + std::string(kRngAlgorithm) + "\n";
  }
  text += a.body;

  std::optional<std::filesystem::path> dir;
  if (!g.out_dir.empty()) dir = g.out_dir;
  else if (rc.output.directory) dir = rc.output.directory;
  if (!dir) {
    out << text;
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(*dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir->string() + ": " + ec.message());
  const auto file = *dir / (a.stem + (a.is_json ? ".json" : ".csv"));
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + file.string());
  f << text;
  f.close();
  if (!f) throw IoError("write failed for " + file.string());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Competitive edge caching: policies, equilibria and Monte Carlo validation",
               "edgecache"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  Flags f;
  app.add_option("--config", g.config, "Run configuration (JSON)")->required();
  app.add_option("--out", g.out_dir, "Write outputs into this directory");
  app.add_option("--seed", g.seed, "Seed overriding experiment.seed");
  app.add_option("--threads", g.threads, "Worker threads for sweeps and simulation")
      ->check(CLI::Range(1u, 1024u));
  app.add_flag("--no-banner", g.no_banner, "Omit the leading provenance comment line");

  auto* policy = app.add_subcommand("policy", "Optimal caching policy of one provider");
  policy->add_option("--b-c", f.b_c, "Caching rate");
  policy->add_option("--b-opp", f.b_opp, "Opponents' aggregate caching rate");
  policy->add_option("--player", f.player, "Provider index (0-based)");
  policy->add_option("--sweep-bc", f.sweep_bc, "lo:hi:steps grid of caching rates");

  auto* curve = app.add_subcommand("mcr-curve", "Optimal missed cache rate and slope over b_c");
  curve->add_option("--b-opp", f.b_opp_list, "Opponents' rate(s), comma separated")->delimiter(',');
  curve->add_option("--player", f.player, "Provider index (0-based)");
  curve->add_option("--grid", f.grid, "lo:hi:steps grid of caching rates");

  auto* br = app.add_subcommand("best-response", "Best-response caching rate");
  br->add_option("--b-opp", f.b_opp, "Opponents' aggregate caching rate");
  br->add_option("--player", f.player, "Provider index (0-based)");

  auto* eq = app.add_subcommand("equilibrium", "Nash equilibrium of the caching game");
  auto* dyn = app.add_subcommand("dynamics", "Myopic best-response dynamics trace");
  dyn->add_option("--max-iters", f.max_iters, "Maximum number of rounds")->check(CLI::PositiveNumber);
  auto* rev = app.add_subcommand("revenue", "Operator revenue at equilibrium over a price grid");
  rev->add_option("--lambda-grid", f.lambda_grid, "lo:hi:steps price grid");
  auto* simc = app.add_subcommand("simulate", "Monte Carlo missed cache rate of four policies");
  simc->add_option("--b-c", f.b_c, "Fixed caching rate");
  simc->add_option("--b-opp", f.b_opp, "Opponents' aggregate caching rate");
  simc->add_option("--player", f.player, "Provider index (0-based)");
  auto* check = app.add_subcommand("validate-config", "Validate the configuration and exit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    const RunConfig rc = load_config(g.config);
    const std::uint64_t seed = g.seed.value_or(rc.experiment.seed);
    const Context ctx{rc, f, seed, g.threads};

    if (sub == check) {
      out << validate_summary(rc);
      return kExitOk;
    }
    Artifact a;
    if (sub == policy) a = cmd_policy(ctx);
    else if (sub == curve) a = cmd_mcr_curve(ctx);
    else if (sub == br) a = cmd_best_response(ctx);
    else if (sub == eq) a = cmd_equilibrium(ctx);
    else if (sub == dyn) a = cmd_dynamics(ctx, err);
    else if (sub == rev) a = cmd_revenue(ctx);
    else if (sub == simc) a = cmd_simulate(ctx);
    emit(a, g, rc, command, seed, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace edgecache::cli
