#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "edgecache/errors.hpp"
#include "edgecache/model.hpp"
#include "edgecache_cli/cli.hpp"
#include "edgecache_cli/config.hpp"
#include "edgecache_cli/format.hpp"

namespace edgecache::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_path(const std::string& name) { return std::string(EDGECACHE_CONFIGS) + "/" + name; }

class TempConfig {
 public:
  explicit TempConfig(const json& doc) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("edgecache_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".json");
    std::ofstream(path_) << doc.dump();
  }
  ~TempConfig() { fs::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  fs::path path_;
};

json base_config() {
  return json::parse(R"({
    "deployment": {"sc_density": 10, "slots_per_unit": 5, "reservation": 1},
    "providers": [{"cap": 10, "price": 0.05,
                   "classes": [{"demand": 2, "availability": 4}, {"demand": 1, "availability": 4}]}],
    "experiment": {"b_c": 1, "b_opp": 0}
  })");
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Format, ShortestRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, 0.0}) {
    EXPECT_EQ(std::stod(shortest(v)), v);
  }
  EXPECT_EQ(shortest(0.5), "0.5");
  EXPECT_EQ(g17(0.1), "0.10000000000000001");
  EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
}

TEST(Config, RejectsUnknownKeysWithPointer) {
  auto doc = base_config();
  doc["providers"][0]["classes"][1]["popularity"] = 3;
  EXPECT_THROW(
      {
        try {
          parse_config(doc);
        } catch (const ConfigError& e) {
          EXPECT_EQ(e.path(), "/providers/0/classes/1/popularity");
          throw;
        }
      },
      ConfigError);
}

TEST(Config, TypeAndInvariantErrors) {
  auto doc = base_config();
  doc["deployment"]["slots_per_unit"] = 2.5;
  try {
    parse_config(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/deployment/slots_per_unit");
  }
  doc = base_config();
  doc["deployment"]["reservation"] = 0;
  try {
    parse_config(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/deployment/reservation");
  }
  doc = base_config();
  doc["providers"][0]["kind"] = "caching_rate";
  doc["providers"][0]["fixed_policy"] = {0.5, 0.6};
  try {
    parse_config(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/providers/0/fixed_policy");
  }
}

TEST(Config, DerivedAvailabilityNeedsRadiusOutsideSimulation) {
  auto doc = base_config();
  doc["providers"][0]["classes"] = json::parse(R"([{"demand": 1, "count": 10}])");
  const auto rc = parse_config(doc);
  EXPECT_FALSE(rc.availability_resolved);
  TempConfig cfg(doc);
  EXPECT_EQ(run({"--config", cfg.path(), "policy"}).code, kExitConfig);
  EXPECT_EQ(run({"--config", cfg.path(), "validate-config"}).code, kExitOk);

  doc["deployment"]["radius"] = 0.1;
  const auto resolved = parse_config(doc);
  EXPECT_TRUE(resolved.availability_resolved);
  EXPECT_NEAR(resolved.game.providers[0].classes[0].availability,
              std::acos(-1.0) * 0.01 * 10 * 5 / 10, 1e-15);
}

TEST(Config, HashIgnoresFormatting) {
  const auto doc = base_config();
  EXPECT_EQ(parse_config(doc).hash, parse_config(json::parse(doc.dump(4))).hash);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"policy"}).code, kExitConfig);
  EXPECT_EQ(run({"--config", "/nonexistent.json", "policy"}).code, kExitIo);
  EXPECT_EQ(run({"--config", config_path("fig1_milan.json"), "bogus"}).code, kExitConfig);
  EXPECT_EQ(run({"--config", config_path("fig1_milan.json"), "policy", "--b-c", "-1"}).code,
            kExitConfig);
  EXPECT_EQ(run({"--help"}).code, kExitOk);

  auto doc = base_config();
  TempConfig cfg(doc);
  EXPECT_EQ(run({"--config", cfg.path(), "validate-config"}).code, kExitOk);

  // An unreadable dataset is an I/O failure.
  doc["experiment"]["simulation"] = json::parse(R"({"dataset": {"path": "/nonexistent.csv"}})");
  TempConfig bad(doc);
  EXPECT_EQ(run({"--config", bad.path(), "simulate"}).code, kExitIo);
}

TEST(Cli, UnknownKeyMessageCarriesPath) {
  auto doc = base_config();
  doc["output"] = {{"colour", "red"}};
  TempConfig cfg(doc);
  const auto r = run({"--config", cfg.path(), "validate-config"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("/output/colour"), std::string::npos) << r.err;
}

TEST(Cli, BannerLine) {
  TempConfig cfg(base_config());
  const auto with = run({"--config", cfg.path(), "--seed", "12", "policy"});
  ASSERT_EQ(with.code, 0) << with.err;
  const auto first = lines(with.out).front();
  EXPECT_EQ(first.rfind("# edgecache ", 0), 0u);
  EXPECT_NE(first.find("seed=12"), std::string::npos);
  EXPECT_NE(first.find("config=fnv1a64:" + parse_config(base_config()).hash), std::string::npos);
  const auto without = run({"--config", cfg.path(), "--no-banner", "policy"});
  EXPECT_EQ(without.out, with.out.substr(with.out.find('\n') + 1));
}

TEST(Cli, PolicyReportRoundTrips) {
  TempConfig cfg(base_config());
  const auto r = run({"--config", cfg.path(), "--no-banner", "policy"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  const auto weights = report["weights"].get<std::vector<double>>();
  const CachingPolicy reread(weights);
  EXPECT_NEAR(reread[0], 0.6733, 1e-3);
  EXPECT_EQ(report["active_count"], 2);
  EXPECT_TRUE(report["kkt"]["satisfied"].get<bool>());
  // Serialise again and compare bit patterns.
  const auto again = json::parse(json(weights).dump()).get<std::vector<double>>();
  ASSERT_EQ(again.size(), weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    EXPECT_EQ(std::memcmp(&again[i], &weights[i], sizeof(double)), 0);
  }
}

TEST(Cli, SingleClassPolicy) {
  auto doc = base_config();
  doc["providers"][0]["classes"] = json::parse(R"([{"demand": 3, "availability": 2}])");
  TempConfig cfg(doc);
  const auto r = run({"--config", cfg.path(), "--no-banner", "policy"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["weights"], json::array({1.0}));
}

TEST(Cli, PolicySweepColumns) {
  TempConfig cfg(base_config());
  const auto r = run({"--config", cfg.path(), "--no-banner", "policy", "--sweep-bc", "0:2:5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 6u);
  EXPECT_EQ(ls[0], "b_c,u_1,u_2");
  EXPECT_EQ(ls[1], "0,1,0");
}

TEST(Cli, McrCurveStartsAtTotalDemandAndIsConvex) {
  TempConfig cfg(base_config());
  const auto r = run({"--config", cfg.path(), "--no-banner", "mcr-curve", "--grid", "0:10:201"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls[0], "b_c,U,dU");
  std::vector<double> u;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto c1 = ls[i].find(',');
    const auto c2 = ls[i].find(',', c1 + 1);
    u.push_back(std::stod(ls[i].substr(c1 + 1, c2 - c1 - 1)));
  }
  EXPECT_EQ(u.front(), 3.0);
  for (std::size_t i = 1; i + 1 < u.size(); ++i) EXPECT_GE(u[i - 1] - 2 * u[i] + u[i + 1], -1e-9);
}

TEST(Cli, McrCurveFamilyAddsColumn) {
  const auto r = run({"--config", config_path("fig1_milan.json"), "--no-banner", "mcr-curve",
                      "--b-opp", "200,600,1000", "--grid", "0:400:11"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  EXPECT_EQ(ls[0], "b_opp,b_c,U,dU");
  EXPECT_EQ(ls.size(), 34u);
}

TEST(Cli, DynamicsFromEquilibriumIsOneQuietRound) {
  auto doc = json::parse(std::ifstream(config_path("fig2b_dynamics.json")));
  doc["experiment"]["dynamics"]["initial"] = "equilibrium";
  TempConfig cfg(doc);
  const auto r = run({"--config", cfg.path(), "--no-banner", "dynamics"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  EXPECT_EQ(ls[0], "iter,player,b_1,b_2,b_3,cost_1,cost_2,cost_3");
  EXPECT_EQ(ls.size(), 4u);
}

TEST(Cli, RevenueFirstRowIsZero) {
  const auto r = run({"--config", config_path("fig2d_revenue.json"), "--no-banner", "revenue"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  EXPECT_EQ(ls[0], "lambda,revenue,b_1,b_2,b_3,error");
  EXPECT_EQ(ls[1].substr(0, 4), "0,0,");
  EXPECT_EQ(ls.size(), 51u);
}

TEST(Cli, SimulateCsvLayout) {
  auto doc = json::parse(std::ifstream(config_path("fig1_milan.json")));
  doc["experiment"]["simulation"]["trials"] = 2000;
  doc["experiment"]["simulation"]["radii"] = {0.1};
  TempConfig cfg(doc);
  const auto r = run({"--config", cfg.path(), "--no-banner", "--threads", "2", "simulate"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 5u);
  EXPECT_EQ(ls[0], "policy,radius_km,trials,miss_rate,std_error,analytic");
  EXPECT_EQ(ls[1].rfind("random,0.10000000000000001,2000,", 0), 0u) << ls[1];
  const auto one = run({"--config", cfg.path(), "--no-banner", "simulate"});
  EXPECT_EQ(one.out, r.out);
}

TEST(Cli, JsonTableFormat) {
  auto doc = base_config();
  doc["output"] = {{"format", "json"}};
  TempConfig cfg(doc);
  const auto r = run({"--config", cfg.path(), "--no-banner", "mcr-curve", "--grid", "0:1:3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = json::parse(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["U"], 3.0);
}

TEST(Cli, WritesIntoOutDirectory) {
  const auto dir = fs::temp_directory_path() / ("edgecache_out_" + std::to_string(::getpid()));
  TempConfig cfg(base_config());
  const auto r = run({"--config", cfg.path(), "--out", dir.string(), "equilibrium"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(fs::exists(dir / "equilibrium.json"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace edgecache::cli
