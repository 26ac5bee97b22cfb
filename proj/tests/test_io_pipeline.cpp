#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "zsirl/equilibrium.hpp"
#include "zsirl/io.hpp"
#include "zsirl/pipeline.hpp"

using namespace zsirl;
namespace fs = std::filesystem;
using testing_util::max_abs;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zsirl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("game documents round-trip") {
  const MarkovGame g = build_soccer(SoccerSpec::small(SoccerVariant::Shoot, 0.3));
  const Json doc = game_to_json(g, true);
  CHECK(doc["format"] == "zsirl.game/1");
  const MarkovGame back = game_from_json(doc);
  CHECK(back.num_states() == 32);
  CHECK(back.num_actions() == 6);
  CHECK(*back.soccer() == *g.soccer());
  CHECK(max_abs(Matrix(back.kernel()) - Matrix(g.kernel())) == 0.0);
  CHECK((back.rewards().values().array() == g.rewards().values().array()).all());

  // A tampered kernel no longer matches the rebuilt one.
  Json bad = doc;
  bad["kernel"][0][4] = 0.25;
  CHECK_THROWS(game_from_json(bad));

  // Non-soccer games travel with their kernel.
  const MarkovGame r = testing_util::random_game(3, 2, 0.7, 1);
  const MarkovGame rb = game_from_json(game_to_json(r, true));
  CHECK(max_abs(Matrix(rb.kernel()) - Matrix(r.kernel())) == 0.0);
}

TEST_CASE("soccer overrides keep unspecified fields") {
  const SoccerSpec base = SoccerSpec::paper(SoccerVariant::Shoot);
  const SoccerSpec s = soccer_from_json(Json::parse(R"({"beta": 0.0, "initial_pos_a": 8})"), base);
  CHECK(s.beta == 0.0);
  CHECK(s.grid.initial_pos_a == 8);
  CHECK(s.grid.goal_squares_a == base.grid.goal_squares_a);
  CHECK(s.pss_a == base.pss_a);
}

TEST_CASE("CSV files round-trip") {
  const fs::path dir = scratch("csv");
  const MarkovGame g = build_soccer(SoccerSpec::small(SoccerVariant::Shoot));
  write_rewards_csv(dir / "r.csv", g.rewards(), "truth");
  const RewardVector back = read_rewards_csv(dir / "r.csv", 32, 6);
  CHECK(back.layout() == RewardLayout::StateJointAction);
  CHECK((back.values().array() == g.rewards().values().array()).all());
  CHECK(count_lines(dir / "r.csv") == 2 + 32 * 36);

  const Bipolicy bp = testing_util::random_bipolicy(32, 6, 2);
  write_bipolicy_csv(dir / "b.csv", bp);
  const Bipolicy bb = read_bipolicy_csv(dir / "b.csv", 32, 6);
  CHECK((bb.pi1.array() == bp.pi1.array()).all());
  CHECK((bb.pi2.array() == bp.pi2.array()).all());
  fs::remove_all(dir);
}

TEST_CASE("number formatting and hashing") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.0, 0.0})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(-0.0) == "0");
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("experiment config parsing") {
  const ExperimentConfig c = config_from_json(Json::parse(
      R"({"scale": "small", "means": ["strong"], "betas": [0.6], "episodes": 100, "seed": 9})"));
  CHECK(c.means.size() == 1);
  CHECK(c.betas == std::vector<double>{0.6});
  CHECK(c.tournament_episodes() == 100);
  CHECK(c.seed == 9u);
  CHECK(c.hash() != ExperimentConfig{}.hash());
  CHECK(ExperimentConfig{}.tournament_episodes() == 2000);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"means": ["loud"]})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"episodes": -1})")), ValidationError);
}

TEST_CASE("a trimmed small pipeline writes the expected tree") {
  const fs::path dir = scratch("pipeline");
  ExperimentConfig c;
  c.means = {MeanKind::Strong};
  c.betas = {0.6};
  c.episodes = 100;
  std::ostringstream log;
  reproduce_all(c, dir, log);
  CHECK(fs::exists(dir / "config.json"));
  CHECK(count_lines(dir / "simple" / "strong_identity" / "scatter.csv") == 33);
  CHECK(count_lines(dir / "shoot" / "strong_strong" / "scatter.csv") == 1 + 32 * 6);
  CHECK(count_lines(dir / "shoot" / "strong_strong" / "pss.csv") == 1 + 4 + 1);
  CHECK(count_lines(dir / "tournament.csv") == 2);
  const Json report = read_json_file(dir / "shoot" / "strong_strong" / "mirl_report.json");
  CHECK(report["status"] == "Optimal");
  CHECK(report["wall_time_s"].is_null());
  CHECK(report["config_hash"] == c.hash());
  const Json eq = read_json_file(dir / "shoot" / "equilibrium.json");
  CHECK(eq["max_deviation_gain"].get<double>() <= 1e-6);

  std::ostringstream plan;
  print_plan(plan, c, dir);
  CHECK(plan.str().find("tournament") != std::string::npos);
  fs::remove_all(dir);
}

}
