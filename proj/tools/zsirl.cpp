#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zsirl/equilibrium.hpp"
#include "zsirl/io.hpp"
#include "zsirl/irl.hpp"
#include "zsirl/mirl.hpp"
#include "zsirl/montecarlo.hpp"
#include "zsirl/pipeline.hpp"
#include "zsirl/prior.hpp"

namespace fs = std::filesystem;
using namespace zsirl;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

fs::path default_out_dir(const std::string& fallback) {
  if (const char* env = std::getenv("ZSIRL_OUT_DIR"); env && *env) return env;
  return fallback;
}

struct BuildGameArgs {
  std::string variant = "simple";
  std::string scale = "full";
  std::string config;
  std::optional<int> rows, cols, init_a, init_b;
  std::optional<std::vector<int>> goals_a, goals_b;
  std::optional<std::vector<double>> pss_a, pss_b;
  std::optional<double> beta, gamma;
  bool embed_kernel = false;
  std::string out;
};

int run_build_game(const BuildGameArgs& args) {
  const SoccerVariant variant = parse_variant(args.variant);
  const Scale scale = parse_scale(args.scale);
  SoccerSpec spec = scale == Scale::Small ? SoccerSpec::small(variant) : SoccerSpec::paper(variant);
  if (!args.config.empty()) {
    const Json doc = read_json_file(args.config);
    spec = soccer_from_json(doc.contains("soccer") ? doc.at("soccer") : doc, spec);
    spec.variant = variant;
  }
  if (args.rows) spec.grid.rows = *args.rows;
  if (args.cols) spec.grid.cols = *args.cols;
  if (args.goals_a) spec.grid.goal_squares_a = *args.goals_a;
  if (args.goals_b) spec.grid.goal_squares_b = *args.goals_b;
  if (args.init_a) spec.grid.initial_pos_a = *args.init_a;
  if (args.init_b) spec.grid.initial_pos_b = *args.init_b;
  if (args.pss_a) spec.pss_a.values = *args.pss_a;
  if (args.pss_b) spec.pss_b.values = *args.pss_b;
  if (args.beta) spec.beta = *args.beta;
  if (args.gamma) spec.gamma = *args.gamma;
  const MarkovGame game = build_soccer(spec);
  write_game_file(args.out, game, args.embed_kernel);
  std::cout << "wrote " << args.out << ": " << game.num_states() << " states, " << game.num_actions()
            << " actions\n";
  return 0;
}

struct SolveEqArgs {
  std::string game;
  std::string out_dir;
  double tol = 1e-8;
  double audit_tol = 1e-6;
};

int run_solve_eq(const SolveEqArgs& args) {
  const MarkovGame game = read_game_file(args.game);
  MinimaxOptions opts;
  opts.tol = args.tol;
  const MinimaxResult eq = minimax_bipolicy(game, game.rewards(), game.gamma(), opts);
  const DeviationAudit audit = audit_deviations(game, game.rewards(), eq.bipolicy, game.gamma());
  const fs::path dir = args.out_dir.empty() ? default_out_dir(".") : fs::path(args.out_dir);
  write_bipolicy_csv(dir / "bipolicy.csv", eq.bipolicy);
  write_values_csv(dir / "values.csv", eq.values);
  Json j;
  j["iterations"] = eq.iterations;
  j["residual"] = eq.residual;
  j["max_deviation_gain"] = audit.max_gain;
  j["deviator"] = audit.player == Player::One ? 1 : 2;
  j["action"] = game.action_names()[static_cast<std::size_t>(audit.action)];
  j["state"] = audit.state;
  j["within_tol"] = audit.max_gain <= args.audit_tol;
  write_json_file(dir / "audit.json", j);
  std::cout << "value iteration: " << eq.iterations << " sweeps, residual " << eq.residual << "\n"
            << "largest deviation gain " << audit.max_gain << (audit.max_gain <= args.audit_tol ? " (ok)" : " (FAIL)")
            << "\n";
  return audit.max_gain <= args.audit_tol ? 0 : kExitError;
}

struct RecoverArgs {
  std::string game;
  std::string bipolicy;
  std::string method = "mirl";
  std::string mean = "weak";
  std::string cov = "identity";
  std::string layout = "auto";
  double margin = 0.0;
  double tol = 1e-8;
  std::string out_dir;
};

RewardLayout pick_layout(const RecoverArgs& args, const MarkovGame& game) {
  if (args.layout == "auto") {
    const RewardLayout truth = game.rewards().layout();
    if (args.method == "mirl") return truth;
    return truth == RewardLayout::StateOnly ? RewardLayout::StateOnly : RewardLayout::StateAction;
  }
  if (args.layout == "state") return RewardLayout::StateOnly;
  if (args.layout == "state-action") return RewardLayout::StateAction;
  if (args.layout == "joint") return RewardLayout::StateJointAction;
  throw ValidationError("layout: expected auto, state, state-action or joint");
}

int run_recover(const RecoverArgs& args) {
  const MarkovGame game = read_game_file(args.game);
  const Bipolicy observed = read_bipolicy_csv(args.bipolicy, game.num_states(), game.num_actions());
  const RewardLayout layout = pick_layout(args, game);
  if (args.method == "mirl" && layout == RewardLayout::StateAction) {
    throw ValidationError("layout: mirl recovers state or joint rewards");
  }
  if (args.method == "irl" && layout == RewardLayout::StateJointAction) {
    throw ValidationError("layout: irl recovers state or state-action rewards");
  }
  if (!game.soccer()) throw ValidationError("recover: priors are defined for soccer games only");
  PriorSpec ps;
  ps.mean_kind = parse_mean_kind(args.mean);
  ps.cov_kind = parse_cov_kind(args.cov);
  const Prior prior = build_prior(ps, game, layout);
  RecoveryOptions opts;
  opts.qp.tol = args.tol;
  opts.support_margin = args.margin;

  const fs::path dir = args.out_dir.empty() ? default_out_dir(".") : fs::path(args.out_dir);
  const std::string stem = args.method;
  Json report;
  int code = 0;
  try {
    RecoveryResult rec;
    if (args.method == "mirl") {
      rec = layout == RewardLayout::StateOnly ? recover_state_rewards(game, observed, prior, game.gamma(), opts)
                                              : recover_joint_rewards(game, observed, prior, game.gamma(), opts);
    } else if (args.method == "irl") {
      rec = recover_irl_rewards(game, observed, prior, game.gamma(), layout, opts);
    } else {
      throw ValidationError("method: expected 'mirl' or 'irl'");
    }
    write_rewards_csv(dir / (stem + "_rewards.csv"), rec.rewards, stem);
    report = qp_report(rec.qp, stem, layout);
    report["num_constraints"] = rec.num_constraints;
    report["min_residual"] = rec.min_residual;
    std::cout << stem << ": " << to_string(rec.qp.status) << ", kkt " << rec.qp.kkt_residual << ", "
              << rec.rewards.size() << " rewards\n";
    if (rec.qp.status != QpStatus::Optimal) code = kExitError;
  } catch (const InfeasibleError& e) {
    report["method"] = stem;
    report["layout"] = std::string(to_string(layout));
    report["status"] = "infeasible";
    report["message"] = e.what();
    std::cerr << "infeasible: " << e.what() << "\n";
    code = kExitInfeasible;
  }
  report["mean"] = args.mean;
  report["cov"] = args.cov;
  report["margin"] = args.margin;
  report["wall_time_s"] = nullptr;
  report["config_hash"] = fnv1a_hex(args.game + "|" + args.bipolicy + "|" + args.method + "|" + args.mean + "|" +
                                    args.cov + "|" + std::string(to_string(layout)) + "|" +
                                    format_double(args.margin) + "|" + format_double(args.tol));
  write_json_file(dir / (stem + "_report.json"), report);
  return code;
}

struct TournamentArgs {
  std::string game;
  std::string rewards_a;
  std::string rewards_b;
  std::vector<double> betas{0.0, 0.6, 1.0};
  int episodes = 5000;
  std::uint64_t seed = 1;
  int max_steps = 1000;
  std::string mean_label = "custom";
  std::string cov_label = "custom";
  std::string out;
};

int run_tournament_cmd(const TournamentArgs& args) {
  if (args.episodes < 1) throw ValidationError("episodes: must be at least 1");
  const MarkovGame game = read_game_file(args.game);
  if (!game.soccer()) throw ValidationError("tournament: needs a soccer game");
  const RewardVector ra = read_rewards_csv(args.rewards_a, game.num_states(), game.num_actions());
  const RewardVector rb = read_rewards_csv(args.rewards_b, game.num_states(), game.num_actions());
  TournamentConfig tc;
  tc.episodes = args.episodes;
  tc.betas = args.betas;
  tc.seed = args.seed;
  tc.max_steps = args.max_steps;
  std::vector<TournamentRecord> records;
  for (const TournamentRow& row : run_tournament(*game.soccer(), ra, rb, tc)) {
    records.push_back({args.mean_label, args.cov_label, row});
    std::cout << "beta " << format_double(row.beta) << ": A " << row.stats.a_wins << ", B " << row.stats.b_wins
              << ", draws " << row.stats.draws << ", B win % " << format_double(row.stats.b_win_pct()) << "\n";
  }
  const fs::path out = args.out.empty() ? default_out_dir(".") / "tournament.csv" : fs::path(args.out);
  write_tournament_csv(out, records);
  return 0;
}

struct ReproduceArgs {
  std::string scale;
  std::string config;
  std::string out_dir;
  bool dry_run = false;
  bool record_timing = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
};

int run_reproduce_all(const ReproduceArgs& args) {
  ExperimentConfig config;
  if (!args.config.empty()) config = config_from_json(read_json_file(args.config));
  if (!args.scale.empty()) config.scale = parse_scale(args.scale);
  if (args.seed) config.seed = *args.seed;
  if (args.episodes) config.episodes = *args.episodes;
  if (args.record_timing) config.record_timing = true;
  config.validate();
  const fs::path out = args.out_dir.empty() ? default_out_dir("out") : fs::path(args.out_dir);
  if (args.dry_run) {
    print_plan(std::cout, config, out);
    return 0;
  }
  reproduce_all(config, out, std::cout);
  std::cout << "artifacts in " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward recovery for two-player zero-sum soccer games"};
  app.require_subcommand(1);

  BuildGameArgs bg;
  auto* cmd_bg = app.add_subcommand("build-game", "Write a soccer game file");
  cmd_bg->add_option("--variant", bg.variant, "simple or shoot")->capture_default_str();
  cmd_bg->add_option("--scale", bg.scale, "full (4x5) or small (2x2)")->capture_default_str();
  cmd_bg->add_option("--config", bg.config, "JSON file with soccer parameters");
  cmd_bg->add_option("--rows", bg.rows);
  cmd_bg->add_option("--cols", bg.cols);
  cmd_bg->add_option("--goals-a", bg.goals_a)->delimiter(',');
  cmd_bg->add_option("--goals-b", bg.goals_b)->delimiter(',');
  cmd_bg->add_option("--init-a", bg.init_a);
  cmd_bg->add_option("--init-b", bg.init_b);
  cmd_bg->add_option("--pss-a", bg.pss_a, "per-square shot success of A")->delimiter(',');
  cmd_bg->add_option("--pss-b", bg.pss_b, "per-square shot success of B")->delimiter(',');
  cmd_bg->add_option("--beta", bg.beta);
  cmd_bg->add_option("--gamma", bg.gamma);
  cmd_bg->add_flag("--embed-kernel", bg.embed_kernel, "store the transition triplets too");
  cmd_bg->add_option("-o,--out", bg.out, "output game file")->required();

  SolveEqArgs se;
  auto* cmd_se = app.add_subcommand("solve-eq", "Minimax bipolicy, values and deviation audit");
  cmd_se->add_option("--game", se.game)->required()->check(CLI::ExistingFile);
  cmd_se->add_option("--out-dir", se.out_dir, "defaults to $ZSIRL_OUT_DIR or .");
  cmd_se->add_option("--tol", se.tol)->capture_default_str();
  cmd_se->add_option("--audit-tol", se.audit_tol)->capture_default_str();

  RecoverArgs rc;
  auto* cmd_rc = app.add_subcommand("recover", "Recover rewards from an observed bipolicy");
  cmd_rc->add_option("--game", rc.game)->required()->check(CLI::ExistingFile);
  cmd_rc->add_option("--bipolicy", rc.bipolicy)->required()->check(CLI::ExistingFile);
  cmd_rc->add_option("--method", rc.method)->check(CLI::IsMember({"mirl", "irl"}))->capture_default_str();
  cmd_rc->add_option("--mean", rc.mean)->check(CLI::IsMember({"weak", "median", "strong"}))->capture_default_str();
  cmd_rc->add_option("--cov", rc.cov)->check(CLI::IsMember({"identity", "strong"}))->capture_default_str();
  cmd_rc->add_option("--layout", rc.layout, "auto, state, state-action or joint")->capture_default_str();
  cmd_rc->add_option("--margin", rc.margin, "required slack on deviations outside the observed support")
      ->capture_default_str();
  cmd_rc->add_option("--tol", rc.tol)->capture_default_str();
  cmd_rc->add_option("--out-dir", rc.out_dir, "defaults to $ZSIRL_OUT_DIR or .");

  TournamentArgs tm;
  auto* cmd_tm = app.add_subcommand("tournament", "Play A (rewards-a) against B (rewards-b)");
  cmd_tm->add_option("--game", tm.game)->required()->check(CLI::ExistingFile);
  cmd_tm->add_option("--rewards-a", tm.rewards_a)->required()->check(CLI::ExistingFile);
  cmd_tm->add_option("--rewards-b", tm.rewards_b)->required()->check(CLI::ExistingFile);
  cmd_tm->add_option("--betas", tm.betas)->delimiter(',')->capture_default_str();
  cmd_tm->add_option("--episodes", tm.episodes)->capture_default_str();
  cmd_tm->add_option("--seed", tm.seed)->capture_default_str();
  cmd_tm->add_option("--max-steps", tm.max_steps)->capture_default_str();
  cmd_tm->add_option("--mean-label", tm.mean_label)->capture_default_str();
  cmd_tm->add_option("--cov-label", tm.cov_label)->capture_default_str();
  cmd_tm->add_option("-o,--out", tm.out, "CSV path, defaults to $ZSIRL_OUT_DIR/tournament.csv");

  ReproduceArgs ra;
  auto* cmd_ra = app.add_subcommand("reproduce-all", "Run every experiment and write the artifact tree");
  cmd_ra->add_option("--scale", ra.scale, "small or full (overrides the config)");
  cmd_ra->add_option("--config", ra.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd_ra->add_option("--out-dir", ra.out_dir, "defaults to $ZSIRL_OUT_DIR or ./out");
  cmd_ra->add_option("--seed", ra.seed);
  cmd_ra->add_option("--episodes", ra.episodes);
  cmd_ra->add_flag("--dry-run", ra.dry_run, "print the plan only");
  cmd_ra->add_flag("--record-timing", ra.record_timing, "store wall times in run reports");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_bg->parsed()) return run_build_game(bg);
    if (cmd_se->parsed()) return run_solve_eq(se);
    if (cmd_rc->parsed()) return run_recover(rc);
    if (cmd_tm->parsed()) return run_tournament_cmd(tm);
    if (cmd_ra->parsed()) return run_reproduce_all(ra);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
