#include "zsirl/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include "zsirl/equilibrium.hpp"
#include "zsirl/irl.hpp"
#include "zsirl/mirl.hpp"
#include "zsirl/montecarlo.hpp"

namespace zsirl {

std::string_view to_string(Scale scale) { return scale == Scale::Small ? "small" : "full"; }

Scale parse_scale(std::string_view name) {
  if (name == "small") return Scale::Small;
  if (name == "full") return Scale::Full;
  throw ValidationError("scale: expected 'small' or 'full', got '" + std::string(name) + "'");
}

SoccerSpec ExperimentConfig::soccer(SoccerVariant variant) const {
  SoccerSpec base = scale == Scale::Small ? SoccerSpec::small(variant) : SoccerSpec::paper(variant);
  Json overrides = soccer_overrides;
  overrides.erase("variant");
  SoccerSpec spec = soccer_from_json(overrides, base);
  spec.variant = variant;
  return spec;
}

int ExperimentConfig::tournament_episodes() const {
  if (episodes > 0) return episodes;
  return scale == Scale::Small ? 2000 : 5000;
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["scale"] = std::string(to_string(scale));
  j["soccer"] = soccer_overrides;
  Json means_j = Json::array();
  for (MeanKind k : means) means_j.push_back(std::string(to_string(k)));
  j["means"] = means_j;
  Json covs_j = Json::array();
  for (CovKind k : shoot_covs) covs_j.push_back(std::string(to_string(k)));
  j["shoot_covs"] = covs_j;
  Json tcovs_j = Json::array();
  for (CovKind k : tournament_covs) tcovs_j.push_back(std::string(to_string(k)));
  j["tournament_covs"] = tcovs_j;
  j["betas"] = betas;
  j["episodes"] = tournament_episodes();
  j["seed"] = seed;
  j["max_steps"] = max_steps;
  j["qp_tol"] = qp_tol;
  return j;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

void ExperimentConfig::validate() const {
  if (means.empty()) throw ValidationError("means: at least one mean kind is needed");
  if (episodes < 0) throw ValidationError("episodes: must be positive");
  if (max_steps < 0) throw ValidationError("max_steps: must be non-negative");
  if (!(qp_tol > 0.0)) throw ValidationError("qp_tol: must be positive");
  for (double b : betas)
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("betas: every beta must lie in [0, 1]");
  soccer(SoccerVariant::Simple).grid.validate();
  soccer(SoccerVariant::Shoot).grid.validate();
}

ExperimentConfig config_from_json(const Json& doc, ExperimentConfig c) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  auto get = [&doc](const char* name, auto& target) {
    if (!doc.contains(name)) return;
    try {
      doc.at(name).get_to(target);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string(name) + ": " + e.what());
    }
  };
  auto names = [&doc](const char* name) {
    std::vector<std::string> out;
    try {
      doc.at(name).get_to(out);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string(name) + ": " + e.what());
    }
    return out;
  };
  if (doc.contains("scale")) c.scale = parse_scale(doc.at("scale").get<std::string>());
  if (doc.contains("soccer")) {
    if (!doc.at("soccer").is_object()) throw ValidationError("soccer: expected an object");
    c.soccer_overrides = doc.at("soccer");
  }
  if (doc.contains("means")) {
    c.means.clear();
    for (const auto& n : names("means")) c.means.push_back(parse_mean_kind(n));
  }
  if (doc.contains("shoot_covs")) {
    c.shoot_covs.clear();
    for (const auto& n : names("shoot_covs")) c.shoot_covs.push_back(parse_cov_kind(n));
  }
  if (doc.contains("tournament_covs")) {
    c.tournament_covs.clear();
    for (const auto& n : names("tournament_covs")) c.tournament_covs.push_back(parse_cov_kind(n));
  }
  get("betas", c.betas);
  get("episodes", c.episodes);
  get("seed", c.seed);
  get("max_steps", c.max_steps);
  get("qp_tol", c.qp_tol);
  get("record_timing", c.record_timing);
  c.validate();
  return c;
}

Json qp_report(const QpSolution& qp, std::string_view method, RewardLayout layout) {
  Json j;
  j["method"] = std::string(method);
  j["layout"] = std::string(to_string(layout));
  j["status"] = std::string(to_string(qp.status));
  j["kkt_residual"] = qp.kkt_residual;
  j["max_violation"] = qp.max_violation;
  j["objective"] = qp.objective;
  j["iterations"] = qp.iterations;
  j["route"] = std::string(to_string(qp.route));
  j["dropped_rows"] = qp.dropped_rows;
  j["merged_rows"] = qp.merged_rows;
  j["active_rows"] = qp.active_rows;
  j["polished"] = qp.polished;
  return j;
}

namespace {

std::string tag(MeanKind mean, CovKind cov) {
  return std::string(to_string(mean)) + "_" + std::string(to_string(cov));
}

std::vector<CovKind> covs_for(const ExperimentConfig& config, SoccerVariant variant) {
  if (variant == SoccerVariant::Simple) return {CovKind::Identity};
  return config.shoot_covs;
}

bool in_tournament(const ExperimentConfig& config, CovKind cov) {
  for (CovKind k : config.tournament_covs)
    if (k == cov) return true;
  return false;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void run_stage(const std::string& name, std::ostream& log, const std::function<void()>& body) {
  log << "[" << name << "]" << std::endl;
  try {
    body();
  } catch (const std::exception& e) {
    throw Error("stage " + name + ": " + e.what());
  }
}

std::string csv_value(double v) { return std::isnan(v) ? std::string() : format_double(v); }

struct EquilibriumArtifacts {
  MarkovGame game;
  MinimaxResult eq;
};

EquilibriumArtifacts equilibrium_stage(const SoccerSpec& spec, const std::filesystem::path& dir,
                                       const ExperimentConfig& config) {
  Stopwatch clock;
  MarkovGame game = build_soccer(spec);
  MinimaxResult eq = minimax_bipolicy(game, game.rewards(), spec.gamma);
  const DeviationAudit audit = audit_deviations(game, game.rewards(), eq.bipolicy, spec.gamma);
  write_game_file(dir / "game.json", game);
  write_bipolicy_csv(dir / "bipolicy.csv", eq.bipolicy);
  write_values_csv(dir / "values.csv", eq.values);
  Json j;
  j["iterations"] = eq.iterations;
  j["residual"] = eq.residual;
  j["max_deviation_gain"] = audit.max_gain;
  j["deviator"] = audit.player == Player::One ? 1 : 2;
  j["action"] = game.action_names()[static_cast<std::size_t>(audit.action)];
  j["state"] = audit.state;
  j["wall_time_s"] = config.record_timing ? Json(clock.seconds()) : Json(nullptr);
  j["config_hash"] = config.hash();
  write_json_file(dir / "equilibrium.json", j);
  return {std::move(game), std::move(eq)};
}

void write_report(const std::filesystem::path& path, const RecoveryResult& rec, std::string_view method,
                  const RewardVector& truth, double seconds, const ExperimentConfig& config, MeanKind mean,
                  CovKind cov) {
  Json j = qp_report(rec.qp, method, rec.rewards.layout());
  j["mean"] = std::string(to_string(mean));
  j["cov"] = std::string(to_string(cov));
  j["num_constraints"] = rec.num_constraints;
  j["min_residual"] = rec.min_residual;
  j["distance_to_truth"] = (rec.rewards.values() - truth.values()).norm();
  j["wall_time_s"] = config.record_timing ? Json(seconds) : Json(nullptr);
  j["config_hash"] = config.hash();
  write_json_file(path, j);
}

}  // namespace

void print_plan(std::ostream& out, const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  out << "reproduce-all plan (scale " << to_string(config.scale) << ", config " << config.hash() << ")\n";
  out << "output: " << out_dir.string() << "\n";
  for (SoccerVariant variant : {SoccerVariant::Simple, SoccerVariant::Shoot}) {
    const std::string v(to_string(variant));
    const SoccerSpec spec = config.soccer(variant);
    out << "  " << v << ": " << spec.grid.rows << "x" << spec.grid.cols << " grid, " << spec.grid.num_states()
        << " states, beta " << format_double(spec.beta) << ", gamma " << format_double(spec.gamma) << "\n";
    out << "    equilibrium -> " << v << "/game.json bipolicy.csv values.csv equilibrium.json\n";
    for (MeanKind mean : config.means) {
      for (CovKind cov : covs_for(config, variant)) {
        out << "    recover mirl+irl (" << tag(mean, cov) << ") -> " << v << "/" << tag(mean, cov)
            << "/{mirl,irl}_rewards.csv {mirl,irl}_report.json scatter.csv"
            << (variant == SoccerVariant::Shoot ? " pss.csv" : "") << "\n";
      }
    }
  }
  out << "  tournament: " << config.tournament_episodes() << " episodes per beta, betas";
  for (double b : config.betas) out << " " << format_double(b);
  out << ", seed " << config.seed << " -> tournament.csv\n";
}

void reproduce_all(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  Json cfg = config.to_json();
  write_json_file(out_dir / "config.json", cfg);

  RecoveryOptions rec_opts;
  rec_opts.qp.tol = config.qp_tol;
  std::vector<TournamentRecord> records;

  for (SoccerVariant variant : {SoccerVariant::Simple, SoccerVariant::Shoot}) {
    const std::string v(to_string(variant));
    const SoccerSpec spec = config.soccer(variant);
    const std::filesystem::path vdir = out_dir / v;
    std::optional<EquilibriumArtifacts> art;
    run_stage(v + "/equilibrium", log, [&] { art.emplace(equilibrium_stage(spec, vdir, config)); });
    const MarkovGame& game = art->game;
    const Bipolicy& observed = art->eq.bipolicy;
    const int n = game.num_states();
    const int m = game.num_actions();

    for (MeanKind mean : config.means) {
      for (CovKind cov : covs_for(config, variant)) {
        const std::string name = v + "/" + tag(mean, cov);
        const std::filesystem::path dir = vdir / tag(mean, cov);
        run_stage(name, log, [&] {
          PriorSpec ps;
          ps.mean_kind = mean;
          ps.cov_kind = cov;
          if (variant == SoccerVariant::Simple) {
            const Prior prior = build_prior(ps, game, RewardLayout::StateOnly);
            Stopwatch t_mirl;
            const RecoveryResult mirl = recover_state_rewards(game, observed, prior, spec.gamma, rec_opts);
            const double s_mirl = t_mirl.seconds();
            Stopwatch t_irl;
            const RecoveryResult irl =
                recover_irl_rewards(game, observed, prior, spec.gamma, RewardLayout::StateOnly, rec_opts);
            const double s_irl = t_irl.seconds();
            const RewardVector& truth = game.rewards();
            write_rewards_csv(dir / "mirl_rewards.csv", mirl.rewards, "mirl");
            write_rewards_csv(dir / "irl_rewards.csv", irl.rewards, "irl");
            write_report(dir / "mirl_report.json", mirl, "mirl", truth, s_mirl, config, mean, cov);
            write_report(dir / "irl_report.json", irl, "irl", truth, s_irl, config, mean, cov);
            std::ofstream out(dir / "scatter.csv", std::ios::binary);
            out << "state,true,mirl,irl\n";
            for (int s = 0; s < n; ++s) {
              out << s << ',' << format_double(truth.values()(s)) << ',' << format_double(mirl.rewards.values()(s))
                  << ',' << format_double(irl.rewards.values()(s)) << "\n";
            }
            return;
          }

          const Prior joint_prior = build_prior(ps, game, RewardLayout::StateJointAction);
          const Prior sa_prior = build_prior(ps, game, RewardLayout::StateAction);
          Stopwatch t_mirl;
          const RecoveryResult mirl = recover_joint_rewards(game, observed, joint_prior, spec.gamma, rec_opts);
          const double s_mirl = t_mirl.seconds();
          Stopwatch t_irl;
          const RecoveryResult irl =
              recover_irl_rewards(game, observed, sa_prior, spec.gamma, RewardLayout::StateAction, rec_opts);
          const double s_irl = t_irl.seconds();
          const RewardVector truth_sa = marginalize_rewards(game.rewards(), observed.pi2);
          const RewardVector mirl_sa = marginalize_rewards(mirl.rewards, observed.pi2);
          write_rewards_csv(dir / "mirl_rewards.csv", mirl.rewards, "mirl");
          write_rewards_csv(dir / "irl_rewards.csv", irl.rewards, "irl");
          write_report(dir / "mirl_report.json", mirl, "mirl", game.rewards(), s_mirl, config, mean, cov);
          write_report(dir / "irl_report.json", irl, "irl", truth_sa, s_irl, config, mean, cov);
          {
            // Both methods compared on player 1's marginal rewards r(s, a1).
            std::ofstream out(dir / "scatter.csv", std::ios::binary);
            out << "state,a1,true,mirl,irl\n";
            for (int a1 = 0; a1 < m; ++a1) {
              for (int s = 0; s < n; ++s) {
                const Eigen::Index k = IndexScheme::state_action(s, a1, n);
                out << s << ',' << a1 << ',' << format_double(truth_sa.values()(k)) << ','
                    << format_double(mirl_sa.values()(k)) << ',' << format_double(irl.rewards.values()(k)) << "\n";
              }
            }
          }
          const PssEstimate pss_mirl = extract_pss(mirl_sa, game);
          const PssEstimate pss_irl = extract_pss(irl.rewards, game);
          {
            std::ofstream out(dir / "pss.csv", std::ios::binary);
            out << "square,true,mirl,irl\n";
            for (std::size_t q = 0; q < pss_mirl.truth.size(); ++q) {
              out << q + 1 << ',' << csv_value(pss_mirl.truth[q]) << ',' << csv_value(pss_mirl.estimate[q]) << ','
                  << csv_value(pss_irl.estimate[q]) << "\n";
            }
            out << "mae,," << format_double(pss_mirl.mean_abs_error) << ',' << format_double(pss_irl.mean_abs_error)
                << "\n";
          }
          if (!in_tournament(config, cov)) return;
          TournamentConfig tc;
          tc.episodes = config.tournament_episodes();
          tc.betas = config.betas;
          tc.seed = config.seed;
          tc.max_steps = config.max_steps;
          for (const TournamentRow& row : run_tournament(spec, irl.rewards, mirl.rewards, tc)) {
            records.push_back({std::string(to_string(mean)), std::string(to_string(cov)), row});
            log << "  beta " << format_double(row.beta) << ": B wins " << row.stats.b_wins << ", A wins "
                << row.stats.a_wins << ", draws " << row.stats.draws << std::endl;
          }
        });
      }
    }
  }
  run_stage("tournament", log, [&] { write_tournament_csv(out_dir / "tournament.csv", records); });
}

}  // namespace zsirl
