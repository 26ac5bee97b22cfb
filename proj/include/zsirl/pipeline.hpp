#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "zsirl/io.hpp"
#include "zsirl/prior.hpp"
#include "zsirl/qp.hpp"

namespace zsirl {

enum class Scale { Small, Full };
std::string_view to_string(Scale scale);
Scale parse_scale(std::string_view name);

// Everything reproduce-all needs. Loaded from JSON with every field optional.
struct ExperimentConfig {
  Scale scale = Scale::Small;
  // Applied on top of the scale's soccer parameters for both variants.
  Json soccer_overrides = Json::object();
  std::vector<MeanKind> means{MeanKind::Weak, MeanKind::Median, MeanKind::Strong};
  // Simple game only supports identity; strong needs the shoot action.
  std::vector<CovKind> shoot_covs{CovKind::Identity, CovKind::Strong};
  // Tournaments run for the shoot configurations with these covariances.
  std::vector<CovKind> tournament_covs{CovKind::Strong};
  std::vector<double> betas{0.0, 0.6, 1.0};
  int episodes = 0;  // 0 picks 2000 (small) or 5000 (full)
  std::uint64_t seed = 1;
  int max_steps = 1000;
  double qp_tol = 1e-8;
  bool record_timing = false;

  SoccerSpec soccer(SoccerVariant variant) const;
  int tournament_episodes() const;
  Json to_json() const;
  // Hash of the canonical JSON form.
  std::string hash() const;
  void validate() const;
};

ExperimentConfig config_from_json(const Json& doc, ExperimentConfig base = {});

// Human readable list of stages and files.
void print_plan(std::ostream& out, const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Runs every stage and writes the artifact tree under out_dir. Progress lines
// go to `log`. A failing stage throws Error with the stage name prefixed.
void reproduce_all(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// Run report shared by the recover command and reproduce-all.
Json qp_report(const QpSolution& qp, std::string_view method, RewardLayout layout);

}  // namespace zsirl
