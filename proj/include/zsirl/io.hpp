#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "zsirl/game.hpp"
#include "zsirl/montecarlo.hpp"
#include "zsirl/reward.hpp"

namespace zsirl {

using Json = nlohmann::ordered_json;

// Game documents ("format": "zsirl.game/1"). Soccer games are stored by
// their parameters and rebuilt on load; an embedded kernel is then checked
// against the rebuilt one. Other games need the kernel triplets
// [s, a1, a2, s', p].
Json game_to_json(const MarkovGame& game, bool include_kernel = false);
MarkovGame game_from_json(const Json& doc);
void write_game_file(const std::filesystem::path& path, const MarkovGame& game, bool include_kernel = false);
MarkovGame read_game_file(const std::filesystem::path& path);

Json soccer_to_json(const SoccerSpec& spec);
// Fields missing from `doc` keep the values of `base`.
SoccerSpec soccer_from_json(const Json& doc, SoccerSpec base);

// "# layout=<layout> method=<method>" then state,a1,a2,reward. Columns that
// the layout does not use are left empty.
void write_rewards_csv(std::ostream& out, const RewardVector& rewards, std::string_view method);
void write_rewards_csv(const std::filesystem::path& path, const RewardVector& rewards, std::string_view method);
RewardVector read_rewards_csv(const std::filesystem::path& path, int num_states, int num_actions);

// state,player,action,probability for every entry.
void write_bipolicy_csv(const std::filesystem::path& path, const Bipolicy& bipolicy);
Bipolicy read_bipolicy_csv(const std::filesystem::path& path, int num_states, int num_actions);

void write_values_csv(const std::filesystem::path& path, const Vector& values);

struct TournamentRecord {
  std::string mean_kind;
  std::string cov_kind;
  TournamentRow row;
};
void write_tournament_csv(const std::filesystem::path& path, const std::vector<TournamentRecord>& records);

void write_json_file(const std::filesystem::path& path, const Json& doc);
Json read_json_file(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace zsirl
