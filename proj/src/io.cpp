#include "zsirl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace zsirl {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + text + "' is not a number");
  }
}

int parse_int(const std::string& text, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError(where + ": '" + text + "' is not an integer");
  }
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  if (v == 0.0) v = 0.0;
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json soccer_to_json(const SoccerSpec& spec) {
  Json j;
  j["variant"] = std::string(to_string(spec.variant));
  j["rows"] = spec.grid.rows;
  j["cols"] = spec.grid.cols;
  j["goal_squares_a"] = spec.grid.goal_squares_a;
  j["goal_squares_b"] = spec.grid.goal_squares_b;
  j["initial_pos_a"] = spec.grid.initial_pos_a;
  j["initial_pos_b"] = spec.grid.initial_pos_b;
  j["beta"] = spec.beta;
  j["gamma"] = spec.gamma;
  if (spec.variant == SoccerVariant::Shoot) {
    j["pss_a"] = spec.pss_a.values;
    j["pss_b"] = spec.pss_b.values;
  }
  return j;
}

namespace {

double max_abs_entry(const SparseMatrix& m) {
  double out = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) out = std::max(out, std::abs(it.value()));
  return out;
}

}  // namespace

SoccerSpec soccer_from_json(const Json& doc, SoccerSpec base) {
  if (!doc.is_object()) throw ValidationError("soccer: expected an object");
  auto field = [&doc](const char* name, auto& target) {
    if (!doc.contains(name)) return;
    try {
      doc.at(name).get_to(target);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string(name) + ": " + e.what());
    }
  };
  if (doc.contains("variant")) base.variant = parse_variant(doc.at("variant").get<std::string>());
  field("rows", base.grid.rows);
  field("cols", base.grid.cols);
  field("goal_squares_a", base.grid.goal_squares_a);
  field("goal_squares_b", base.grid.goal_squares_b);
  field("initial_pos_a", base.grid.initial_pos_a);
  field("initial_pos_b", base.grid.initial_pos_b);
  field("beta", base.beta);
  field("gamma", base.gamma);
  field("pss_a", base.pss_a.values);
  field("pss_b", base.pss_b.values);
  return base;
}

Json game_to_json(const MarkovGame& game, bool include_kernel) {
  Json j;
  j["format"] = "zsirl.game/1";
  j["num_states"] = game.num_states();
  j["actions"] = game.action_names();
  j["gamma"] = game.gamma();
  if (game.soccer()) j["soccer"] = soccer_to_json(*game.soccer());
  if (include_kernel || !game.soccer()) {
    Json triplets = Json::array();
    const int n = game.num_states();
    const int m = game.num_actions();
    for (int a1 = 0; a1 < m; ++a1)
      for (int a2 = 0; a2 < m; ++a2)
        for (int s = 0; s < n; ++s)
          for (SparseMatrix::InnerIterator it(game.kernel(), game.kernel_row(s, a1, a2)); it; ++it)
            triplets.push_back(Json::array({s, a1, a2, it.col(), it.value()}));
    j["kernel"] = std::move(triplets);
  }
  j["rewards"] = {{"layout", std::string(to_string(game.rewards().layout()))},
                  {"values", std::vector<double>(game.rewards().values().begin(), game.rewards().values().end())}};
  return j;
}

namespace {

MarkovGame parse_game(const Json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "zsirl.game/1") {
    throw ValidationError("format: expected \"zsirl.game/1\"");
  }
  std::optional<MarkovGame> game;
  SparseMatrix kernel;
  int n = 0;
  std::vector<std::string> actions;
  if (doc.contains("kernel")) {
    n = doc.at("num_states").get<int>();
    actions = doc.at("actions").get<std::vector<std::string>>();
    const int m = static_cast<int>(actions.size());
    if (n <= 0 || m <= 0) throw ValidationError("num_states/actions: must be positive");
    std::vector<Triplet> entries;
    for (const Json& t : doc.at("kernel")) {
      if (!t.is_array() || t.size() != 5) throw ValidationError("kernel: entries are [s, a1, a2, s', p]");
      const int s = t[0].get<int>();
      const int a1 = t[1].get<int>();
      const int a2 = t[2].get<int>();
      const int sp = t[3].get<int>();
      if (s < 0 || s >= n || sp < 0 || sp >= n || a1 < 0 || a1 >= m || a2 < 0 || a2 >= m) {
        throw ValidationError("kernel: index out of range");
      }
      entries.emplace_back(IndexScheme::joint(s, a1, a2, n, m), sp, t[4].get<double>());
    }
    kernel.resize(static_cast<Eigen::Index>(n) * m * m, n);
    kernel.setFromTriplets(entries.begin(), entries.end());
  }
  if (doc.contains("soccer")) {
    game.emplace(build_soccer(soccer_from_json(doc.at("soccer"), SoccerSpec{})));
    if (doc.contains("kernel")) {
      if (kernel.rows() != game->kernel().rows() || kernel.cols() != game->kernel().cols() ||
          max_abs_entry(SparseMatrix(kernel - game->kernel())) > 1e-12) {
        throw ValidationError("kernel: does not match the soccer parameters");
      }
    }
  } else {
    if (!doc.contains("kernel")) throw ValidationError("kernel: required when no soccer block is given");
    const double gamma = doc.at("gamma").get<double>();
    const int m = static_cast<int>(actions.size());
    game.emplace(n, actions, kernel, RewardVector::zeros(RewardLayout::StateOnly, n, m), gamma);
  }
  if (doc.contains("rewards")) {
    const Json& r = doc.at("rewards");
    const RewardLayout layout = parse_layout(r.at("layout").get<std::string>());
    const auto values = r.at("values").get<std::vector<double>>();
    Vector v = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    return game->with_rewards(RewardVector(layout, game->num_states(), game->num_actions(), std::move(v)));
  }
  return std::move(*game);
}

}  // namespace

MarkovGame game_from_json(const Json& doc) {
  try {
    return parse_game(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("game document: ") + e.what());
  }
}

void write_game_file(const std::filesystem::path& path, const MarkovGame& game, bool include_kernel) {
  write_json_file(path, game_to_json(game, include_kernel));
}

MarkovGame read_game_file(const std::filesystem::path& path) { return game_from_json(read_json_file(path)); }

void write_rewards_csv(std::ostream& out, const RewardVector& rewards, std::string_view method) {
  const int n = rewards.num_states();
  const int m = rewards.num_actions();
  out << "# layout=" << to_string(rewards.layout()) << " method=" << method << "\n";
  out << "state,a1,a2,reward\n";
  const Vector& v = rewards.values();
  switch (rewards.layout()) {
    case RewardLayout::StateOnly:
      for (int s = 0; s < n; ++s) out << s << ",,," << format_double(v(s)) << "\n";
      break;
    case RewardLayout::StateAction:
      for (int a1 = 0; a1 < m; ++a1)
        for (int s = 0; s < n; ++s)
          out << s << ',' << a1 << ",," << format_double(v(IndexScheme::state_action(s, a1, n))) << "\n";
      break;
    case RewardLayout::StateJointAction:
      for (int a1 = 0; a1 < m; ++a1)
        for (int a2 = 0; a2 < m; ++a2)
          for (int s = 0; s < n; ++s)
            out << s << ',' << a1 << ',' << a2 << ',' << format_double(v(IndexScheme::joint(s, a1, a2, n, m)))
                << "\n";
      break;
  }
}

void write_rewards_csv(const std::filesystem::path& path, const RewardVector& rewards, std::string_view method) {
  auto out = open_out(path);
  write_rewards_csv(out, rewards, method);
}

RewardVector read_rewards_csv(const std::filesystem::path& path, int num_states, int num_actions) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  line = strip_cr(line);
  const auto pos = line.find("layout=");
  if (line.rfind("#", 0) != 0 || pos == std::string::npos) {
    throw ValidationError(path.string() + ": first line must be '# layout=<layout> ...'");
  }
  const auto end = line.find(' ', pos);
  const RewardLayout layout = parse_layout(line.substr(pos + 7, end == std::string::npos ? end : end - pos - 7));
  std::getline(in, line);
  if (strip_cr(line) != "state,a1,a2,reward") throw ValidationError(path.string() + ": missing header");

  const Eigen::Index len = IndexScheme::length(layout, num_states, num_actions);
  Vector v = Vector::Constant(len, std::numeric_limits<double>::quiet_NaN());
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
    const int s = parse_int(f[0], where);
    const int a1 = f[1].empty() ? 0 : parse_int(f[1], where);
    const int a2 = f[2].empty() ? 0 : parse_int(f[2], where);
    if (s < 0 || s >= num_states || a1 < 0 || a1 >= num_actions || a2 < 0 || a2 >= num_actions) {
      throw ValidationError(where + ": index out of range");
    }
    Eigen::Index idx = s;
    if (layout == RewardLayout::StateAction) idx = IndexScheme::state_action(s, a1, num_states);
    if (layout == RewardLayout::StateJointAction) idx = IndexScheme::joint(s, a1, a2, num_states, num_actions);
    v(idx) = parse_double(f[3], where);
  }
  if (!v.allFinite()) throw ValidationError(path.string() + ": missing or non-finite reward entries");
  return RewardVector(layout, num_states, num_actions, std::move(v));
}

void write_bipolicy_csv(const std::filesystem::path& path, const Bipolicy& bipolicy) {
  auto out = open_out(path);
  out << "state,player,action,probability\n";
  for (int s = 0; s < bipolicy.num_states(); ++s)
    for (int p = 1; p <= 2; ++p)
      for (int a = 0; a < bipolicy.num_actions(); ++a)
        out << s << ',' << p << ',' << a << ',' << format_double((p == 1 ? bipolicy.pi1 : bipolicy.pi2)(s, a)) << "\n";
}

Bipolicy read_bipolicy_csv(const std::filesystem::path& path, int num_states, int num_actions) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (strip_cr(line) != "state,player,action,probability") throw ValidationError(path.string() + ": missing header");
  Bipolicy bp{Matrix::Zero(num_states, num_actions), Matrix::Zero(num_states, num_actions)};
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
    const int s = parse_int(f[0], where);
    const int p = parse_int(f[1], where);
    const int a = parse_int(f[2], where);
    if (s < 0 || s >= num_states || (p != 1 && p != 2) || a < 0 || a >= num_actions) {
      throw ValidationError(where + ": index out of range");
    }
    (p == 1 ? bp.pi1 : bp.pi2)(s, a) = parse_double(f[3], where);
  }
  bp.validate();
  return bp;
}

void write_values_csv(const std::filesystem::path& path, const Vector& values) {
  auto out = open_out(path);
  out << "state,value\n";
  for (Eigen::Index s = 0; s < values.size(); ++s) out << s << ',' << format_double(values(s)) << "\n";
}

void write_tournament_csv(const std::filesystem::path& path, const std::vector<TournamentRecord>& records) {
  auto out = open_out(path);
  out << "mean_kind,cov_kind,beta,episodes,a_wins,b_wins,draws,b_win_pct\n";
  for (const auto& r : records) {
    const TournamentStats& st = r.row.stats;
    const double pct = st.b_win_pct();
    out << r.mean_kind << ',' << r.cov_kind << ',' << format_double(r.row.beta) << ',' << st.episodes << ','
        << st.a_wins << ',' << st.b_wins << ',' << st.draws << ',' << (std::isnan(pct) ? "" : format_double(pct))
        << "\n";
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << "\n";
}

Json read_json_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace zsirl
