#pragma once

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cdn/error.hpp"

namespace cdn::ranking {

enum class GameType { LargeTeam, SmallTeam, HeadToHead, FreeForAll };

inline std::string to_string(GameType t) {
  switch (t) {
    case GameType::LargeTeam: return "LargeTeam";
    case GameType::SmallTeam: return "SmallTeam";
    case GameType::HeadToHead: return "HeadToHead";
    case GameType::FreeForAll: return "FreeForAll";
  }
  return "HeadToHead";
}

inline GameType parse_game_type(const std::string& s) {
  if (s == "LargeTeam") return GameType::LargeTeam;
  if (s == "SmallTeam") return GameType::SmallTeam;
  if (s == "HeadToHead") return GameType::HeadToHead;
  if (s == "FreeForAll") return GameType::FreeForAll;
  throw Error(ErrorCode::InvalidMatch, "unknown game type '" + s + "'");
}

/// Whether rank 1 is the best outcome (places) or the worst.
enum class Polarity { LowerIsBetter, HigherIsBetter };

struct MatchRecord {
  std::string game_id;
  GameType game_type = GameType::HeadToHead;
  std::vector<std::vector<std::string>> teams;
  std::vector<int> ranks;  // one per team, in the log's polarity
  std::vector<std::vector<double>> scores;  // per player, same shape as teams; empty if absent
  long long timestamp = 0;
  Polarity polarity = Polarity::LowerIsBetter;

  bool has_scores() const { return !scores.empty(); }

  /// Larger is better, whatever the log polarity.
  int goodness(std::size_t team) const {
    return polarity == Polarity::LowerIsBetter ? -ranks[team] : ranks[team];
  }

  /// Place of each team with 1 = best; tied teams share the better place.
  std::vector<int> places() const {
    std::vector<int> out(teams.size(), 1);
    for (std::size_t i = 0; i < teams.size(); ++i) {
      for (std::size_t j = 0; j < teams.size(); ++j) {
        if (goodness(j) > goodness(i)) ++out[i];
      }
    }
    return out;
  }

  double team_score(std::size_t team) const {
    double s = 0.0;
    for (double v : scores.at(team)) s += v;
    return s;
  }
};

/// Throws InvalidMatch on structural problems.
inline void validate(const MatchRecord& m) {
  if (m.teams.size() < 2) throw Error(ErrorCode::InvalidMatch, "game '" + m.game_id + "' needs at least 2 teams");
  if (m.ranks.size() != m.teams.size()) throw Error(ErrorCode::InvalidMatch, "one rank per team required");
  std::set<std::string> seen;
  for (const auto& t : m.teams) {
    if (t.empty()) throw Error(ErrorCode::InvalidMatch, "empty team in game '" + m.game_id + "'");
    for (const auto& p : t) {
      if (p.empty()) throw Error(ErrorCode::InvalidMatch, "empty player id");
      if (!seen.insert(p).second) throw Error(ErrorCode::InvalidMatch, "player '" + p + "' appears twice");
    }
  }
  for (int r : m.ranks) {
    if (r < 1) throw Error(ErrorCode::InvalidMatch, "ranks start at 1");
  }
  if (m.has_scores()) {
    if (m.scores.size() != m.teams.size()) throw Error(ErrorCode::InvalidMatch, "scores must match team shape");
    for (std::size_t i = 0; i < m.teams.size(); ++i) {
      if (m.scores[i].size() != m.teams[i].size()) throw Error(ErrorCode::InvalidMatch, "scores must match team shape");
      for (double s : m.scores[i]) {
        if (!std::isfinite(s)) throw Error(ErrorCode::InvalidMatch, "scores must be finite");
      }
    }
  }
}

/// Parse failure carrying the 0-based record index.
class LogError : public Error {
 public:
  LogError(std::size_t record, const std::string& what)
      : Error(ErrorCode::InvalidMatch, "record " + std::to_string(record) + ": " + what), record_(record) {}
  std::size_t record() const { return record_; }

 private:
  std::size_t record_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

inline MatchRecord from_json(const nlohmann::json& j, Polarity polarity) {
  MatchRecord m;
  m.polarity = polarity;
  m.game_id = j.at("gameId").get<std::string>();
  m.game_type = parse_game_type(j.at("gameType").get<std::string>());
  m.teams = j.at("teams").get<std::vector<std::vector<std::string>>>();
  // Upcoming games may omit ranks; every team then shares place 1.
  if (j.contains("ranks")) m.ranks = j["ranks"].get<std::vector<int>>();
  else m.ranks.assign(m.teams.size(), 1);
  if (j.contains("scores") && !j["scores"].is_null()) m.scores = j["scores"].get<std::vector<std::vector<double>>>();
  if (j.contains("t")) m.timestamp = j["t"].get<long long>();
  return m;
}

inline MatchRecord from_csv(const std::string& line, Polarity polarity) {
  const auto cols = split(line, ',');
  if (cols.size() < 5 || cols.size() > 6) throw std::invalid_argument("expected 5 or 6 comma-separated fields");
  MatchRecord m;
  m.polarity = polarity;
  m.game_id = cols[0];
  m.game_type = parse_game_type(cols[1]);
  m.timestamp = std::stoll(cols[2]);
  for (const auto& team : split(cols[3], '|')) m.teams.push_back(split(team, ';'));
  for (const auto& r : split(cols[4], ';')) m.ranks.push_back(std::stoi(r));
  if (cols.size() == 6 && !cols[5].empty()) {
    for (const auto& team : split(cols[5], '|')) {
      std::vector<double> s;
      for (const auto& v : split(team, ';')) s.push_back(parse_double(v));
      m.scores.push_back(std::move(s));
    }
  }
  return m;
}

}  // namespace detail

/// Reads a match log. Lines starting with '{' are JSON records; other
/// non-comment lines are CSV records (gameId,gameType,timestamp,teams,ranks[,scores]
/// with teams as `a;b|c;d`). A line `#polarity=higher-is-better` (or
/// `lower-is-better`, the default) sets the rank polarity for the lines
/// after it. A CSV header line starting with `gameId` is skipped.
inline std::vector<MatchRecord> read_match_log(std::istream& in) {
  std::vector<MatchRecord> out;
  Polarity polarity = Polarity::LowerIsBetter;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (t == "#polarity=higher-is-better") polarity = Polarity::HigherIsBetter;
      else if (t == "#polarity=lower-is-better") polarity = Polarity::LowerIsBetter;
      else if (t.rfind("#polarity", 0) == 0) throw LogError(record, "unknown polarity directive '" + t + "'");
      continue;
    }
    if (t.rfind("gameId", 0) == 0) continue;
    MatchRecord m;
    try {
      m = t[0] == '{' ? detail::from_json(nlohmann::json::parse(t), polarity) : detail::from_csv(t, polarity);
      validate(m);
    } catch (const LogError&) {
      throw;
    } catch (const Error& e) {
      throw LogError(record, e.detail());
    } catch (const std::exception& e) {
      throw LogError(record, e.what());
    }
    out.push_back(std::move(m));
    ++record;
  }
  return out;
}

inline std::vector<MatchRecord> read_match_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidParams, "cannot open '" + path + "'");
  return read_match_log(in);
}

inline nlohmann::json to_json(const MatchRecord& m) {
  nlohmann::json j;
  j["gameId"] = m.game_id;
  j["gameType"] = to_string(m.game_type);
  j["teams"] = m.teams;
  j["ranks"] = m.ranks;
  if (m.has_scores()) j["scores"] = m.scores;
  j["t"] = m.timestamp;
  return j;
}

/// Writes JSON lines, with a polarity directive when any record needs one.
inline void write_match_log(std::ostream& out, const std::vector<MatchRecord>& log) {
  std::optional<Polarity> current;
  for (const auto& m : log) {
    if (current != m.polarity) {
      out << (m.polarity == Polarity::LowerIsBetter ? "#polarity=lower-is-better\n" : "#polarity=higher-is-better\n");
      current = m.polarity;
    }
    out << to_json(m).dump() << '\n';
  }
}

}  // namespace cdn::ranking
