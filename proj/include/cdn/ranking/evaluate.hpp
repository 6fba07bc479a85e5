#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cdn/ranking/match.hpp"
#include "cdn/ranking/model.hpp"
#include "cdn/ranking/params.hpp"

namespace cdn::ranking {

struct FitReport {
  RatingModelParams params;
  std::vector<std::string> notes;  // pooled levels and other warnings
};

/// Cutpoints from pooled team score sums: with teams sorted by summed
/// score and c_i teams at observed level <= i, theta_i is the midpoint
/// between the c_i-th and (c_i+1)-th smallest sums. Levels whose boundary
/// would not be strictly above the previous one are pooled. mu is the
/// minimum player score; sigma0 is half the range of player scores and
/// seeds the remaining defaults unless `base` is given.
inline FitReport fit_cutpoints(const std::vector<MatchRecord>& history, const RatingModelParams* base = nullptr) {
  if (history.empty()) throw Error(ErrorCode::InsufficientData, "empty history");
  std::vector<double> player_scores;
  int max_rank = 1;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const MatchRecord& m = history[i];
    if (!m.has_scores()) throw Error(ErrorCode::InsufficientData, "record " + std::to_string(i) + " has no scores");
    for (const auto& t : m.scores) player_scores.insert(player_scores.end(), t.begin(), t.end());
    for (int r : m.ranks) max_rank = std::max(max_rank, r);
  }
  const double mu = *std::min_element(player_scores.begin(), player_scores.end());
  const double lo = mu;
  const double hi = *std::max_element(player_scores.begin(), player_scores.end());
  // Half the score range: the largest observed score sits two spreads
  // above mu, so the score prior of the team functions covers the data.
  double sigma0 = 0.5 * (hi - lo);
  if (!(sigma0 > 0.0)) sigma0 = 1.0;

  FitReport report;
  RatingModelParams p = base ? *base : RatingModelParams::defaults(mu, sigma0, 0.5 * (lo + hi));
  p.mu = mu;
  p.rank_alphabet = static_cast<std::size_t>(max_rank);
  p.cutpoints.clear();
  p.boundaries.clear();

  // (summed score, observed level) for every team
  std::vector<std::pair<double, std::size_t>> teams;
  for (const MatchRecord& m : history) {
    const std::vector<std::size_t> lv = observed_levels(m, p);
    for (std::size_t t = 0; t < m.teams.size(); ++t) teams.emplace_back(m.team_score(t), lv[t]);
  }
  std::vector<double> sums;
  for (const auto& [s, l] : teams) sums.push_back(s);
  std::sort(sums.begin(), sums.end());

  const std::size_t K = p.rank_alphabet;
  for (std::size_t i = 1; i < K; ++i) {
    const std::size_t c = static_cast<std::size_t>(
        std::count_if(teams.begin(), teams.end(), [&](const auto& t) { return t.second <= i; }));
    if (c == 0 || c == sums.size()) {
      report.notes.push_back("level " + std::to_string(i) + " | " + std::to_string(i + 1) +
                             ": no teams on one side, pooled");
      continue;
    }
    const double theta = 0.5 * (sums[c - 1] + sums[c]);
    if (!p.cutpoints.empty() && !(theta > p.cutpoints.back())) {
      report.notes.push_back("level " + std::to_string(i) + " | " + std::to_string(i + 1) +
                             ": boundary not above the previous one, pooled");
      continue;
    }
    p.cutpoints.push_back(theta);
    p.boundaries.push_back(i);
  }
  if (K == 1) report.notes.push_back("single rank level: no finite cutpoints");
  if (!p.cutpoints.empty()) {
    const double centre = 0.5 * (p.cutpoints.front() + p.cutpoints.back());
    p.team_mean_offset = centre - 0.5 * static_cast<double>(K + 1) * p.team_mean_spacing;
  }
  p.validate();
  report.params = std::move(p);
  return report;
}

/// Logistic Elo for two-team games; a team's rating is its members' mean.
class Elo {
 public:
  explicit Elo(double k = 24.0, double initial = 1500.0) : k_(k), initial_(initial) {}

  double rating(const std::string& player) const {
    auto it = ratings_.find(player);
    return it == ratings_.end() ? initial_ : it->second;
  }
  double team_rating(const std::vector<std::string>& team) const {
    double s = 0.0;
    for (const auto& p : team) s += rating(p);
    return s / static_cast<double>(team.size());
  }
  static double expected(double a, double b) { return 1.0 / (1.0 + std::pow(10.0, (b - a) / 400.0)); }

  /// Places for a two-team game; ties go to the first team.
  std::vector<int> predict(const MatchRecord& m) const {
    return team_rating(m.teams[0]) >= team_rating(m.teams[1]) ? std::vector<int>{1, 2} : std::vector<int>{2, 1};
  }

  void update(const MatchRecord& m) {
    if (m.teams.size() != 2) return;
    const double ra = team_rating(m.teams[0]);
    const double rb = team_rating(m.teams[1]);
    const double ea = expected(ra, rb);
    const int ga = m.goodness(0), gb = m.goodness(1);
    const double sa = ga > gb ? 1.0 : (ga == gb ? 0.5 : 0.0);
    const double delta = k_ * (sa - ea);
    for (const auto& p : m.teams[0]) ratings_[p] = rating(p) + delta;
    for (const auto& p : m.teams[1]) ratings_[p] = rating(p) - delta;
  }

 private:
  double k_;
  double initial_;
  std::map<std::string, double> ratings_;
};

struct SyntheticOptions {
  std::size_t players = 200;
  std::size_t games = 2000;
  GameType game_type = GameType::HeadToHead;
  double skill_mean = 25.0;
  double skill_sd = 8.0;
  double noise = 2.0;  // score noise standard deviation
  std::uint64_t seed = 0;
};

struct SyntheticLog {
  std::vector<MatchRecord> games;
  std::map<std::string, double> true_skill;
};

/// Players with Gaussian latent skills; each game draws distinct players
/// into teams, scores are skill plus Gaussian noise and places follow the
/// summed team scores (1 = best, ties share a place).
inline SyntheticLog generate_synthetic_log(const SyntheticOptions& opt) {
  if (opt.players < 2 || opt.games == 0 || !(opt.skill_sd > 0.0) || opt.noise < 0.0) {
    throw Error(ErrorCode::InvalidParams, "synthetic log needs >= 2 players, >= 1 game, sd > 0, noise >= 0");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  SyntheticLog log;
  std::vector<std::string> ids;
  const int width = static_cast<int>(std::to_string(opt.players).size());
  for (std::size_t i = 0; i < opt.players; ++i) {
    std::string id = std::to_string(i + 1);
    id = "p" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    ids.push_back(id);
    log.true_skill[id] = opt.skill_mean + opt.skill_sd * unit(rng);
  }

  std::size_t teams = 2, size = 1;
  switch (opt.game_type) {
    case GameType::HeadToHead: break;
    case GameType::SmallTeam: size = 2; break;
    case GameType::LargeTeam: size = 4; break;
    case GameType::FreeForAll: teams = 4; break;
  }
  if (teams * size > opt.players) throw Error(ErrorCode::InvalidParams, "not enough players for the game type");

  for (std::size_t g = 0; g < opt.games; ++g) {
    std::vector<std::string> pool = ids;
    for (std::size_t i = 0; i < teams * size; ++i) {
      const std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, pool.size() - 1 - i)(rng);
      std::swap(pool[i], pool[j]);
    }
    MatchRecord m;
    m.game_id = "g" + std::to_string(g + 1);
    m.game_type = opt.game_type;
    m.timestamp = static_cast<long long>(g + 1);
    std::vector<double> sums;
    for (std::size_t t = 0; t < teams; ++t) {
      std::vector<std::string> team(pool.begin() + t * size, pool.begin() + (t + 1) * size);
      std::vector<double> scores;
      double sum = 0.0;
      for (const auto& p : team) {
        const double s = log.true_skill[p] + opt.noise * unit(rng);
        scores.push_back(s);
        sum += s;
      }
      m.teams.push_back(std::move(team));
      m.scores.push_back(std::move(scores));
      sums.push_back(sum);
    }
    for (std::size_t t = 0; t < teams; ++t) {
      int place = 1;
      for (std::size_t u = 0; u < teams; ++u) place += sums[u] > sums[t];
      m.ranks.push_back(place);
    }
    log.games.push_back(std::move(m));
  }
  return log;
}

/// Orders teams by summed true skill.
inline Prediction clairvoyant_predict(const MatchRecord& m, const std::map<std::string, double>& skill) {
  std::vector<double> perf;
  for (const auto& t : m.teams) {
    double s = 0.0;
    for (const auto& p : t) s += skill.at(p);
    perf.push_back(s);
  }
  return predict_from_performance(std::move(perf));
}

struct StreamConfig {
  std::uint64_t seed = 0;  // random baseline
  bool elo = true;
  double elo_k = 24.0;
  std::size_t smoothing_window = 200;
};

struct StreamPoint {
  std::size_t game = 0;
  double model_error = 0.0;
  double model_inversions = 0.0;
  double random_error = 0.0;
  double elo_error = -1.0;  // -1 when Elo does not apply
  double model_cumulative = 0.0;
  double random_cumulative = 0.0;
  double elo_cumulative = -1.0;
};

struct StreamResult {
  std::vector<StreamPoint> points;
  double final_error = 0.0;          // cumulative model error after the last game
  double final_quartile_error = 0.0; // mean model error over the last 25% of games
  double random_error = 0.0;
  double elo_error = -1.0;
  double inversion_rate = 0.0;
  std::vector<std::string> notes;

  /// Block means of the cumulative model error over consecutive windows.
  std::vector<double> smoothed(std::size_t window) const {
    std::vector<double> out;
    for (std::size_t start = 0; start + window <= points.size(); start += window) {
      double s = 0.0;
      for (std::size_t i = start; i < start + window; ++i) s += points[i].model_cumulative;
      out.push_back(s / static_cast<double>(window));
    }
    return out;
  }
};

/// Online evaluation: predict each game from the current skills, score
/// the prediction, then learn from the game.
inline StreamResult evaluate_stream(const std::vector<MatchRecord>& history, const RatingModelParams& p,
                                    const StreamConfig& config = {}) {
  p.validate();
  StreamResult out;
  SkillStore skills(p);
  Elo elo(config.elo_k);
  std::mt19937_64 rng(config.seed);
  double model_sum = 0.0, random_sum = 0.0, elo_sum = 0.0, inv_sum = 0.0;
  std::size_t elo_games = 0;
  std::size_t clamped = 0;

  for (std::size_t g = 0; g < history.size(); ++g) {
    const MatchRecord& m = history[g];
    StreamPoint pt;
    pt.game = g + 1;
    const Prediction pred = predict(m, skills);
    pt.model_error = rank_slot_error(m, pred.places);
    pt.model_inversions = pairwise_inversion_rate(m, pred.places);

    std::vector<std::size_t> perm(m.teams.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> random_places(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) random_places[perm[i]] = static_cast<int>(i) + 1;
    pt.random_error = rank_slot_error(m, random_places);

    if (config.elo && m.teams.size() == 2) {
      pt.elo_error = rank_slot_error(m, elo.predict(m));
      elo_sum += pt.elo_error;
      ++elo_games;
      elo.update(m);
    }

    const UpdateDiagnostics d = update_skills(m, skills, p);
    clamped += d.clamped;

    model_sum += pt.model_error;
    random_sum += pt.random_error;
    inv_sum += pt.model_inversions;
    pt.model_cumulative = model_sum / static_cast<double>(g + 1);
    pt.random_cumulative = random_sum / static_cast<double>(g + 1);
    if (elo_games) pt.elo_cumulative = elo_sum / static_cast<double>(elo_games);
    out.points.push_back(pt);
  }
  if (!out.points.empty()) {
    out.final_error = out.points.back().model_cumulative;
    out.random_error = out.points.back().random_cumulative;
    out.elo_error = out.points.back().elo_cumulative;
    out.inversion_rate = inv_sum / static_cast<double>(out.points.size());
    const std::size_t start = out.points.size() - std::max<std::size_t>(1, out.points.size() / 4);
    double s = 0.0;
    for (std::size_t i = start; i < out.points.size(); ++i) s += out.points[i].model_error;
    out.final_quartile_error = s / static_cast<double>(out.points.size() - start);
  }
  if (clamped) out.notes.push_back(std::to_string(clamped) + " skill samples clamped during updates");
  return out;
}

}  // namespace cdn::ranking
