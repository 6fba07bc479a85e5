#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "cdn/dsp.hpp"
#include "cdn/gaussian_cdf.hpp"
#include "cdn/graph.hpp"
#include "cdn/grid_function.hpp"
#include "cdn/normal.hpp"
#include "cdn/ranking/match.hpp"
#include "cdn/ranking/params.hpp"

namespace cdn::ranking {

inline constexpr std::size_t kMaxTeamSize = 4;

/// Levels of a team-performance variable: the cutpoints, then a label for
/// the open top interval (evaluated as +infinity).
inline std::vector<double> rank_levels(const RatingModelParams& p) {
  std::vector<double> levels = p.cutpoints;
  levels.push_back(p.cutpoints.empty() ? 0.0 : p.cutpoints.back() + 1.0);
  return levels;
}

/// g(x_1..x_d, t) = P(U <= x, T <= t) with U ~ N(mu 1, sigma^2 I) and
/// T = 1'U + beta Z: a (d+1)-dimensional Gaussian CDF.
inline std::shared_ptr<GaussianCdfFunction> team_function(std::size_t team_size, const RatingModelParams& p,
                                                          Axis rank_axis = {}) {
  if (team_size < 1 || team_size > kMaxTeamSize) {
    throw Error(ErrorCode::TeamTooLarge, "team size " + std::to_string(team_size) + " outside [1, 4]");
  }
  const std::size_t d = team_size;
  const double s2 = p.sigma * p.sigma;
  std::vector<double> mean(d + 1, p.mu);
  mean[d] = static_cast<double>(d) * p.mu;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    cov(i, i) = s2;
    cov(i, d) = cov(d, i) = s2;
  }
  cov(d, d) = static_cast<double>(d) * s2 + p.beta * p.beta;
  std::vector<Axis> axes(d);
  axes.push_back(std::move(rank_axis));
  return std::make_shared<GaussianCdfFunction>(std::move(mean), cov, std::move(axes));
}

/// h(r_n, r_{n+1}): bivariate Gaussian CDF around the slot means.
inline std::shared_ptr<GaussianCdfFunction> ordering_function(std::size_t slot, const RatingModelParams& p,
                                                              Axis rank_axis = {}) {
  const double a = p.team_mean(slot);
  const double b = p.team_mean(slot + 1);
  if (!(a <= b)) throw Error(ErrorCode::InvalidParams, "team means must be nondecreasing");
  const double b2 = p.beta * p.beta;
  Eigen::MatrixXd cov(2, 2);
  cov << b2, p.rho * b2, p.rho * b2, b2;
  return std::make_shared<GaussianCdfFunction>(std::vector<double>{a, b}, cov,
                                               std::vector<Axis>{rank_axis, rank_axis});
}

/// Per-player skill CDFs sampled on a shared grid, top value 1.
class SkillStore {
 public:
  SkillStore() = default;
  SkillStore(SkillGrid grid, double prior_mean, double prior_sd) : grid_(grid), nodes_(grid.nodes()) {
    prior_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) prior_[i] = normal::cdf(nodes_[i], prior_mean, prior_sd);
    const double top = prior_.back();
    for (double& v : prior_) v /= top;
  }
  explicit SkillStore(const RatingModelParams& p) : SkillStore(p.grid, p.prior_mean, p.prior_sd) {}

  const SkillGrid& grid() const { return grid_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& prior() const { return prior_; }

  bool contains(const std::string& player) const { return values_.count(player) > 0; }
  void ensure(const std::string& player) {
    if (!contains(player)) values_.emplace(player, prior_);
  }
  /// Sampled CDF, or the prior for players never seen.
  const std::vector<double>& values(const std::string& player) const {
    auto it = values_.find(player);
    return it == values_.end() ? prior_ : it->second;
  }
  void set(const std::string& player, std::vector<double> v) {
    if (v.size() != nodes_.size()) throw Error(ErrorCode::InvalidParams, "skill samples do not match the grid");
    values_[player] = std::move(v);
  }
  std::shared_ptr<GridCdfFunction> function(const std::string& player) const {
    return std::make_shared<GridCdfFunction>(grid_.lo, grid_.hi, values(player));
  }
  const std::map<std::string, std::vector<double>>& all() const { return values_; }

 private:
  SkillGrid grid_;
  std::vector<double> nodes_;
  std::vector<double> prior_;
  std::map<std::string, std::vector<double>> values_;
};

struct BuildOptions {
  /// Model team performances on a continuous grid instead of the rank
  /// levels; used to study the ordering property, not for learning.
  bool performance_grid = false;
  SkillGrid performance{-10.0, 10.0, 401};
  bool allow_unknown_players = false;
};

struct MatchCdn {
  CdnGraph graph;
  std::vector<std::size_t> slot_team;                // slot (0-based, worst first) -> team index
  std::vector<std::vector<VariableId>> slot_players;  // per slot
  std::vector<std::vector<std::string>> slot_ids;
  std::vector<VariableId> rank_vars;
  std::vector<FunctionId> team_functions;
  std::vector<FunctionId> ordering_functions;
  std::map<std::string, FunctionId> skill_functions;
  std::map<std::string, VariableId> player_vars;
  Evidence evidence;  // observed rank levels (empty in grid mode)
};

/// Observed level of each team, 1 = worst .. alphabet = best.
inline std::vector<std::size_t> observed_levels(const MatchRecord& m, const RatingModelParams& p) {
  std::vector<std::size_t> out;
  for (int r : m.ranks) {
    const long long lv = m.polarity == Polarity::LowerIsBetter ? static_cast<long long>(p.alphabet()) + 1 - r : r;
    if (lv < 1 || lv > static_cast<long long>(p.alphabet())) {
      throw Error(ErrorCode::InvalidMatch, "rank " + std::to_string(r) + " in game '" + m.game_id +
                                               "' outside the alphabet of size " + std::to_string(p.alphabet()));
    }
    out.push_back(static_cast<std::size_t>(lv));
  }
  return out;
}

inline MatchCdn build_match_cdn(const MatchRecord& m, const SkillStore& skills, const RatingModelParams& p,
                                const BuildOptions& opt = {}) {
  validate(m);
  for (const auto& t : m.teams) {
    if (t.size() > kMaxTeamSize) throw Error(ErrorCode::TeamTooLarge, "team of " + std::to_string(t.size()) + " players");
    if (!opt.allow_unknown_players) {
      for (const auto& pl : t) {
        if (!skills.contains(pl)) throw Error(ErrorCode::UnknownPlayer, "player '" + pl + "' has no skill function");
      }
    }
  }
  const std::vector<std::size_t> obs = observed_levels(m, p);
  const std::vector<double> levels = rank_levels(p);

  MatchCdn out;
  out.slot_team.resize(m.teams.size());
  std::iota(out.slot_team.begin(), out.slot_team.end(), std::size_t{0});
  std::stable_sort(out.slot_team.begin(), out.slot_team.end(),
                   [&](std::size_t a, std::size_t b) { return obs[a] < obs[b]; });

  const VariableDomain player_domain = VariableDomain::grid(p.grid.lo, p.grid.hi, p.grid.points);
  const VariableDomain rank_domain = opt.performance_grid
                                         ? VariableDomain::grid(opt.performance.lo, opt.performance.hi, opt.performance.points)
                                         : VariableDomain::discrete(levels);
  const Axis rank_axis = Axis::of(rank_domain);
  CdnGraph& g = out.graph;

  for (std::size_t slot = 0; slot < m.teams.size(); ++slot) {
    const std::size_t team = out.slot_team[slot];
    std::vector<VariableId> players;
    for (const auto& pl : m.teams[team]) {
      const VariableId x = g.add_variable("x:" + pl, player_domain);
      out.player_vars[pl] = x;
      out.skill_functions[pl] = g.add_function({x}, skills.function(pl));
      players.push_back(x);
    }
    const VariableId r = g.add_variable("R" + std::to_string(slot + 1), rank_domain);
    if (!opt.performance_grid) out.evidence[r] = levels[p.model_level(obs[team]) - 1];
    std::vector<VariableId> scope = players;
    scope.push_back(r);
    out.team_functions.push_back(g.add_function(scope, team_function(players.size(), p, rank_axis)));
    out.slot_players.push_back(players);
    out.slot_ids.push_back(m.teams[team]);
    out.rank_vars.push_back(r);
  }
  for (std::size_t slot = 0; slot + 1 < m.teams.size(); ++slot) {
    out.ordering_functions.push_back(
        g.add_function({out.rank_vars[slot], out.rank_vars[slot + 1]}, ordering_function(slot + 1, p, rank_axis)));
  }
  return out;
}

/// Incoming message mu_{g -> x_k} over the skill grid for one player, with
/// every other player marginalized and the ranks observed.
inline std::vector<double> team_message(const MatchCdn& cdn, std::size_t slot, VariableId player) {
  std::set<VariableId> drop;
  for (const auto& [id, v] : cdn.player_vars) {
    if (v != player) drop.insert(v);
  }
  const CdnGraph reduced = marginalize_unobserved(cdn.graph, drop);
  const InferenceResult r = propagate(reduced, cdn.evidence, player);
  const MessagePair& m = r.root_incoming.at(cdn.team_functions[slot]);
  std::vector<double> out(m.mu.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.mu_at(i);
  return out;
}

struct UpdateDiagnostics {
  std::size_t clamped = 0;  // grid points raised to keep a skill CDF nondecreasing
  std::vector<std::string> notes;
};

/// s_k <- s_k * mu_{g -> x_k}, rescaled so the grid top is 1, for every
/// player of the match. Messages are computed from the pre-game skills.
inline UpdateDiagnostics update_skills(const MatchRecord& m, SkillStore& skills, const RatingModelParams& p) {
  UpdateDiagnostics diag;
  for (const auto& t : m.teams) {
    for (const auto& pl : t) {
      if (!skills.contains(pl)) {
        diag.notes.push_back("cold start for '" + pl + "'");
        skills.ensure(pl);
      }
    }
  }
  const MatchCdn cdn = build_match_cdn(m, skills, p);
  std::map<std::string, std::vector<double>> next;
  for (std::size_t slot = 0; slot < cdn.slot_players.size(); ++slot) {
    for (std::size_t k = 0; k < cdn.slot_players[slot].size(); ++k) {
      const std::string& pl = cdn.slot_ids[slot][k];
      const std::vector<double> msg = team_message(cdn, slot, cdn.slot_players[slot][k]);
      std::vector<double> v = skills.values(pl);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] *= msg[i];
      const double top = v.back();
      if (!(top > 0.0)) {
        diag.notes.push_back("message vanishes at the grid top for '" + pl + "'; skill left unchanged");
        continue;
      }
      double running = 0.0;
      for (double& x : v) {
        x /= top;
        if (x < running) {
          if (running - x > 1e-9) ++diag.clamped;
          x = running;
        }
        running = x;
      }
      v.back() = 1.0;
      next.emplace(pl, std::move(v));
    }
  }
  for (auto& [pl, v] : next) skills.set(pl, std::move(v));
  if (diag.clamped) diag.notes.push_back(std::to_string(diag.clamped) + " skill samples clamped to stay monotone");
  return diag;
}

/// Grid node with the largest backward difference of a sampled CDF; the
/// earliest node wins among values within 1e-12 (relative) of the max.
inline std::size_t mode_index(const std::vector<double>& cdf) {
  std::vector<double> d(cdf.size());
  for (std::size_t i = 0; i < cdf.size(); ++i) d[i] = cdf[i] - (i ? cdf[i - 1] : 0.0);
  const double best = *std::max_element(d.begin(), d.end());
  const double tol = 1e-12 * std::abs(best);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] >= best - tol) return i;
  }
  return 0;
}

struct Prediction {
  std::vector<std::size_t> order;  // team indices, best first
  std::vector<int> places;         // per team, 1 = best
  std::vector<double> performance;
  std::vector<std::string> cold_start;
};

/// Orders teams by summed per-player modes; ties go to the earlier team.
inline Prediction predict_from_performance(std::vector<double> performance) {
  Prediction out;
  out.performance = std::move(performance);
  out.order.resize(out.performance.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return out.performance[a] > out.performance[b]; });
  out.places.resize(out.order.size());
  for (std::size_t i = 0; i < out.order.size(); ++i) out.places[out.order[i]] = static_cast<int>(i) + 1;
  return out;
}

inline Prediction predict(const MatchRecord& m, const SkillStore& skills) {
  std::vector<double> perf;
  std::vector<std::string> cold;
  for (const auto& t : m.teams) {
    double s = 0.0;
    for (const auto& pl : t) {
      if (!skills.contains(pl)) cold.push_back(pl);
      s += skills.nodes()[mode_index(skills.values(pl))];
    }
    perf.push_back(s);
  }
  Prediction out = predict_from_performance(std::move(perf));
  out.cold_start = std::move(cold);
  return out;
}

/// Fraction of teams whose predicted place differs from the observed one.
inline double rank_slot_error(const MatchRecord& m, const std::vector<int>& predicted_places) {
  const std::vector<int> observed = m.places();
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) wrong += observed[i] != predicted_places[i];
  return static_cast<double>(wrong) / static_cast<double>(observed.size());
}

/// Fraction of strictly ordered team pairs that the prediction inverts.
inline double pairwise_inversion_rate(const MatchRecord& m, const std::vector<int>& predicted_places) {
  const std::vector<int> observed = m.places();
  std::size_t pairs = 0, inverted = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    for (std::size_t j = i + 1; j < observed.size(); ++j) {
      if (observed[i] == observed[j]) continue;
      ++pairs;
      if ((observed[i] < observed[j]) != (predicted_places[i] < predicted_places[j])) ++inverted;
    }
  }
  return pairs ? static_cast<double>(inverted) / static_cast<double>(pairs) : 0.0;
}

}  // namespace cdn::ranking
