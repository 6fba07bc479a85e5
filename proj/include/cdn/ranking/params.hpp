#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "cdn/error.hpp"

namespace cdn::ranking {

/// Uniform grid shared by every player's skill function.
struct SkillGrid {
  double lo = -4.0;
  double hi = 6.0;
  std::size_t points = 201;

  std::vector<double> nodes() const {
    std::vector<double> s(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) s[i] = lo + h * static_cast<double>(i);
    s.back() = hi;
    return s;
  }
};

/// Parameters of the game model. Rank levels are internal: level 1 is the
/// worst outcome and level K the best, K = cutpoints.size() + 1.
struct RatingModelParams {
  std::vector<double> cutpoints;  // theta(r_1) < ... < theta(r_{K-1})
  double beta = 0.5;               // team performance noise
  double sigma = 1.0;              // player score spread
  double mu = 0.0;                 // player score location
  double rho = 0.5;                // coupling of consecutive team performances
  double team_mean_offset = 0.0;   // r~_n = offset + n * spacing, n = 1..N
  double team_mean_spacing = 1.0;

  /// Size of the rank alphabet observed in logs and the observed level
  /// that ends each kept cutpoint; fit_cutpoints pools levels whose
  /// boundaries coincide. Empty means every level has its own cutpoint.
  std::size_t rank_alphabet = 0;
  std::vector<std::size_t> boundaries;

  SkillGrid grid;
  double prior_mean = 1.0;
  double prior_sd = 1.0;

  std::size_t levels() const { return cutpoints.size() + 1; }
  std::size_t alphabet() const { return rank_alphabet ? rank_alphabet : levels(); }

  /// Model level (1..K) of an observed level (1..alphabet, larger = better).
  std::size_t model_level(std::size_t observed) const {
    if (observed < 1 || observed > alphabet()) {
      throw Error(ErrorCode::InvalidMatch, "rank level " + std::to_string(observed) + " outside the alphabet of size " +
                                               std::to_string(alphabet()));
    }
    if (boundaries.empty()) return std::min(observed, levels());
    std::size_t level = 1;
    for (std::size_t b : boundaries) {
      if (b < observed) ++level;
    }
    return level;
  }

  double team_mean(std::size_t slot) const { return team_mean_offset + static_cast<double>(slot) * team_mean_spacing; }

  void validate() const {
    for (std::size_t i = 1; i < cutpoints.size(); ++i) {
      if (!(cutpoints[i] > cutpoints[i - 1])) throw Error(ErrorCode::InvalidParams, "cutpoints must be strictly increasing");
    }
    for (double c : cutpoints) {
      if (!std::isfinite(c)) throw Error(ErrorCode::InvalidParams, "cutpoints must be finite");
    }
    if (!(beta > 0.0) || !(sigma > 0.0)) throw Error(ErrorCode::InvalidParams, "beta and sigma must be positive");
    if (!(std::abs(rho) < 1.0)) throw Error(ErrorCode::InvalidParams, "rho must lie in (-1, 1)");
    if (!(team_mean_spacing >= 0.0)) throw Error(ErrorCode::InvalidParams, "team means must be nondecreasing");
    if (!std::isfinite(mu) || !std::isfinite(team_mean_offset)) throw Error(ErrorCode::InvalidParams, "non-finite location");
    if (!(grid.lo < grid.hi) || grid.points < 2) throw Error(ErrorCode::InvalidParams, "bad skill grid");
    if (!(prior_sd > 0.0)) throw Error(ErrorCode::InvalidParams, "prior sd must be positive");
    if (!boundaries.empty() && boundaries.size() != cutpoints.size()) {
      throw Error(ErrorCode::InvalidParams, "one boundary per cutpoint required");
    }
  }

  /// Defaults derived from a score spread sigma0 and minimum score mu.
  static RatingModelParams defaults(double mu, double sigma0, double prior_mean) {
    RatingModelParams p;
    p.mu = mu;
    p.sigma = sigma0;
    p.beta = sigma0 / 2.0;
    p.rho = 0.5;
    p.team_mean_spacing = 2.0 * p.beta;
    p.grid = SkillGrid{mu - 4.0 * sigma0, mu + 6.0 * sigma0, 201};
    p.prior_mean = prior_mean;
    p.prior_sd = sigma0;
    return p;
  }
};

inline nlohmann::json to_json(const RatingModelParams& p) {
  return nlohmann::json{
      {"cutpoints", p.cutpoints},
      {"beta", p.beta},
      {"sigma", p.sigma},
      {"mu", p.mu},
      {"rho", p.rho},
      {"teamMeanOffset", p.team_mean_offset},
      {"teamMeanSpacing", p.team_mean_spacing},
      {"rankAlphabet", p.alphabet()},
      {"boundaries", p.boundaries},
      {"grid", {{"lo", p.grid.lo}, {"hi", p.grid.hi}, {"points", p.grid.points}}},
      {"prior", {{"mean", p.prior_mean}, {"sd", p.prior_sd}}},
  };
}

/// Missing keys keep the values already in `base`.
inline RatingModelParams params_from_json(const nlohmann::json& j, RatingModelParams base = {}) {
  try {
    if (j.contains("cutpoints")) base.cutpoints = j["cutpoints"].get<std::vector<double>>();
    if (j.contains("beta")) base.beta = j["beta"].get<double>();
    if (j.contains("sigma")) base.sigma = j["sigma"].get<double>();
    if (j.contains("mu")) base.mu = j["mu"].get<double>();
    if (j.contains("rho")) base.rho = j["rho"].get<double>();
    if (j.contains("teamMeanOffset")) base.team_mean_offset = j["teamMeanOffset"].get<double>();
    if (j.contains("teamMeanSpacing")) base.team_mean_spacing = j["teamMeanSpacing"].get<double>();
    if (j.contains("rankAlphabet")) base.rank_alphabet = j["rankAlphabet"].get<std::size_t>();
    if (j.contains("boundaries")) base.boundaries = j["boundaries"].get<std::vector<std::size_t>>();
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.contains("lo")) base.grid.lo = g["lo"].get<double>();
      if (g.contains("hi")) base.grid.hi = g["hi"].get<double>();
      if (g.contains("points")) base.grid.points = g["points"].get<std::size_t>();
    }
    if (j.contains("prior")) {
      const auto& pr = j["prior"];
      if (pr.contains("mean")) base.prior_mean = pr["mean"].get<double>();
      if (pr.contains("sd")) base.prior_sd = pr["sd"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, e.what());
  }
  base.validate();
  return base;
}

inline RatingModelParams read_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidParams, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace cdn::ranking
