#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cdn/cdn.hpp"
#include "cdn/ranking/evaluate.hpp"

namespace {

using namespace cdn;
namespace fs = std::filesystem;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInputError = 2;

struct Globals {
  std::uint64_t seed = 0;
  double tolerance = -1.0;  // < 0: the command's own default
  std::string output;

  double tol_or(double fallback) const { return tolerance >= 0.0 ? tolerance : fallback; }
};

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when `path` is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidParams, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidParams, "write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidMatch:
    case ErrorCode::InvalidParams:
    case ErrorCode::UnknownVariable:
    case ErrorCode::UnknownPlayer:
    case ErrorCode::InvalidQuery:
    case ErrorCode::DomainError:
    case ErrorCode::DuplicateName:
    case ErrorCode::ArityMismatch:
    case ErrorCode::TeamTooLarge:
    case ErrorCode::InsufficientData:
      return kInputError;
    default:
      return kFail;
  }
}

std::string join_point(const std::vector<double>& z) {
  std::string s = "(";
  for (std::size_t i = 0; i < z.size(); ++i) s += (i ? ", " : "") + io::format_double(z[i]);
  return s + ")";
}

// ---------------------------------------------------------------- check

int cmd_check(const Globals& g, const std::string& model_path, std::size_t samples) {
  const io::Model model = io::read_model_file(model_path);
  const CdnGraph& graph = model.graph;
  MonotonicityOptions mopt;
  mopt.samples = samples;
  mopt.seed = g.seed;
  const double tol = g.tol_or(1e-6);

  std::ostringstream os;
  const StructureReport s = validate_structure(graph);
  os << "structure: " << graph.variable_count() << " variables, " << graph.function_count() << " functions, "
     << graph.edge_count() << " edges, " << s.components.size() << " component(s), tree="
     << (s.is_tree ? "yes" : "no");
  if (!s.cycle.empty()) {
    os << ", cycle:";
    for (const auto& l : s.cycle) os << ' ' << l;
  }
  os << '\n';

  bool ok = true;
  for (const auto& [fid, f] : graph.functions()) {
    const PositiveConvergenceReport r = check_positive_convergence(*f.function, tol);
    os << "positive convergence " << model.name_of(fid) << ": value " << io::format_double(r.value) << " residual "
       << io::format_double(r.residual) << (r.pass ? " PASS" : " FAIL") << '\n';
    ok = ok && r.pass;
  }
  os << "note: " << PositiveConvergenceReport::note << '\n';

  const NegativeConvergenceReport neg = check_negative_convergence(graph, tol);
  for (const auto& e : neg.entries) {
    os << "negative convergence " << e.name << ": ";
    if (graph.variable(e.variable).domain.is_discrete()) os << "discrete, zero below the lowest level";
    else os << "smallest neighbor value " << io::format_double(e.smallest);
    if (e.witness) os << " (" << model.name_of(*e.witness) << ")";
    os << (e.pass ? " PASS" : " FAIL") << '\n';
  }
  ok = ok && neg.pass;

  const MonotonicityReport mono = check_monotonicity(graph, mopt);
  os << "monotonicity: " << mono.checks << " checks" << (mono.pass ? " PASS" : " FAIL") << '\n';
  if (mono.witness) {
    const MonotonicityWitness& w = *mono.witness;
    if (w.function) {
      const FunctionNode& f = graph.function(*w.function);
      os << "witness: function " << model.name_of(*w.function) << ", subset {";
      bool first = true;
      for (std::size_t i = 0; i < f.scope.size(); ++i) {
        if (!subset_contains(w.subset, i)) continue;
        os << (first ? "" : ", ") << graph.variable(f.scope[i]).name;
        first = false;
      }
      os << "} at " << join_point(w.point) << ", value " << io::format_double(w.value) << '\n';
    } else if (w.variable) {
      os << "witness: variable " << graph.variable(*w.variable).name << " at " << join_point(w.point)
         << ", value " << io::format_double(w.value) << '\n';
    }
  }
  ok = ok && mono.pass;
  os << "result: " << (ok ? "PASS" : "FAIL") << '\n';
  emit(g.output, os.str());
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------- infer

int cmd_infer(const Globals& g, const std::string& model_path, const std::string& evidence_path,
              std::string query) {
  const io::Model model = io::read_model_file(model_path);
  const CdnGraph& graph = model.graph;
  Evidence ev;
  if (!evidence_path.empty()) ev = io::read_evidence_file(evidence_path, graph);

  if (ev.size() == graph.variable_count()) {
    const VariableId root = query.empty() ? graph.variables().begin()->first : graph.id_of(query);
    const InferenceResult r = propagate(graph, ev, root);
    emit(g.output, "root_pdf\t" + io::format_double(*r.root_pdf) + "\n");
    return kPass;
  }
  if (query.empty()) {
    std::vector<std::string> open;
    for (const auto& [v, node] : graph.variables()) {
      if (!ev.count(v)) open.push_back(node.name);
    }
    if (open.size() != 1) throw Error(ErrorCode::InvalidQuery, "several unobserved variables; pass --query");
    query = open.front();
  }
  VariableId q{};
  try {
    q = graph.id_of(query);
  } catch (const Error&) {
    throw Error(ErrorCode::UnknownVariable, "unknown query variable '" + query + "'");
  }
  const InferenceResult r = conditional_cdf(graph, q, ev);
  std::ostringstream os;
  io::write_inference_table(os, r);
  emit(g.output, os.str());
  if (r.diagnostics.clamped) std::cerr << "note: " << r.diagnostics.clamped << " tiny negative values clamped\n";
  return kPass;
}

// ---------------------------------------------------------------- oracle

std::string over(const oracle::Rational& r, long long denominator) {
  const oracle::Rational scaled = r * oracle::Rational(denominator);
  if (scaled.denominator() != 1) return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
  return std::to_string(scaled.numerator()) + "/" + std::to_string(denominator);
}

int cmd_oracle_table1(const Globals& g) {
  std::ostringstream os;
  bool ok = true;
  for (const auto& v : oracle::table1_battery()) {
    os << v.relation << ": max deviation " << v.result.max_deviation << (v.pass() ? " PASS" : " FAIL") << '\n';
    ok = ok && v.pass();
  }
  const auto cond = oracle::table1_conditional_pair(0, 2, 1, 1, false);
  const auto prod = oracle::table1_conditional_pair(0, 2, 1, 1, true);
  os << "witness P(x1=0, x3=0 | x2=1) = " << over(cond[0], 216) << ", product of conditionals = " << over(prod[0], 216)
     << '\n';
  os << "result: " << (ok ? "PASS" : "FAIL") << '\n';
  emit(g.output, os.str());
  return ok ? kPass : kFail;
}

int cmd_oracle_dsp(const Globals& g, std::size_t seeds) {
  if (seeds == 0) {
    std::cerr << "warning: --seeds 0, nothing to run\n";
    emit(g.output, "seed\tvariables\tfunctions\tshape\tmax_deviation\tverdict\n");
    return kPass;
  }
  const double threshold = g.tol_or(1e-12);
  const oracle::EquivalenceReport r = oracle::dsp_equivalence_suite(seeds, threshold, {}, g.seed);
  emit(g.output, r.table());
  std::cerr << "max deviation " << r.max_deviation << " over " << seeds << " seeds, threshold " << threshold << ": "
            << (r.pass ? "PASS" : "FAIL") << '\n';
  return r.pass ? kPass : kFail;
}

// ---------------------------------------------------------------- rank

ranking::RatingModelParams params_for(const std::vector<ranking::MatchRecord>& log, const std::string& params_path) {
  if (!params_path.empty()) return ranking::read_params_file(params_path);
  const ranking::FitReport fit = ranking::fit_cutpoints(log);
  for (const auto& n : fit.notes) std::cerr << "note: " << n << '\n';
  return fit.params;
}

int cmd_rank_fit(const Globals& g, const std::string& log_path, const std::string& params_path) {
  const auto log = ranking::read_match_log_file(log_path);
  ranking::RatingModelParams base;
  if (!params_path.empty()) base = ranking::read_params_file(params_path);
  const ranking::FitReport fit = ranking::fit_cutpoints(log, params_path.empty() ? nullptr : &base);
  for (const auto& n : fit.notes) std::cerr << "warning: " << n << '\n';
  if (fit.params.cutpoints.empty()) std::cerr << "warning: no finite cutpoints fitted\n";
  emit(g.output, ranking::to_json(fit.params).dump(2) + "\n");
  return kPass;
}

int cmd_rank_eval(const Globals& g, const std::string& log_path, const std::string& params_path) {
  const auto log = ranking::read_match_log_file(log_path);
  const ranking::RatingModelParams p = params_for(log, params_path);
  ranking::StreamConfig cfg;
  cfg.seed = g.seed;
  const ranking::StreamResult r = ranking::evaluate_stream(log, p, cfg);
  std::ostringstream os;
  os << "# game\tcumulative_error\trandom_cumulative\telo_cumulative\n";
  for (const auto& pt : r.points) {
    os << pt.game << '\t' << io::format_double(pt.model_cumulative) << '\t' << io::format_double(pt.random_cumulative)
       << '\t' << io::format_double(pt.elo_cumulative) << '\n';
  }
  emit(g.output, os.str());
  std::ostream& summary = g.output.empty() ? std::cerr : std::cout;
  summary << "games " << r.points.size() << "\nmodel final error " << r.final_error << "\nmodel final-quartile error "
          << r.final_quartile_error << "\nmodel pairwise inversion rate " << r.inversion_rate << "\nrandom error "
          << r.random_error << "\nelo error ";
  if (r.elo_error < 0.0) summary << "n/a";
  else summary << r.elo_error;
  summary << '\n';
  for (const auto& n : r.notes) summary << "note: " << n << '\n';
  return kPass;
}

int cmd_rank_predict(const Globals& g, const std::string& log_path, const std::string& params_path,
                     const std::string& games_path) {
  const auto log = ranking::read_match_log_file(log_path);
  const auto upcoming = ranking::read_match_log_file(games_path);
  const ranking::RatingModelParams p = params_for(log, params_path);
  ranking::SkillStore skills(p);
  for (const auto& m : log) ranking::update_skills(m, skills, p);
  std::ostringstream os;
  for (const auto& m : upcoming) {
    const ranking::Prediction pred = ranking::predict(m, skills);
    for (const auto& pl : pred.cold_start) {
      std::cerr << "cold start: player '" << pl << "' in game '" << m.game_id << "' uses the prior skill\n";
    }
    nlohmann::json j;
    j["gameId"] = m.game_id;
    j["order"] = pred.order;
    j["places"] = pred.places;
    j["performance"] = pred.performance;
    os << j.dump() << '\n';
  }
  emit(g.output, os.str());
  return kPass;
}

int cmd_rank_synth(const Globals& g, const ranking::SyntheticOptions& base, const std::string& type) {
  ranking::SyntheticOptions opt = base;
  opt.seed = g.seed;
  opt.game_type = ranking::parse_game_type(type);
  const ranking::SyntheticLog log = ranking::generate_synthetic_log(opt);
  std::ostringstream os;
  ranking::write_match_log(os, log.games);
  emit(g.output, os.str());
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cumulative distribution networks: validity checks, DSP inference, oracles and skill ranking"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (default 0)");
  app.add_option("--tolerance", g.tolerance, "Override the command's numeric tolerance");
  app.add_option("--output", g.output, "Write the result here instead of stdout");

  std::string model, evidence, query, log, params, games, suite, type = "HeadToHead";
  std::size_t samples = 200, seeds = 100;
  ranking::SyntheticOptions synth;

  auto* check = app.add_subcommand("check", "Structure and CDF validity checks for a model file");
  check->add_option("model", model, "Model file")->required();
  check->add_option("--samples", samples, "Random points per function");

  auto* infer = app.add_subcommand("infer", "Conditional CDF of a query variable given evidence");
  infer->add_option("model", model, "Model file")->required();
  infer->add_option("--evidence", evidence, "Evidence file (name = value per line)");
  infer->add_option("--query", query, "Query variable");

  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force verification suites");
  oracle_cmd->add_option("suite", suite, "table1 or dsp")->required()->check(CLI::IsMember({"table1", "dsp"}));
  oracle_cmd->add_option("--seeds", seeds, "Random graphs for the dsp suite");

  auto* rank = app.add_subcommand("rank", "Skill learning on match logs");
  rank->require_subcommand(1);
  auto* fit = rank->add_subcommand("fit", "Fit cutpoints and defaults from a scored log");
  fit->add_option("log", log, "Match log")->required();
  fit->add_option("--params", params, "Base parameters (JSON) kept except for fitted fields");
  auto* eval = rank->add_subcommand("eval", "Chronological prediction error of a log");
  eval->add_option("log", log, "Match log")->required();
  eval->add_option("--params", params, "Parameters (JSON); fitted from the log when absent");
  auto* pred = rank->add_subcommand("predict", "Learn from a log, then predict upcoming games");
  pred->add_option("log", log, "Match log to learn from")->required();
  pred->add_option("--games", games, "Upcoming games (ranks may be omitted)")->required();
  pred->add_option("--params", params, "Parameters (JSON); fitted from the log when absent");
  auto* syn = rank->add_subcommand("synth", "Generate a synthetic scored log");
  syn->add_option("--players", synth.players, "Player count");
  syn->add_option("--games", synth.games, "Game count");
  syn->add_option("--type", type, "Game type")
      ->check(CLI::IsMember({"HeadToHead", "SmallTeam", "LargeTeam", "FreeForAll"}));
  syn->add_option("--skill-mean", synth.skill_mean, "Mean latent skill");
  syn->add_option("--skill-sd", synth.skill_sd, "Latent skill spread");
  syn->add_option("--noise", synth.noise, "Per-player score noise sd");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*check) return cmd_check(g, model, samples);
    if (*infer) return cmd_infer(g, model, evidence, query);
    if (*oracle_cmd) return suite == "table1" ? cmd_oracle_table1(g) : cmd_oracle_dsp(g, seeds);
    if (*fit) return cmd_rank_fit(g, log, params);
    if (*eval) return cmd_rank_eval(g, log, params);
    if (*pred) return cmd_rank_predict(g, log, params, games);
    if (*syn) return cmd_rank_synth(g, synth, type);
  } catch (const ranking::LogError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kInputError;
}
