#include <gtest/gtest.h>

#include <sstream>

#include "support/fixtures.hpp"

using namespace cdn;

namespace {

io::Model parse(const std::string& text) {
  std::istringstream in(text);
  return io::read_model(in, "m");
}

/// Line and column of the parse failure, or (0, 0) if parsing succeeded.
std::pair<std::size_t, std::size_t> failure_at(const std::string& text) {
  try {
    parse(text);
  } catch (const io::ParseError& e) {
    return {e.line(), e.column()};
  }
  return {0, 0};
}

std::vector<ranking::MatchRecord> read_log(const std::string& text) {
  std::istringstream in(text);
  return ranking::read_match_log(in);
}

}  // namespace

TEST(ModelFile, AllFamilies) {
  const io::Model m = parse(R"(# every family once
[variables]
x = grid -6 6 13
y = grid -6 6 13
a = ordinal 2
b = discrete 0 1 2

[functions]
g(x, y) = gaussian mean=[0 0] cov=[1 0.5; 0.5 1]
t(a, b) = table mass=[1 2 3 4 5 6]
n(x) = normal mean=1 sd=2
l(y) = logistic loc=0 scale=1
c(x, y) = gumbel theta=1.5 marginals=[logistic 0 1; normal 0 2]
k(a) = constant value=1
)");
  EXPECT_EQ(m.graph.variable_count(), 4u);
  EXPECT_EQ(m.graph.function_count(), 6u);
  EXPECT_EQ(m.variable_order, (std::vector<std::string>{"x", "y", "a", "b"}));
  std::map<std::string, std::string> family;
  for (const auto& [id, f] : m.graph.functions()) family[m.name_of(id)] = f.function->family();
  EXPECT_EQ(family["g"], "gaussian");
  EXPECT_EQ(family["t"], "table");
  EXPECT_EQ(family["n"], "normal");
  EXPECT_EQ(family["l"], "logistic");
  EXPECT_EQ(family["c"], "gumbel");
  EXPECT_EQ(family["k"], "constant");
  const VariableId x = m.graph.id_of("x");
  EXPECT_EQ(m.graph.variable(x).domain.size(), 13u);
}

TEST(ModelFile, ValuesMatchFunctions) {
  const io::Model m = parse(R"([variables]
x = grid -4 4 9
y = grid -4 4 9
[functions]
g(x, y) = gaussian mean=[0 1] cov=[2 0.3; 0.3 1]
)");
  const auto& f = *m.graph.functions().begin()->second.function;
  const auto ref = fixtures::gaussian2(0, 1, 2, 0.3, 1);
  for (double a : {-1.0, 0.5})
    for (double b : {0.0, 2.0}) EXPECT_EQ(f.evaluate(std::vector<double>{a, b}), ref->evaluate(std::vector<double>{a, b}));
}

TEST(ModelFile, SampleModelsParse) {
  for (const char* name : {"three_variable", "chain", "separable", "copula", "discrete", "bad_table"}) {
    EXPECT_NO_THROW(io::read_model_file(std::string(SAMPLES_DIR) + "/models/" + name + ".cdn")) << name;
  }
  EXPECT_THROW(io::read_model_file(std::string(SAMPLES_DIR) + "/models/malformed.cdn"), io::ParseError);
}

TEST(ModelFile, ErrorsCarryLineAndColumn) {
  EXPECT_EQ(failure_at("[variables]\nx = grid -1 1 3\n[functions]\na(x = normal mean=0 sd=1\n"),
            (std::pair<std::size_t, std::size_t>{4, 5}));
  EXPECT_EQ(failure_at("x = grid 0 1 3\n").first, 1u);
  EXPECT_EQ(failure_at("[variables]\nx = blob 1\n").first, 2u);
  EXPECT_EQ(failure_at("[variables]\nx = grid 0 1 3\nx = grid 0 1 3\n").first, 3u);
  EXPECT_EQ(failure_at("[variables]\nx = grid 0 1 3\n[functions]\nf(z) = normal mean=0 sd=1\n").first, 4u);
  EXPECT_EQ(failure_at("[variables]\nx = grid 0 1 3\n[functions]\nf(x) = normal mean=0 sd=1 sd=2\n").first, 4u);
  EXPECT_EQ(failure_at("[variables]\nx = grid 0 1 3\n[functions]\nf(x) = normal mean=0 sd=1 tilt=2\n").first, 4u);
  EXPECT_EQ(failure_at("[variables]\nx = grid 0 1 3\n[functions]\nf(x) = normal mean=0 sd=-1\n").first, 4u);
  EXPECT_EQ(failure_at("[oops]\n").first, 1u);
  EXPECT_EQ(failure_at("# nothing\n").first, 2u);
  EXPECT_NE(failure_at("[variables]\na = ordinal 2\n[functions]\nt(a) = table mass=[1 2 3]\n").first, 0u);
}

TEST(ModelFile, DeferredTableLoadsForDiagnosis) {
  const io::Model m = parse(R"([variables]
a = ordinal 2
b = ordinal 2
[functions]
t(a, b) = table values=[0.1 0.4 0.4 0.5]
)");
  EXPECT_FALSE(check_monotonicity(m.graph).pass);
}

TEST(EvidenceFile, ParsesAndValidates) {
  const io::Model m = parse("[variables]\nx = grid -2 2 5\nb = discrete 0 1\n");
  std::istringstream ok("# observed\nx = 1.5\nb = 1\n");
  const Evidence ev = io::read_evidence(ok, m.graph);
  EXPECT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev.at(m.graph.id_of("x")), 1.5);
  for (const char* bad : {"z = 1\n", "b = 0.5\n", "x = 9\n", "x = 1\nx = 0\n", "x 1\n", "x = 1 2\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(io::read_evidence(in, m.graph), io::ParseError) << bad;
  }
}

TEST(InferenceTable, Format) {
  const auto c = fixtures::gaussian_chain(5);
  const InferenceResult r = conditional_cdf(c.graph, c.x, {{c.y, 0.0}, {c.z, 0.0}});
  std::ostringstream os;
  io::write_inference_table(os, r);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("# support\tmu\tlambda\tcdf\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 6);
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
}

TEST(MatchLog, JsonAndCsvRecords) {
  const auto log = read_log(R"({"gameId":"g1","gameType":"HeadToHead","teams":[["a"],["b"]],"ranks":[1,2],"scores":[[10.5],[9]],"t":1}
gameId,gameType,timestamp,teams,ranks,scores
g2,SmallTeam,2,a;c|b;d,2;1,3;4|5;6
g3,FreeForAll,3,a|b|c,1;3;2
)");
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].game_id, "g1");
  EXPECT_EQ(log[0].scores[0][0], 10.5);
  EXPECT_EQ(log[0].timestamp, 1);
  EXPECT_EQ(log[1].game_type, ranking::GameType::SmallTeam);
  EXPECT_EQ(log[1].teams[1], (std::vector<std::string>{"b", "d"}));
  EXPECT_EQ(log[1].places(), (std::vector<int>{2, 1}));
  EXPECT_EQ(log[1].team_score(1), 11.0);
  EXPECT_FALSE(log[2].has_scores());
  EXPECT_EQ(log[2].places(), (std::vector<int>{1, 3, 2}));
}

TEST(MatchLog, PolarityDirective) {
  const auto log = read_log("#polarity=higher-is-better\ng1,HeadToHead,1,a|b,1;2\n#polarity=lower-is-better\ng2,HeadToHead,2,a|b,1;2\n");
  EXPECT_EQ(log[0].places(), (std::vector<int>{2, 1}));
  EXPECT_EQ(log[1].places(), (std::vector<int>{1, 2}));
  EXPECT_THROW(read_log("#polarity=sideways\n"), ranking::LogError);
}

TEST(MatchLog, UpcomingGamesMayOmitRanks) {
  const auto log = read_log(R"({"gameId":"u1","gameType":"HeadToHead","teams":[["a"],["b"]]})");
  EXPECT_EQ(log[0].ranks, (std::vector<int>{1, 1}));
}

TEST(MatchLog, ErrorsNameTheRecord) {
  const std::string bad = "g1,HeadToHead,1,a|b,1;2\ng2,HeadToHead,2,a,1\n";
  try {
    read_log(bad);
    FAIL();
  } catch (const ranking::LogError& e) {
    EXPECT_EQ(e.record(), 1u);
    EXPECT_EQ(e.code(), ErrorCode::InvalidMatch);
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
  for (const char* text : {"{\"gameId\":1}\n", "g1,Chess,1,a|b,1;2\n", "g1,HeadToHead,1,a|b,1;x\n", "g1,HeadToHead,1,a|a,1;2\n",
                           "g1,HeadToHead,1,a|b,0;1\n", "g1,HeadToHead\n"}) {
    EXPECT_THROW(read_log(text), ranking::LogError) << text;
  }
}

TEST(MatchLog, WriteReadRoundTrip) {
  const auto log = ranking::generate_synthetic_log({10, 20, ranking::GameType::SmallTeam, 25.0, 8.0, 2.0, 4}).games;
  std::stringstream ss;
  ranking::write_match_log(ss, log);
  const auto back = ranking::read_match_log(ss);
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(back[i].teams, log[i].teams);
    EXPECT_EQ(back[i].ranks, log[i].ranks);
    EXPECT_EQ(back[i].scores, log[i].scores);
    EXPECT_EQ(back[i].game_type, log[i].game_type);
  }
}

TEST(Params, JsonRoundTrip) {
  ranking::RatingModelParams p = ranking::RatingModelParams::defaults(2.0, 3.0, 5.0);
  p.cutpoints = {1.0, 4.5};
  p.boundaries = {1, 3};
  p.rank_alphabet = 4;
  const ranking::RatingModelParams q = ranking::params_from_json(ranking::to_json(p));
  EXPECT_EQ(q.cutpoints, p.cutpoints);
  EXPECT_EQ(q.boundaries, p.boundaries);
  EXPECT_EQ(q.alphabet(), 4u);
  EXPECT_EQ(q.beta, p.beta);
  EXPECT_EQ(q.grid.points, p.grid.points);
  EXPECT_EQ(q.prior_sd, p.prior_sd);
  EXPECT_EQ(q.model_level(4), 3u);
  EXPECT_EQ(q.model_level(2), 2u);
  EXPECT_EQ(q.model_level(1), 1u);
}

TEST(Params, InvalidValuesRejected) {
  EXPECT_THROW(ranking::params_from_json(nlohmann::json{{"cutpoints", {2.0, 1.0}}}), Error);
  EXPECT_THROW(ranking::params_from_json(nlohmann::json{{"rho", 1.0}}), Error);
  EXPECT_THROW(ranking::params_from_json(nlohmann::json{{"beta", "wide"}}), Error);
  EXPECT_NO_THROW(ranking::read_params_file(std::string(SAMPLES_DIR) + "/params/fitted_h2h.json"));
}
