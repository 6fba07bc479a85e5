#pragma once

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cdn/copula.hpp"
#include "cdn/dsp.hpp"
#include "cdn/gaussian_cdf.hpp"
#include "cdn/graph.hpp"
#include "cdn/table_function.hpp"

namespace cdn::io {

/// Model file:
///
///   # comment
///   [variables]
///   x = discrete 0 1 2        # explicit levels
///   k = ordinal 3             # levels 0, 1, 2
///   z = grid -6 6 121         # lo hi points
///
///   [functions]
///   a(x, z) = gaussian mean=[0 0] cov=[1 0.5; 0.5 1]
///   b(x) = table values=[0.2 0.5 1] normalized=true
///   c(x) = table mass=[1 2 1]
///   d(z, w) = gumbel theta=2 marginals=[logistic 0 1; normal 0 1]
///   e(z) = normal mean=0 sd=1
///   f(z) = logistic loc=0 scale=1
///   g(z) = constant value=1
///
/// Table values are row-major with the first scope variable slowest.
/// Tables given by `values=` are loaded without the construction-time
/// monotonicity check so that `check` can report a witness instead.
struct Model {
  CdnGraph graph;
  std::map<FunctionId, std::string> function_names;
  std::vector<std::string> variable_order;  // declaration order

  std::string name_of(FunctionId f) const {
    auto it = function_names.find(f);
    return it == function_names.end() ? "f" + std::to_string(f.value) : it->second;
  }
};

class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

namespace detail {

struct Token {
  std::string text;
  std::size_t column = 0;  // 1-based
  bool number = false;
  double value = 0.0;
};

/// Line-local cursor with column tracking.
class Cursor {
 public:
  Cursor(const std::string& source, std::size_t line, const std::string& text)
      : source_(source), line_(line), text_(text) {}

  [[noreturn]] void fail(const std::string& what, std::size_t column = 0) const {
    throw ParseError(source_, line_, column ? column : pos_ + 1, what);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  /// A run of characters up to whitespace or punctuation.
  Token word() {
    skip_space();
    Token t;
    t.column = pos_ + 1;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '(' || c == ')' || c == ',' || c == '=' || c == '[' ||
          c == ']' || c == ';')
        break;
      t.text.push_back(c);
      ++pos_;
    }
    if (t.text.empty()) fail("expected a name or number");
    std::size_t used = 0;
    try {
      t.value = std::stod(t.text, &used);
      t.number = used == t.text.size();
    } catch (const std::exception&) {
      t.number = false;
    }
    return t;
  }

  double number() {
    Token t = word();
    if (!t.number) fail("expected a number, got '" + t.text + "'", t.column);
    return t.value;
  }

  /// `[a b; c d]` as rows of tokens.
  std::vector<std::vector<Token>> bracket() {
    expect('[');
    std::vector<std::vector<Token>> rows(1);
    while (true) {
      if (accept(']')) break;
      if (done()) fail("unterminated '['");
      if (accept(';')) {
        rows.emplace_back();
        continue;
      }
      accept(',');
      if (peek() == ']' || peek() == ';') continue;
      rows.back().push_back(word());
    }
    if (rows.size() > 1 && rows.back().empty()) rows.pop_back();
    return rows;
  }

  std::size_t column() const { return pos_ + 1; }
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  const std::string& source_;
  std::size_t line_;
  const std::string& text_;
  std::size_t pos_ = 0;
};

struct Param {
  std::size_t column = 0;
  std::vector<std::vector<Token>> rows;  // a scalar is a 1x1 block
  bool bracketed = false;
};

inline std::string strip_comment(const std::string& line) {
  const auto h = line.find('#');
  return h == std::string::npos ? line : line.substr(0, h);
}

inline bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

inline std::vector<double> numbers(Cursor& cur, const Param& p, const std::string& key) {
  std::vector<double> out;
  for (const auto& row : p.rows) {
    for (const Token& t : row) {
      if (!t.number) cur.fail("'" + key + "' expects numbers, got '" + t.text + "'", t.column);
      out.push_back(t.value);
    }
  }
  return out;
}

inline double scalar(Cursor& cur, const Param& p, const std::string& key) {
  const std::vector<double> v = numbers(cur, p, key);
  if (v.size() != 1) cur.fail("'" + key + "' expects a single number", p.column);
  return v[0];
}

inline UnivariateCdf marginal_row(Cursor& cur, const std::vector<Token>& row, std::size_t column) {
  if (row.size() != 3 || row[1].number == false || row[2].number == false) {
    cur.fail("marginal must be '<logistic|normal> location scale'", column);
  }
  if (row[0].text == "logistic") return UnivariateCdf::logistic(row[1].value, row[2].value);
  if (row[0].text == "normal" || row[0].text == "gaussian") return UnivariateCdf::gaussian(row[1].value, row[2].value);
  cur.fail("unknown marginal family '" + row[0].text + "'", row[0].column);
}

inline void parse_variable(Cursor& cur, Model& m) {
  const Token name = cur.word();
  cur.expect('=');
  const Token kind = cur.word();
  try {
    VariableDomain d = VariableDomain::ordinal(1);
    if (kind.text == "discrete") {
      std::vector<double> levels;
      while (!cur.done()) levels.push_back(cur.number());
      if (levels.empty()) cur.fail("discrete variable needs at least one level");
      d = VariableDomain::discrete(std::move(levels));
    } else if (kind.text == "ordinal") {
      const double n = cur.number();
      if (!(n >= 1.0) || n != std::floor(n)) cur.fail("ordinal level count must be a positive integer");
      d = VariableDomain::ordinal(static_cast<std::size_t>(n));
    } else if (kind.text == "grid") {
      const double lo = cur.number(), hi = cur.number(), pts = cur.number();
      if (!(pts >= 2.0) || pts != std::floor(pts)) cur.fail("grid point count must be an integer >= 2");
      d = VariableDomain::grid(lo, hi, static_cast<std::size_t>(pts));
    } else {
      cur.fail("unknown variable kind '" + kind.text + "'", kind.column);
    }
    if (!cur.done()) cur.fail("unexpected trailing input");
    m.graph.add_variable(name.text, std::move(d));
    m.variable_order.push_back(name.text);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    cur.fail(e.what(), name.column);
  }
}

inline void parse_function(Cursor& cur, Model& m) {
  const Token name = cur.word();
  for (const auto& [id, n] : m.function_names) {
    if (n == name.text) cur.fail("duplicate function name '" + name.text + "'", name.column);
  }
  cur.expect('(');
  std::vector<VariableId> scope;
  std::vector<Axis> axes;
  while (!cur.accept(')')) {
    if (!scope.empty() && !cur.accept(',')) cur.fail("expected ',' or ')' in scope list");
    const Token v = cur.word();
    try {
      scope.push_back(m.graph.id_of(v.text));
    } catch (const Error&) {
      cur.fail("unknown variable '" + v.text + "'", v.column);
    }
    axes.push_back(Axis::of(m.graph.variable(scope.back()).domain));
    if (cur.done()) cur.fail("unterminated scope list");
  }
  if (scope.empty()) cur.fail("empty scope", name.column);
  cur.expect('=');
  const Token family = cur.word();

  std::map<std::string, Param> params;
  while (!cur.done()) {
    const Token key = cur.word();
    cur.expect('=');
    Param p;
    p.column = cur.column();
    if (cur.peek() == '[') {
      p.bracketed = true;
      p.rows = cur.bracket();
    } else {
      p.rows = {{cur.word()}};
    }
    if (!params.emplace(key.text, std::move(p)).second) cur.fail("repeated parameter '" + key.text + "'", key.column);
  }
  auto need = [&](const std::string& key) -> const Param& {
    auto it = params.find(key);
    if (it == params.end()) cur.fail("family '" + family.text + "' requires '" + key + "'", family.column);
    return it->second;
  };
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, p] : params) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) cur.fail("unknown parameter '" + k + "' for family '" + family.text + "'", p.column);
    }
  };

  const std::size_t d = scope.size();
  FunctionPtr fn;
  try {
    if (family.text == "gaussian") {
      allow({"mean", "cov"});
      const std::vector<double> mean = numbers(cur, need("mean"), "mean");
      const Param& cp = need("cov");
      const std::vector<double> flat = numbers(cur, cp, "cov");
      if (mean.size() != d) cur.fail("mean has " + std::to_string(mean.size()) + " entries for arity " + std::to_string(d), need("mean").column);
      if (flat.size() != d * d) cur.fail("cov must be " + std::to_string(d) + "x" + std::to_string(d), cp.column);
      Eigen::MatrixXd cov(d, d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cov(i, j) = flat[i * d + j];
      fn = std::make_shared<GaussianCdfFunction>(mean, cov, axes);
    } else if (family.text == "table") {
      allow({"values", "mass", "normalized"});
      const bool has_values = params.count("values") > 0;
      if (has_values == (params.count("mass") > 0)) cur.fail("table needs exactly one of 'values' or 'mass'", family.column);
      bool normalized = has_values ? false : true;
      if (params.count("normalized")) {
        const Token& t = params["normalized"].rows.at(0).at(0);
        if (t.text != "true" && t.text != "false") cur.fail("'normalized' must be true or false", t.column);
        normalized = t.text == "true";
      }
      for (const Axis& a : axes) {
        if (!a.is_discrete()) cur.fail("table scope must be discrete variables", family.column);
      }
      if (has_values) {
        fn = std::make_shared<DiscreteTableFunction>(axes, numbers(cur, params["values"], "values"), normalized,
                                                     DiscreteTableFunction::Validation::Deferred);
      } else {
        const std::vector<double> mass = numbers(cur, params["mass"], "mass");
        for (double x : mass) {
          if (!(x >= 0.0)) cur.fail("mass entries must be >= 0", params["mass"].column);
        }
        std::size_t expected = 1;
        for (const Axis& a : axes) expected *= a.levels.size();
        if (mass.size() != expected) cur.fail("mass has " + std::to_string(mass.size()) + " values, expected " + std::to_string(expected), params["mass"].column);
        fn = DiscreteTableFunction::from_mass(axes, mass, normalized);
      }
    } else if (family.text == "gumbel") {
      allow({"theta", "marginals"});
      if (d != 2) cur.fail("gumbel is bivariate", family.column);
      const Param& mp = need("marginals");
      if (mp.rows.size() != 2) cur.fail("gumbel needs two marginal rows", mp.column);
      fn = std::make_shared<GumbelCopulaFunction>(scalar(cur, need("theta"), "theta"), marginal_row(cur, mp.rows[0], mp.column),
                                                  marginal_row(cur, mp.rows[1], mp.column), axes);
    } else if (family.text == "normal") {
      allow({"mean", "sd"});
      if (d != 1) cur.fail("normal is univariate", family.column);
      fn = std::make_shared<MarginalCdfFunction>(
          UnivariateCdf::gaussian(scalar(cur, need("mean"), "mean"), scalar(cur, need("sd"), "sd")), axes[0]);
    } else if (family.text == "logistic") {
      allow({"loc", "scale"});
      if (d != 1) cur.fail("logistic is univariate", family.column);
      fn = std::make_shared<MarginalCdfFunction>(
          UnivariateCdf::logistic(scalar(cur, need("loc"), "loc"), scalar(cur, need("scale"), "scale")), axes[0]);
    } else if (family.text == "constant") {
      allow({"value"});
      fn = std::make_shared<ConstantFunction>(scalar(cur, need("value"), "value"), axes);
    } else {
      cur.fail("unknown function family '" + family.text + "'", family.column);
    }
    const FunctionId id = m.graph.add_function(scope, fn, name.text);
    m.function_names[id] = name.text;
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    cur.fail(e.what(), name.column);
  }
}

}  // namespace detail

inline Model read_model(std::istream& in, const std::string& source = "<model>") {
  Model m;
  enum class Section { None, Variables, Functions } section = Section::None;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = detail::strip_comment(raw);
    if (detail::blank(text)) continue;
    detail::Cursor cur(source, line, text);
    if (cur.peek() == '[') {
      cur.expect('[');
      const detail::Token t = cur.word();
      cur.expect(']');
      if (!cur.done()) cur.fail("unexpected input after section header");
      if (t.text == "variables") section = Section::Variables;
      else if (t.text == "functions") section = Section::Functions;
      else cur.fail("unknown section '" + t.text + "'", t.column);
      continue;
    }
    switch (section) {
      case Section::None: cur.fail("statement outside a [variables] or [functions] section");
      case Section::Variables: detail::parse_variable(cur, m); break;
      case Section::Functions: detail::parse_function(cur, m); break;
    }
  }
  if (m.graph.variable_count() == 0) throw ParseError(source, line + 1, 1, "model declares no variables");
  return m;
}

inline Model read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open file");
  return read_model(in, path);
}

/// Evidence file: one `name = value` per line; `#` starts a comment.
inline Evidence read_evidence(std::istream& in, const CdnGraph& g, const std::string& source = "<evidence>") {
  Evidence ev;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = detail::strip_comment(raw);
    if (detail::blank(text)) continue;
    detail::Cursor cur(source, line, text);
    const detail::Token name = cur.word();
    cur.expect('=');
    const double value = cur.number();
    if (!cur.done()) cur.fail("unexpected trailing input");
    VariableId id{};
    try {
      id = g.id_of(name.text);
    } catch (const Error&) {
      cur.fail("unknown variable '" + name.text + "'", name.column);
    }
    if (!g.variable(id).domain.contains(value)) cur.fail("value outside the domain of '" + name.text + "'", name.column);
    if (!ev.emplace(id, value).second) cur.fail("variable '" + name.text + "' observed twice", name.column);
  }
  return ev;
}

inline Evidence read_evidence_file(const std::string& path, const CdnGraph& g) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open file");
  return read_evidence(in, g, path);
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Columns: support, mu, lambda, conditional CDF (mu normalized).
inline void write_inference_table(std::ostream& out, const InferenceResult& r) {
  out << "# support\tmu\tlambda\tcdf\n";
  for (std::size_t i = 0; i < r.support.size(); ++i) {
    out << format_double(r.support[i]) << '\t' << format_double(r.mu[i]) << '\t' << format_double(r.lambda[i]) << '\t'
        << format_double(i < r.conditional_cdf.size() ? r.conditional_cdf[i] : 0.0) << '\n';
  }
}

}  // namespace cdn::io
