#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cdn/graph.hpp"

namespace cdn {

/// Evidence: observed variables and their values.
using Evidence = std::map<VariableId, double>;

/// (mu, lambda) sampled over a support: a single evidence point or the
/// full support of the variable. Stored values are scaled by 2^-exponent.
struct MessagePair {
  VariableId variable;
  bool point = false;
  std::vector<double> support;
  std::vector<double> mu;
  std::vector<double> lambda;
  int exponent = 0;

  double mu_at(std::size_t i) const { return std::ldexp(mu[i], exponent); }
  double lambda_at(std::size_t i) const { return std::ldexp(lambda[i], exponent); }
};

/// Bookkeeping for one function-to-variable message.
struct MessageStats {
  FunctionId function;
  VariableId target;
  std::size_t degree = 0;
  std::size_t values = 0;  // support points the message was evaluated at
  std::size_t terms = 0;   // product-rule terms expanded, over all values
};

struct DspOptions {
  /// Messages whose largest entry leaves [2^-min_exp, 2^max_exp] are
  /// rescaled by an exact power of two.
  int rescale_exponent = 512;
  double clamp_tolerance = 1e-12;
};

struct DspDiagnostics {
  std::size_t clamped = 0;      // tiny negatives set to 0
  std::size_t negative = 0;     // negatives beyond tolerance, left in place
  std::vector<std::string> notes;
};

/// Variable-side combination of incoming messages that all live on the same
/// support. Continuous variables use the product rule; discrete variables
/// take the backward difference of the product exactly:
///   prod mu_j - prod (mu_j - lambda_j).
inline MessagePair combine_at_variable(VariableId v, bool discrete, bool point, std::vector<double> support,
                                       const std::vector<const MessagePair*>& incoming) {
  MessagePair out;
  out.variable = v;
  out.point = point;
  out.support = std::move(support);
  const std::size_t n = out.support.size();
  out.mu.assign(n, 1.0);
  out.lambda.assign(n, 0.0);
  for (const MessagePair* m : incoming) {
    if (m->mu.size() != n) throw Error(ErrorCode::ScheduleError, "incoming message support size mismatch");
    out.exponent += m->exponent;
  }
  if (incoming.empty()) return out;
  for (std::size_t i = 0; i < n; ++i) {
    if (discrete) {
      double all = 1.0, lower = 1.0;
      for (const MessagePair* m : incoming) {
        all *= m->mu[i];
        lower *= m->mu[i] - m->lambda[i];
      }
      out.mu[i] = all;
      out.lambda[i] = all - lower;
    } else {
      // sum_j lambda_j prod_{j' != j} mu_j', via running prefix products
      double prefix = 1.0, deriv = 0.0;
      for (const MessagePair* m : incoming) {
        deriv = deriv * m->mu[i] + prefix * m->lambda[i];
        prefix *= m->mu[i];
      }
      out.mu[i] = prefix;
      out.lambda[i] = deriv;
    }
  }
  return out;
}

/// Function-side message to scope position `target`. Every other position
/// must carry a single-point message. For R = scope minus target,
///   mu(x)     = sum_{A subset R} d_A phi(x, .) prod_{j in A} w_j prod_{j in R\A} lambda_j
///   lambda(x) = same with d_{A + target}
/// where w_j = mu_j for continuous j and mu_j - lambda_j (the message one
/// level down) for discrete j.
inline MessagePair function_to_variable_message(const CumulativeFunction& fn, std::size_t target, VariableId target_id,
                                                bool point, std::vector<double> support,
                                                const std::vector<const MessagePair*>& incoming, MessageStats* stats,
                                                DspDiagnostics* diag = nullptr, const DspOptions& opt = {}) {
  const std::size_t d = fn.arity();
  if (incoming.size() != d) throw Error(ErrorCode::ScheduleError, "need one incoming slot per scope position");
  if (d - 1 > 20) throw Error(ErrorCode::DegreeTooLarge, "function degree above 21");
  Subset rest = 0;
  int exponent = 0;
  std::vector<double> z(d);
  std::vector<double> w_in(d), w_out(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (j == target) continue;
    const MessagePair* m = incoming[j];
    if (!m) throw Error(ErrorCode::ScheduleError, "missing incoming message at position " + std::to_string(j));
    if (!m->point) throw Error(ErrorCode::UnobservedVariable, "non-target scope variables must be observed");
    rest |= Subset{1} << j;
    z[j] = m->support[0];
    w_in[j] = fn.axis(j).is_discrete() ? m->mu[0] - m->lambda[0] : m->mu[0];
    w_out[j] = m->lambda[0];
    exponent += m->exponent;
  }
  const Subset self = Subset{1} << target;

  MessagePair out;
  out.variable = target_id;
  out.point = point;
  out.support = std::move(support);
  out.exponent = exponent;
  const std::size_t n = out.support.size();
  out.mu.assign(n, 0.0);
  out.lambda.assign(n, 0.0);
  std::size_t terms = 0;
  for (std::size_t i = 0; i < n; ++i) {
    z[target] = out.support[i];
    double mu = 0.0, lambda = 0.0;
    for_each_subset(rest, [&](Subset a) {
      ++terms;
      double w = 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        if (subset_contains(rest, j)) w *= subset_contains(a, j) ? w_in[j] : w_out[j];
      }
      if (w == 0.0) return;  // counted, but nothing to evaluate
      mu += w * fn.mixed_diff(a, z);
      lambda += w * fn.mixed_diff(a | self, z);
    });
    out.mu[i] = mu;
    out.lambda[i] = lambda;
  }

  double largest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double* v : {&out.mu[i], &out.lambda[i]}) {
      if (*v < 0.0) {
        if (*v >= -opt.clamp_tolerance * std::max(1.0, largest)) {
          *v = 0.0;
          if (diag) ++diag->clamped;
        } else if (diag) {
          ++diag->negative;
        }
      }
      largest = std::max(largest, std::abs(*v));
    }
  }
  if (largest > 0.0) {
    int e = 0;
    std::frexp(largest, &e);
    if (e > opt.rescale_exponent || e < -opt.rescale_exponent) {
      for (std::size_t i = 0; i < n; ++i) {
        out.mu[i] = std::ldexp(out.mu[i], -e);
        out.lambda[i] = std::ldexp(out.lambda[i], -e);
      }
      out.exponent += e;
    }
  }
  if (stats) {
    stats->function = FunctionId{};
    stats->target = target_id;
    stats->degree = d;
    stats->values = n;
    stats->terms = terms;
  }
  return out;
}

struct InferenceResult {
  VariableId root;
  bool root_observed = false;
  std::optional<double> root_pdf;
  std::vector<double> support;
  std::vector<double> mu;      // d_{x_s} F as a function of the root, at the support
  std::vector<double> lambda;  // its derivative / backward difference in the root
  std::vector<double> conditional_cdf;
  /// Messages into the root, one per neighboring function.
  std::map<FunctionId, MessagePair> root_incoming;
  std::vector<MessageStats> messages;
  std::map<FunctionId, std::size_t> term_counts;
  DspDiagnostics diagnostics;
};

/// Memoized message computation over a forest whose non-target variables
/// are all observed.
class DspEngine {
 public:
  DspEngine(const CdnGraph& g, Evidence evidence, DspOptions opt = {})
      : g_(g), evidence_(std::move(evidence)), opt_(opt) {
    for (const auto& [v, value] : evidence_) {
      const VariableNode& node = g_.variable(v);
      if (!node.domain.contains(value)) {
        throw Error(ErrorCode::DomainError, "evidence for '" + node.name + "' lies outside its domain");
      }
    }
  }

  bool observed(VariableId v) const { return evidence_.count(v) > 0; }

  /// Message from function f to variable v, over v's full support when
  /// `full`, else at v's evidence value.
  const MessagePair& to_variable(FunctionId f, VariableId v, bool full) {
    const auto key = std::make_tuple(f, v, full);
    if (auto it = fv_.find(key); it != fv_.end()) return it->second;
    const FunctionNode& node = g_.function(f);
    std::vector<const MessagePair*> in(node.scope.size(), nullptr);
    std::size_t target = node.scope.size();
    for (std::size_t j = 0; j < node.scope.size(); ++j) {
      if (node.scope[j] == v) target = j;
      else in[j] = &to_function(node.scope[j], f);
    }
    if (target == node.scope.size()) throw Error(ErrorCode::ScheduleError, "variable not in function scope");
    MessageStats stats;
    MessagePair m = function_to_variable_message(*node.function, target, v, !full, support(v, full), in, &stats,
                                                 &diagnostics_, opt_);
    stats.function = f;
    messages_.push_back(stats);
    return fv_.emplace(key, std::move(m)).first->second;
  }

  /// Message from an observed variable v to function f, at v's evidence.
  const MessagePair& to_function(VariableId v, FunctionId f) {
    const auto key = std::make_pair(v, f);
    if (auto it = vf_.find(key); it != vf_.end()) return it->second;
    if (!observed(v)) {
      throw Error(ErrorCode::UnobservedVariable,
                  "'" + g_.variable(v).name + "' must be observed or marginalized before propagation");
    }
    std::vector<const MessagePair*> in;
    for (FunctionId h : g_.neighbors(v)) {
      if (h != f) in.push_back(&to_variable(h, v, false));
    }
    MessagePair m = combine_at_variable(v, g_.variable(v).domain.is_discrete(), true, support(v, false), in);
    return vf_.emplace(key, std::move(m)).first->second;
  }

  /// Product of every incoming message at v.
  MessagePair at_variable(VariableId v, bool full, std::map<FunctionId, MessagePair>* incoming = nullptr) {
    std::vector<const MessagePair*> in;
    for (FunctionId h : g_.neighbors(v)) {
      const MessagePair& m = to_variable(h, v, full);
      in.push_back(&m);
      if (incoming) incoming->emplace(h, m);
    }
    return combine_at_variable(v, g_.variable(v).domain.is_discrete(), !full, support(v, full), in);
  }

  std::vector<double> support(VariableId v, bool full) const {
    if (full) return g_.variable(v).domain.support();
    auto it = evidence_.find(v);
    if (it == evidence_.end()) throw Error(ErrorCode::UnobservedVariable, "'" + g_.variable(v).name + "' is unobserved");
    return {it->second};
  }

  const std::vector<MessageStats>& messages() const { return messages_; }
  const DspDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  const CdnGraph& g_;
  Evidence evidence_;
  DspOptions opt_;
  std::map<std::tuple<FunctionId, VariableId, bool>, MessagePair> fv_;
  std::map<std::pair<VariableId, FunctionId>, MessagePair> vf_;
  std::vector<MessageStats> messages_;
  DspDiagnostics diagnostics_;
};

namespace detail {

inline StructureReport require_forest(const CdnGraph& g) {
  if (g.variable_count() == 0) throw Error(ErrorCode::EmptyGraph, "graph has no variables");
  StructureReport s = validate_structure(g);
  if (!s.all_components_trees()) {
    std::string path;
    for (const auto& n : s.cycle) path += (path.empty() ? "" : " - ") + n;
    throw Error(ErrorCode::NotATree, "cycle: " + path);
  }
  return s;
}

}  // namespace detail

/// Runs DSP toward `root`. Every other variable must be observed; use
/// conditional_cdf to marginalize unobserved variables first. With the
/// root observed the result carries the joint PDF at the evidence; with
/// the root unobserved it carries the conditional CDF of the root.
inline InferenceResult propagate(const CdnGraph& g, const Evidence& evidence, VariableId root,
                                 const DspOptions& opt = {}) {
  const StructureReport s = detail::require_forest(g);
  g.variable(root);
  for (const auto& [v, node] : g.variables()) {
    if (v != root && !evidence.count(v)) {
      throw Error(ErrorCode::UnobservedVariable, "'" + node.name + "' is neither observed nor the query");
    }
  }
  DspEngine engine(g, evidence, opt);
  InferenceResult r;
  r.root = root;
  r.root_observed = engine.observed(root);

  // Other components contribute their own joint densities as constants.
  double others = g.constant();
  int others_exp = 0;
  for (const ComponentReport& c : s.components) {
    if (std::find(c.variables.begin(), c.variables.end(), root) != c.variables.end()) continue;
    const MessagePair m = engine.at_variable(c.variables.front(), false);
    others *= m.lambda[0];
    others_exp += m.exponent;
  }

  const MessagePair top = engine.at_variable(root, !r.root_observed, &r.root_incoming);
  const int exp = top.exponent + others_exp;
  r.support = top.support;
  for (std::size_t i = 0; i < top.mu.size(); ++i) {
    r.mu.push_back(std::ldexp(top.mu[i] * others, exp));
    r.lambda.push_back(std::ldexp(top.lambda[i] * others, exp));
  }
  if (r.root_observed) {
    r.root_pdf = r.lambda[0];
  } else {
    const double norm = top.mu.back() * others;
    if (!(norm > 0.0)) throw Error(ErrorCode::ZeroEvidenceDensity, "evidence has zero density under the model");
    for (double m : top.mu) r.conditional_cdf.push_back(m * others / norm);
  }
  r.messages = engine.messages();
  for (const MessageStats& m : r.messages) r.term_counts[m.function] += m.terms;
  r.diagnostics = engine.diagnostics();
  return r;
}

inline void check_evidence(const CdnGraph& g, const Evidence& evidence) {
  for (const auto& [v, value] : evidence) {
    const VariableNode& node = g.variable(v);
    if (!node.domain.contains(value)) {
      throw Error(ErrorCode::DomainError, "evidence for '" + node.name + "' lies outside its domain");
    }
  }
}

/// F(x_query | evidence) over the query support; unobserved variables other
/// than the query are marginalized first. Empty evidence gives the marginal.
inline InferenceResult conditional_cdf(const CdnGraph& g, VariableId query, const Evidence& evidence,
                                       const DspOptions& opt = {}) {
  g.variable(query);
  check_evidence(g, evidence);
  if (evidence.count(query)) throw Error(ErrorCode::InvalidQuery, "query variable is observed");
  std::set<VariableId> drop;
  for (const auto& [v, node] : g.variables()) {
    if (v != query && !evidence.count(v)) drop.insert(v);
  }
  if (drop.empty()) return propagate(g, evidence, query, opt);
  const CdnGraph reduced = marginalize_unobserved(g, drop);
  return propagate(reduced, evidence, query, opt);
}

inline InferenceResult marginal_cdf(const CdnGraph& g, VariableId query, const DspOptions& opt = {}) {
  return conditional_cdf(g, query, {}, opt);
}

/// Joint PDF at a fully observed assignment, rooted at `root` (or the first
/// variable).
inline double joint_pdf(const CdnGraph& g, const Evidence& evidence, std::optional<VariableId> root = std::nullopt,
                        const DspOptions& opt = {}) {
  const VariableId r = root ? *root : g.variables().begin()->first;
  return *propagate(g, evidence, r, opt).root_pdf;
}

struct VariableConditional {
  std::vector<double> support;
  std::vector<double> mu;
  std::vector<double> cdf;
};

/// F(x_i | every other variable) for each variable of a fully observed
/// forest, sharing messages across targets.
inline std::map<VariableId, VariableConditional> per_variable_conditionals(const CdnGraph& g, const Evidence& evidence,
                                                                           const DspOptions& opt = {}) {
  detail::require_forest(g);
  for (const auto& [v, node] : g.variables()) {
    if (!evidence.count(v)) throw Error(ErrorCode::UnobservedVariable, "'" + node.name + "' is unobserved");
  }
  DspEngine engine(g, evidence, opt);
  std::map<VariableId, VariableConditional> out;
  for (const auto& [v, node] : g.variables()) {
    const MessagePair m = engine.at_variable(v, true);
    VariableConditional c;
    c.support = m.support;
    const double norm = m.mu.back();
    if (!(norm > 0.0)) throw Error(ErrorCode::ZeroEvidenceDensity, "zero density for '" + node.name + "'");
    for (double x : m.mu) {
      c.mu.push_back(std::ldexp(x, m.exponent));
      c.cdf.push_back(x / norm);
    }
    out.emplace(v, std::move(c));
  }
  return out;
}

}  // namespace cdn
