#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cdn/domain.hpp"
#include "cdn/error.hpp"
#include "cdn/function.hpp"

namespace cdn {

struct VariableId {
  std::uint32_t value = 0;
  auto operator<=>(const VariableId&) const = default;
};

struct FunctionId {
  std::uint32_t value = 0;
  auto operator<=>(const FunctionId&) const = default;
};

struct VariableNode {
  VariableId id;
  std::string name;
  VariableDomain domain;
};

struct FunctionNode {
  FunctionId id;
  std::vector<VariableId> scope;
  FunctionPtr function;
  std::string name;  // optional, used in reports
};

/// Assignment of values to variables.
using Assignment = std::map<VariableId, double>;

/// Bipartite graph of variables and cumulative functions. The joint CDF is
/// constant() times the product of all function values. Ids stay stable
/// when variables are marginalized away.
class CdnGraph {
 public:
  VariableId add_variable(const std::string& name, VariableDomain domain) {
    if (by_name_.count(name)) throw Error(ErrorCode::DuplicateName, "variable '" + name + "' already exists");
    const VariableId id{next_variable_++};
    variables_.emplace(id, VariableNode{id, name, std::move(domain)});
    by_name_.emplace(name, id);
    return id;
  }

  FunctionId add_function(const std::vector<VariableId>& scope, FunctionPtr fn, std::string name = {}) {
    if (!fn) throw Error(ErrorCode::InvalidParams, "null function");
    if (scope.empty()) throw Error(ErrorCode::ArityMismatch, "function scope is empty");
    for (std::size_t i = 0; i < scope.size(); ++i) {
      if (!variables_.count(scope[i])) {
        throw Error(ErrorCode::UnknownVariable, "variable id " + std::to_string(scope[i].value) + " is not in the graph");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (scope[j] == scope[i]) throw Error(ErrorCode::InvalidParams, "duplicate variable in scope");
      }
    }
    if (fn->arity() != scope.size()) {
      throw Error(ErrorCode::ArityMismatch, "function of arity " + std::to_string(fn->arity()) + " given scope of size " +
                                                std::to_string(scope.size()));
    }
    for (std::size_t i = 0; i < scope.size(); ++i) {
      const VariableNode& v = variables_.at(scope[i]);
      if (!(fn->axis(i) == Axis::of(v.domain))) {
        throw Error(ErrorCode::DomainError, "axis " + std::to_string(i) + " does not match the domain of '" + v.name + "'");
      }
    }
    const FunctionId id{next_function_++};
    functions_.emplace(id, FunctionNode{id, scope, std::move(fn), std::move(name)});
    for (VariableId v : scope) adjacency_[v].push_back(id);
    return id;
  }

  /// Multiplies the graph constant; used for functions whose arguments were
  /// all marginalized.
  void scale_constant(double factor) { constant_ *= factor; }
  double constant() const { return constant_; }

  const std::map<VariableId, VariableNode>& variables() const { return variables_; }
  const std::map<FunctionId, FunctionNode>& functions() const { return functions_; }
  std::size_t variable_count() const { return variables_.size(); }
  std::size_t function_count() const { return functions_.size(); }
  bool empty() const { return variables_.empty() && functions_.empty(); }

  const VariableNode& variable(VariableId id) const {
    auto it = variables_.find(id);
    if (it == variables_.end()) throw Error(ErrorCode::UnknownVariable, "variable id " + std::to_string(id.value));
    return it->second;
  }
  const FunctionNode& function(FunctionId id) const {
    auto it = functions_.find(id);
    if (it == functions_.end()) throw Error(ErrorCode::InvalidQuery, "function id " + std::to_string(id.value));
    return it->second;
  }
  bool has_variable(VariableId id) const { return variables_.count(id) > 0; }

  VariableId id_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw Error(ErrorCode::UnknownVariable, "no variable named '" + name + "'");
    return it->second;
  }

  /// Neighboring functions of a variable, in id order.
  const std::vector<FunctionId>& neighbors(VariableId v) const {
    static const std::vector<FunctionId> none;
    auto it = adjacency_.find(v);
    return it == adjacency_.end() ? none : it->second;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [id, f] : functions_) n += f.scope.size();
    return n;
  }

  /// F(x) for a complete assignment.
  double evaluate(const Assignment& x) const {
    double product = constant_;
    std::vector<double> args;
    for (const auto& [id, f] : functions_) {
      args.clear();
      for (VariableId v : f.scope) {
        auto it = x.find(v);
        if (it == x.end()) throw Error(ErrorCode::UnobservedVariable, "'" + variables_.at(v).name + "' is unassigned");
        args.push_back(it->second);
      }
      product *= f.function->evaluate(args);
    }
    return product;
  }

  /// Copy of this graph without the functions, for rebuilding.
  CdnGraph skeleton() const {
    CdnGraph g;
    g.next_variable_ = next_variable_;
    g.next_function_ = next_function_;
    g.constant_ = constant_;
    return g;
  }

  /// Inserts a variable with a given id (used when rebuilding reduced graphs).
  void insert_variable(const VariableNode& node) {
    if (by_name_.count(node.name) || variables_.count(node.id)) {
      throw Error(ErrorCode::DuplicateName, "variable '" + node.name + "' already exists");
    }
    variables_.emplace(node.id, node);
    by_name_.emplace(node.name, node.id);
    next_variable_ = std::max(next_variable_, node.id.value + 1);
  }

  /// Inserts a function node under a given id.
  void insert_function(FunctionId id, std::vector<VariableId> scope, FunctionPtr fn, std::string name = {}) {
    const std::uint32_t saved = next_function_;
    next_function_ = id.value;
    add_function(scope, std::move(fn), std::move(name));
    next_function_ = std::max(saved, id.value + 1);
  }

 private:
  std::map<VariableId, VariableNode> variables_;
  std::map<FunctionId, FunctionNode> functions_;
  std::map<VariableId, std::vector<FunctionId>> adjacency_;
  std::map<std::string, VariableId> by_name_;
  std::uint32_t next_variable_ = 0;
  std::uint32_t next_function_ = 0;
  double constant_ = 1.0;
};

struct ComponentReport {
  std::vector<VariableId> variables;
  std::vector<FunctionId> functions;
  std::size_t edges = 0;
  bool is_tree = false;
};

struct StructureReport {
  bool is_bipartite = true;  // holds by construction
  bool is_connected = false;
  bool is_tree = false;
  std::vector<ComponentReport> components;
  /// Node labels along one cycle, first label repeated at the end; empty if acyclic.
  std::vector<std::string> cycle;

  bool all_components_trees() const {
    return std::all_of(components.begin(), components.end(), [](const ComponentReport& c) { return c.is_tree; });
  }
};

inline StructureReport validate_structure(const CdnGraph& g) {
  StructureReport report;
  // Nodes: variables as (0, id), functions as (1, id).
  using Node = std::pair<int, std::uint32_t>;
  auto label = [&](Node n) {
    if (n.first == 0) return g.variable(VariableId{n.second}).name;
    const std::string& name = g.function(FunctionId{n.second}).name;
    return name.empty() ? "f" + std::to_string(n.second) : name;
  };
  auto neighbors = [&](Node n) {
    std::vector<Node> out;
    if (n.first == 0) {
      for (FunctionId f : g.neighbors(VariableId{n.second})) out.push_back({1, f.value});
    } else {
      for (VariableId v : g.function(FunctionId{n.second}).scope) out.push_back({0, v.value});
    }
    return out;
  };

  std::map<Node, Node> parent;
  std::set<Node> seen;
  std::vector<Node> all;
  for (const auto& [id, v] : g.variables()) all.push_back({0, id.value});
  for (const auto& [id, f] : g.functions()) all.push_back({1, id.value});

  for (Node start : all) {
    if (seen.count(start)) continue;
    ComponentReport comp;
    std::vector<std::pair<Node, Node>> stack{{start, start}};
    bool acyclic = true;
    while (!stack.empty()) {
      auto [node, from] = stack.back();
      stack.pop_back();
      if (seen.count(node)) continue;
      seen.insert(node);
      parent[node] = from;
      if (node.first == 0) comp.variables.push_back(VariableId{node.second});
      else comp.functions.push_back(FunctionId{node.second});
      bool skipped_parent_edge = false;
      for (Node next : neighbors(node)) {
        if (node.first == 1) ++comp.edges;
        if (next == from && !skipped_parent_edge && node != start) {
          skipped_parent_edge = true;
          continue;
        }
        if (seen.count(next)) {
          if (acyclic && report.cycle.empty()) {
            // walk both endpoints up to their common ancestor
            std::vector<Node> a{node}, b{next};
            while (parent[a.back()] != a.back()) a.push_back(parent[a.back()]);
            while (parent[b.back()] != b.back()) b.push_back(parent[b.back()]);
            while (a.size() > 1 && b.size() > 1 && a[a.size() - 2] == b[b.size() - 2]) {
              a.pop_back();
              b.pop_back();
            }
            for (Node n : a) report.cycle.push_back(label(n));
            for (std::size_t i = b.size() - 1; i-- > 0;) report.cycle.push_back(label(b[i]));
            report.cycle.push_back(label(node));
          }
          acyclic = false;
        } else {
          stack.push_back({next, node});
        }
      }
    }
    std::sort(comp.variables.begin(), comp.variables.end());
    std::sort(comp.functions.begin(), comp.functions.end());
    comp.is_tree = acyclic && comp.edges + 1 == comp.variables.size() + comp.functions.size();
    report.components.push_back(std::move(comp));
  }
  report.is_connected = report.components.size() == 1;
  report.is_tree = report.is_connected && report.components.front().is_tree;
  return report;
}

/// Removes `vars` by replacing every neighboring function with its limit as
/// those arguments go to their suprema. Functions left without arguments
/// are folded into the graph constant.
inline CdnGraph marginalize_unobserved(const CdnGraph& g, const std::set<VariableId>& vars) {
  for (VariableId v : vars) g.variable(v);
  CdnGraph out = g.skeleton();
  for (const auto& [id, v] : g.variables()) {
    if (!vars.count(id)) out.insert_variable(v);
  }
  for (const auto& [id, f] : g.functions()) {
    Subset pinned = 0;
    std::vector<VariableId> kept;
    for (std::size_t i = 0; i < f.scope.size(); ++i) {
      if (vars.count(f.scope[i])) pinned |= Subset{1} << i;
      else kept.push_back(f.scope[i]);
    }
    FunctionPtr reduced = f.function->pin_to_sup(pinned);
    if (kept.empty()) {
      out.scale_constant(reduced->evaluate({}));
    } else {
      out.insert_function(id, std::move(kept), std::move(reduced), f.name);
    }
  }
  return out;
}

}  // namespace cdn
