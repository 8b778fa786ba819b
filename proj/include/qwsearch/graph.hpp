#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qwsearch/error.hpp"

namespace qws {

using Edge = std::pair<int, int>;

/// Which builder produced a graph. Decides the default coupling.
enum class GraphKind { complete, star_central, star_external, generic };

inline const char* to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::complete: return "complete";
    case GraphKind::star_central: return "star-central";
    case GraphKind::star_external: return "star-external";
    case GraphKind::generic: return "edge-list";
  }
  return "?";
}

/// Simple undirected connected graph with a marked target node.
///
/// Nodes are 0-based. Edges are stored canonically as (i, j) with i < j in
/// the order they were supplied; that order is the link enumeration used by
/// the noise model. Immutable after construction.
class Graph {
 public:
  Graph(int n, std::vector<Edge> edges, int target, GraphKind kind = GraphKind::generic)
      : n_(n), edges_(std::move(edges)), target_(target), kind_(kind) {
    if (n_ < 2) throw ConfigError("invalid graph order " + std::to_string(n_) + " (need n >= 2)");
    check_target(target_);
    std::set<Edge> seen;
    for (auto& e : edges_) {
      if (e.first > e.second) std::swap(e.first, e.second);
      if (e.first < 0 || e.second >= n_)
        throw ConfigError("edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                          ") has an endpoint outside [0, " + std::to_string(n_) + ")");
      if (e.first == e.second) throw ConfigError("self-loop on node " + std::to_string(e.first));
      if (!seen.insert(e).second)
        throw ConfigError("duplicate edge (" + std::to_string(e.first) + "," +
                          std::to_string(e.second) + ")");
    }
    degree_.assign(static_cast<std::size_t>(n_), 0);
    neighbours_.resize(static_cast<std::size_t>(n_));
    for (std::size_t l = 0; l < edges_.size(); ++l) {
      auto [i, j] = edges_[l];
      ++degree_[i];
      ++degree_[j];
      neighbours_[i].push_back(j);
      neighbours_[j].push_back(i);
    }
    if (!connected()) throw ConfigError("graph is not connected");
  }

  int order() const noexcept { return n_; }
  int target() const noexcept { return target_; }
  GraphKind kind() const noexcept { return kind_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t link_count() const noexcept { return edges_.size(); }
  int degree(int node) const { return degree_.at(static_cast<std::size_t>(node)); }

  /// Same graph, different marked node. A star graph changes its kind when
  /// the target moves between the centre and the leaves.
  Graph with_target(int target) const {
    check_target(target);
    GraphKind kind = kind_;
    if (kind_ == GraphKind::star_central || kind_ == GraphKind::star_external)
      kind = target == 0 ? GraphKind::star_central : GraphKind::star_external;
    return Graph(n_, edges_, target, kind);
  }

  Eigen::MatrixXd adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (auto [i, j] : edges_) a(i, j) = a(j, i) = 1.0;
    return a;
  }

  Eigen::MatrixXd degree_matrix() const {
    Eigen::VectorXd d(n_);
    for (int i = 0; i < n_; ++i) d(i) = degree_[i];
    return d.asDiagonal();
  }

 private:
  void check_target(int target) const {
    if (target < 0 || target >= n_)
      throw ConfigError("target " + std::to_string(target) + " outside [0, " +
                        std::to_string(n_) + ")");
  }

  bool connected() const {
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : neighbours_[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          stack.push_back(v);
        }
      }
    }
    return reached == n_;
  }

  int n_;
  std::vector<Edge> edges_;
  int target_;
  GraphKind kind_;
  std::vector<int> degree_;
  std::vector<std::vector<int>> neighbours_;
};

/// K_n with every pair linked, enumerated lexicographically.
inline Graph complete_graph(int n, int target = 0) {
  if (n < 2) throw ConfigError("invalid order " + std::to_string(n) + " for complete graph (need n >= 2)");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph(n, std::move(edges), target, GraphKind::complete);
}

enum class StarTarget { central, external };

/// Star with centre 0 and leaves 1..n-1. An external target is node 1.
inline Graph star_graph(int n, StarTarget target) {
  if (n < 3) throw ConfigError("invalid order " + std::to_string(n) + " for star graph (need n >= 3)");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  for (int j = 1; j < n; ++j) edges.emplace_back(0, j);
  return target == StarTarget::central
             ? Graph(n, std::move(edges), 0, GraphKind::star_central)
             : Graph(n, std::move(edges), 1, GraphKind::star_external);
}

/// L = D - A.
inline Eigen::MatrixXd laplacian(const Graph& g) {
  const int n = g.order();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : g.edges()) {
    l(i, j) = l(j, i) = -1.0;
    l(i, i) += 1.0;
    l(j, j) += 1.0;
  }
  return l;
}

/// Parses the edge-list text format: a header line `n target` followed by
/// one `i j` pair per line (0-based). Blank lines and `#` comments are skipped.
inline Graph parse_edge_list(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_record = [&](std::istringstream& record) {
    while (std::getline(in, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      record.clear();
      record.str(line);
      return true;
    }
    return false;
  };

  std::istringstream record;
  if (!next_record(record)) throw ConfigError("edge list: missing `n target` header");
  int n = 0, target = 0;
  if (!(record >> n >> target))
    throw ConfigError("edge list line " + std::to_string(line_no) + ": expected `n target`");

  std::vector<Edge> edges;
  while (next_record(record)) {
    int i = 0, j = 0;
    std::string extra;
    if (!(record >> i >> j) || (record >> extra))
      throw ConfigError("edge list line " + std::to_string(line_no) + ": expected `i j`");
    edges.emplace_back(i, j);
  }
  return Graph(n, std::move(edges), target, GraphKind::generic);
}

inline Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return parse_edge_list(in);
}

}  // namespace qws
