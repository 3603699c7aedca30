#pragma once

// Social graph ingestion and the per-agent structure matrices used by the
// opinion game: agent Laplacians, the averaging drift matrix and the
// confidence-bound neighbor filter.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hkgame/errors.hpp"

namespace hkgame {

using Edge = std::pair<std::size_t, std::size_t>;

// Directional neighbor lists: entry i holds the sorted agents that agent i
// listens to. Symmetric for a SocialGraph, possibly asymmetric after
// confidence filtering with heterogeneous bounds.
using Neighborhoods = std::vector<std::vector<std::size_t>>;

inline bool is_connected(const Neighborhoods& nbrs) {
  const std::size_t n = nbrs.size();
  if (n == 0) return false;
  // Treat relations as undirected for reachability.
  std::vector<std::vector<std::size_t>> undirected(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nbrs[i]) {
      undirected[i].push_back(j);
      undirected[j].push_back(i);
    }
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t w : undirected[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == n;
}

// Undirected, connected, loop-free graph. Immutable after construction.
class SocialGraph {
 public:
  SocialGraph(std::size_t n, std::span<const Edge> edges) : n_(n), nbrs_(n) {
    if (n < 2) throw DomainError("a social graph needs at least 2 agents");
    std::set<Edge> unique;
    for (auto [a, b] : edges) {
      if (a >= n || b >= n) {
        throw IndexError("edge (" + std::to_string(a) + ", " +
                         std::to_string(b) + ") out of range for n=" +
                         std::to_string(n));
      }
      if (a == b) throw SelfLoopError(a);
      unique.insert({std::min(a, b), std::max(a, b)});
    }
    edges_.assign(unique.begin(), unique.end());
    for (auto [a, b] : edges_) {
      nbrs_[a].push_back(b);
      nbrs_[b].push_back(a);
    }
    for (auto& list : nbrs_) std::sort(list.begin(), list.end());
    if (!is_connected(nbrs_)) {
      throw DisconnectedError("social graph with " + std::to_string(n) +
                              " agents is not connected");
    }
  }

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const {
    return nbrs_.at(i);
  }
  std::size_t degree(std::size_t i) const { return nbrs_.at(i).size(); }
  const Neighborhoods& neighborhoods() const { return nbrs_; }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;  // (i, j) with i < j, sorted
  Neighborhoods nbrs_;
};

// Parses "i j" lines (0-based). '#' starts a comment; blank lines are skipped.
inline SocialGraph load_edge_list(std::string_view text) {
  std::vector<Edge> edges;
  std::size_t max_index = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{}
                                         : text.substr(eol + 1);
    if (const std::size_t hash = line.find('#');
        hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() &&
             (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) {
        ++pos;
      }
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' &&
             line[pos] != '\r') {
        ++pos;
      }
      if (pos > start) tokens.push_back(line.substr(start, pos - start));
    }
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw ParseError(line_no, "expected two agent indices, got " +
                                    std::to_string(tokens.size()) + " tokens");
    }

    std::array<std::size_t, 2> ends{};
    for (int k = 0; k < 2; ++k) {
      const auto tok = tokens[k];
      const auto [ptr, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), ends[k]);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ParseError(line_no,
                         "not a non-negative integer: '" + std::string(tok) +
                             "'");
      }
    }
    if (ends[0] == ends[1]) throw SelfLoopError(ends[0]);
    max_index = std::max({max_index, ends[0], ends[1]});
    edges.emplace_back(ends[0], ends[1]);
  }
  if (edges.empty()) throw ParseError(line_no, "edge list contains no edges");
  return SocialGraph(max_index + 1, edges);
}

// Zachary's karate club (34 members, 78 friendships), 0-based labels.
inline SocialGraph zachary() {
  static constexpr std::array<std::array<int, 2>, 78> kEdges{{
      {1, 2},   {1, 3},   {1, 4},   {1, 5},   {1, 6},   {1, 7},   {1, 8},
      {1, 9},   {1, 11},  {1, 12},  {1, 13},  {1, 14},  {1, 18},  {1, 20},
      {1, 22},  {1, 32},  {2, 3},   {2, 4},   {2, 8},   {2, 14},  {2, 18},
      {2, 20},  {2, 22},  {2, 31},  {3, 4},   {3, 8},   {3, 9},   {3, 10},
      {3, 14},  {3, 28},  {3, 29},  {3, 33},  {4, 8},   {4, 13},  {4, 14},
      {5, 7},   {5, 11},  {6, 7},   {6, 11},  {6, 17},  {7, 17},  {9, 31},
      {9, 33},  {9, 34},  {10, 34}, {14, 34}, {15, 33}, {15, 34}, {16, 33},
      {16, 34}, {19, 33}, {19, 34}, {20, 34}, {21, 33}, {21, 34}, {23, 33},
      {23, 34}, {24, 26}, {24, 28}, {24, 30}, {24, 33}, {24, 34}, {25, 26},
      {25, 28}, {25, 32}, {26, 32}, {27, 30}, {27, 34}, {28, 34}, {29, 32},
      {29, 34}, {30, 33}, {30, 34}, {31, 33}, {31, 34}, {32, 33}, {32, 34},
      {33, 34},
  }};
  std::vector<Edge> edges;
  edges.reserve(kEdges.size());
  for (const auto& e : kEdges) {
    edges.emplace_back(static_cast<std::size_t>(e[0] - 1),
                       static_cast<std::size_t>(e[1] - 1));
  }
  return SocialGraph(34, edges);
}

struct AgentStructure {
  Eigen::MatrixXd laplacian;
  std::size_t degree = 0;
};

// Edge Laplacian of the star centred at agent i:
//   L_i = sum_{j in N_i} (e_i - e_j)(e_i - e_j)^T,
// so that x^T L_i x = sum_{j in N_i} (x_i - x_j)^2.
inline AgentStructure agent_laplacian(const Neighborhoods& nbrs,
                                      std::size_t i) {
  const std::size_t n = nbrs.size();
  if (i >= n) {
    throw IndexError("agent " + std::to_string(i) + " out of range for n=" +
                     std::to_string(n));
  }
  AgentStructure out;
  out.laplacian = Eigen::MatrixXd::Zero(n, n);
  out.degree = nbrs[i].size();
  const auto ii = static_cast<Eigen::Index>(i);
  for (std::size_t j : nbrs[i]) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.laplacian(ii, ii) += 1.0;
    out.laplacian(jj, jj) += 1.0;
    out.laplacian(ii, jj) -= 1.0;
    out.laplacian(jj, ii) -= 1.0;
  }
  return out;
}

inline AgentStructure agent_laplacian(const SocialGraph& g, std::size_t i) {
  return agent_laplacian(g.neighborhoods(), i);
}

// Row i: -1 on the diagonal, 1/|N_i| on each listened-to neighbor.
inline Eigen::MatrixXd dynamics_matrix(const Neighborhoods& nbrs) {
  const auto n = static_cast<Eigen::Index>(nbrs.size());
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = nbrs[static_cast<std::size_t>(i)];
    lambda(i, i) = -1.0;
    if (row.empty()) continue;
    const double w = 1.0 / static_cast<double>(row.size());
    for (std::size_t j : row) lambda(i, static_cast<Eigen::Index>(j)) += w;
  }
  return lambda;
}

inline Eigen::MatrixXd dynamics_matrix(const SocialGraph& g) {
  return dynamics_matrix(g.neighborhoods());
}

enum class NeighborMode { kFixed, kComplete, kSecondNeighborhood };

// Absolute slack on the bound test, so that opinion grids such as
// -1 + 0.06 i are not split by last-bit rounding.
inline constexpr double kConfidenceSlack = 1e-12;

// Candidate sets per mode, then keep j iff |x_i - x_j| <= eps_i.
// Throws EmptyNeighborhoodError for the first agent left with nobody.
inline Neighborhoods confidence_filter(const SocialGraph& g,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& eps,
                                       NeighborMode mode, double time = 0.0) {
  const std::size_t n = g.size();
  if (static_cast<std::size_t>(x.size()) != n ||
      static_cast<std::size_t>(eps.size()) != n) {
    throw DomainError("opinion and bound vectors must have one entry per agent");
  }
  for (Eigen::Index i = 0; i < eps.size(); ++i) {
    if (!(eps(i) > 0.0)) throw DomainError("confidence bounds must be > 0");
  }

  Neighborhoods out(n);
  std::vector<bool> candidate(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(candidate.begin(), candidate.end(), false);
    switch (mode) {
      case NeighborMode::kFixed:
        for (std::size_t j : g.neighbors(i)) candidate[j] = true;
        break;
      case NeighborMode::kComplete:
        std::fill(candidate.begin(), candidate.end(), true);
        break;
      case NeighborMode::kSecondNeighborhood:
        for (std::size_t j : g.neighbors(i)) {
          candidate[j] = true;
          for (std::size_t k : g.neighbors(j)) candidate[k] = true;
        }
        break;
    }
    candidate[i] = false;

    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (!candidate[j]) continue;
      const double gap = std::abs(x(ii) - x(static_cast<Eigen::Index>(j)));
      if (gap <= eps(ii) + kConfidenceSlack) out[i].push_back(j);
    }
    if (out[i].empty()) throw EmptyNeighborhoodError(i, time);
  }
  return out;
}

inline Neighborhoods confidence_filter(const SocialGraph& g,
                                       const Eigen::VectorXd& x, double eps,
                                       NeighborMode mode, double time = 0.0) {
  return confidence_filter(
      g, x, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), eps),
      mode, time);
}

}  // namespace hkgame
