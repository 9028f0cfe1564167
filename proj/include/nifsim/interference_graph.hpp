#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nifsim/scenario.hpp"

namespace nifsim {

/// Per-node resource-element requirements d_{k,u}, indexed by node id k*U+u.
/// Also reused for actual assigned counts.
using RequirementVector = std::vector<int>;

/// Undirected interference graph over the K*U user nodes. An edge marks a
/// pair that must never be co-scheduled in the same slot.
struct InterferenceGraph {
  int K = 0;
  int U = 0;
  std::vector<std::vector<int>> adj;         // sorted neighbor lists
  std::vector<std::pair<int, int>> edges;    // i < j, sorted lexicographically

  int num_nodes() const { return K * U; }
  int cell_of(int node_id) const { return node_id / U; }
  int degree(int v) const { return static_cast<int>(adj[v].size()); }

  bool has_edge(int a, int b) const {
    if (a == b) return false;
    const auto& na = adj[a];
    return std::binary_search(na.begin(), na.end(), b);
  }

  static InterferenceGraph from_edges(int K, int U, const std::vector<std::pair<int, int>>& e) {
    InterferenceGraph g;
    g.K = K;
    g.U = U;
    g.adj.assign(K * U, {});
    for (auto [a, b] : e) {
      if (a == b) continue;  // no self-loops
      if (a > b) std::swap(a, b);
      if (b >= K * U || a < 0) throw std::invalid_argument("InterferenceGraph: node out of range");
      g.edges.emplace_back(a, b);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    for (auto [a, b] : g.edges) {
      g.adj[a].push_back(b);
      g.adj[b].push_back(a);
    }
    for (auto& row : g.adj) std::sort(row.begin(), row.end());
    return g;
  }

  /// Edge test of the ratio threshold: two nodes interfere when either one's
  /// serving beam delivers more than epsilon times the other's desired power.
  /// The reference power cancels in the ratio, so the graph is independent of
  /// the power allocation.
  static InterferenceGraph build(const NetworkScenario& s, double epsilon) {
    const int n = s.config.num_users();
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) {
      const int ci = s.cell_of(i);
      const double desired_i = s.path_loss_lin[ci][i] * s.gain_cache[i][i];
      for (int j = i + 1; j < n; ++j) {
        const int cj = s.cell_of(j);
        const double desired_j = s.path_loss_lin[cj][j] * s.gain_cache[j][j];
        const double on_i = s.path_loss_lin[cj][i] * s.gain_cache[j][i];
        const double on_j = s.path_loss_lin[ci][j] * s.gain_cache[i][j];
        if (on_i / desired_i > epsilon || on_j / desired_j > epsilon) e.emplace_back(i, j);
      }
    }
    return from_edges(s.config.K, s.config.U, e);
  }
};

/// BFS partition; components ordered by their smallest node, members sorted.
inline std::vector<std::vector<int>> connected_components(const InterferenceGraph& g) {
  const int n = g.num_nodes();
  std::vector<std::vector<int>> comps;
  std::vector<char> seen(n, 0);
  std::vector<int> queue;
  for (int start = 0; start < n; ++start) {
    if (seen[start]) continue;
    seen[start] = 1;
    queue.assign(1, start);
    std::vector<int> comp;
    while (!queue.empty()) {
      const int v = queue.back();
      queue.pop_back();
      comp.push_back(v);
      for (int w : g.adj[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

namespace detail {

constexpr std::size_t kMaxCliques = 1000000;

inline void bron_kerbosch(const InterferenceGraph& g, std::vector<int>& R, std::vector<int> P,
                          std::vector<int> X, std::vector<std::vector<int>>& out) {
  if (P.empty() && X.empty()) {
    out.push_back(R);
    if (out.size() > kMaxCliques)
      throw std::runtime_error("enumerate_maximal_cliques: clique cap exceeded");
    return;
  }
  // Pivot on the vertex of P union X with most neighbors in P.
  int pivot = -1, best = -1;
  for (const auto* set : {&P, &X}) {
    for (int v : *set) {
      int cnt = 0;
      for (int w : P)
        if (g.has_edge(v, w)) ++cnt;
      if (cnt > best) {
        best = cnt;
        pivot = v;
      }
    }
  }
  std::vector<int> candidates;
  for (int v : P)
    if (pivot < 0 || !g.has_edge(pivot, v)) candidates.push_back(v);
  for (int v : candidates) {
    std::vector<int> P2, X2;
    for (int w : P)
      if (g.has_edge(v, w)) P2.push_back(w);
    for (int w : X)
      if (g.has_edge(v, w)) X2.push_back(w);
    R.push_back(v);
    bron_kerbosch(g, R, std::move(P2), std::move(X2), out);
    R.pop_back();
    P.erase(std::find(P.begin(), P.end(), v));
    X.insert(std::lower_bound(X.begin(), X.end(), v), v);
  }
}

}  // namespace detail

/// All maximal cliques (isolated nodes count as singleton cliques), each
/// sorted, list sorted and deduplicated. Throws past 10^6 cliques.
inline std::vector<std::vector<int>> enumerate_maximal_cliques(const InterferenceGraph& g) {
  std::vector<std::vector<int>> out;
  std::vector<int> R, P(g.num_nodes()), X;
  for (int v = 0; v < g.num_nodes(); ++v) P[v] = v;
  detail::bron_kerbosch(g, R, std::move(P), std::move(X), out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Chordless-cycle counts per length 3..max_len. Each cycle is enumerated
/// once in canonical orientation: smallest node first, smaller neighbor as
/// second node.
inline std::map<int, long long> count_induced_cycles(const InterferenceGraph& g, int max_len = 8) {
  if (max_len < 3) throw std::invalid_argument("count_induced_cycles: max_len must be >= 3");
  std::map<int, long long> counts;
  for (int len = 3; len <= max_len; ++len) counts[len] = 0;

  const int n = g.num_nodes();
  std::vector<int> path;
  std::vector<char> on_path(n, 0);

  // Extends the current path (rooted at v0 = path[0]) with nodes adjacent to
  // the last node only; adjacency to v0 closes a cycle.
  std::function<void(int)> extend = [&](int v0) {
    const int last = path.back();
    for (int w : g.adj[last]) {
      if (w <= v0 || on_path[w]) continue;
      bool chord = false;
      bool closes = false;
      for (std::size_t idx = 0; idx + 1 < path.size(); ++idx) {
        if (g.has_edge(w, path[idx])) {
          if (idx == 0) {
            closes = true;
          } else {
            chord = true;
            break;
          }
        }
      }
      if (chord) continue;
      if (closes) {
        const int len = static_cast<int>(path.size()) + 1;
        if (len >= 3 && path[1] < w) {
          auto it = counts.find(len);
          if (it != counts.end()) ++it->second;
        }
        continue;  // closing node cannot be extended without creating a chord
      }
      if (static_cast<int>(path.size()) + 1 < max_len) {
        path.push_back(w);
        on_path[w] = 1;
        extend(v0);
        on_path[w] = 0;
        path.pop_back();
      }
    }
  };

  for (int v0 = 0; v0 < n; ++v0) {
    for (int v1 : g.adj[v0]) {
      if (v1 <= v0) continue;
      path.assign({v0, v1});
      on_path[v0] = on_path[v1] = 1;
      extend(v0);
      on_path[v0] = on_path[v1] = 0;
    }
  }
  return counts;
}

/// Clique-based lower bound on the unfulfilled resource-element requirements:
/// repeatedly pick a maximal clique whose summed demand exceeds N, accumulate
/// the excess and remove the clique from a residual copy. Among qualifying
/// cliques the one with the largest excess wins (ties: larger clique, then
/// lexicographic node order).
inline long long lower_bound_n0(const InterferenceGraph& g, const RequirementVector& d, int N) {
  if (static_cast<int>(d.size()) != g.num_nodes())
    throw std::invalid_argument("lower_bound_n0: requirement vector size mismatch");
  InterferenceGraph residual = g;
  std::vector<char> alive(g.num_nodes(), 1);
  long long bound = 0;
  for (;;) {
    auto cliques = enumerate_maximal_cliques(residual);
    long long best_excess = 0;
    const std::vector<int>* best = nullptr;
    for (const auto& c : cliques) {
      if (c.empty() || !alive[c.front()]) continue;
      long long sum = 0;
      bool ok = true;
      for (int v : c) {
        if (!alive[v]) {
          ok = false;
          break;
        }
        sum += d[v];
      }
      if (!ok) continue;
      const long long excess = sum - N;
      if (excess <= 0) continue;
      if (best == nullptr || excess > best_excess ||
          (excess == best_excess && (c.size() > best->size() ||
                                     (c.size() == best->size() && c < *best)))) {
        best_excess = excess;
        best = &c;
      }
    }
    if (best == nullptr) break;
    bound += best_excess;
    std::vector<std::pair<int, int>> kept;
    for (int v : *best) alive[v] = 0;
    for (auto [a, b] : residual.edges)
      if (alive[a] && alive[b]) kept.emplace_back(a, b);
    residual = InterferenceGraph::from_edges(residual.K, residual.U, kept);
  }
  return bound;
}

/// Aggregate statistics used by the graph-stats experiment.
struct GraphStats {
  long long edge_count = 0;
  std::map<int, long long> cycle_counts;       // length -> chordless cycle count
  std::map<int, long long> clique_size_hist;   // size -> number of maximal cliques
  long long lower_bound = 0;                   // filled only when demands are known
};

inline GraphStats analyze_graph(const InterferenceGraph& g, int max_cycle_len = 8) {
  GraphStats st;
  st.edge_count = static_cast<long long>(g.edges.size());
  st.cycle_counts = count_induced_cycles(g, max_cycle_len);
  for (const auto& c : enumerate_maximal_cliques(g)) ++st.clique_size_hist[static_cast<int>(c.size())];
  return st;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

/// Edge-list text format, one `k,u k',u'` pair per line (0-based indices).
inline std::string to_edge_list_text(const InterferenceGraph& g) {
  std::ostringstream out;
  for (auto [a, b] : g.edges) {
    out << g.cell_of(a) << ',' << a % g.U << ' ' << g.cell_of(b) << ',' << b % g.U << '\n';
  }
  return out.str();
}

inline InterferenceGraph graph_from_edge_list_text(int K, int U, const std::string& text) {
  std::vector<std::pair<int, int>> e;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int k1, u1, k2, u2;
    char c1, c2;
    std::istringstream ls(line);
    if (!(ls >> k1 >> c1 >> u1 >> k2 >> c2 >> u2) || c1 != ',' || c2 != ',')
      throw std::invalid_argument("edge list parse error at line " + std::to_string(line_no));
    e.emplace_back(k1 * U + u1, k2 * U + u2);
  }
  return InterferenceGraph::from_edges(K, U, e);
}

inline nlohmann::json to_json(const InterferenceGraph& g, const GraphStats* stats = nullptr) {
  nlohmann::json j;
  j["K"] = g.K;
  j["U"] = g.U;
  auto edges = nlohmann::json::array();
  for (auto [a, b] : g.edges) edges.push_back({a, b});
  j["edges"] = edges;
  if (stats != nullptr) {
    nlohmann::json s;
    s["edge_count"] = stats->edge_count;
    nlohmann::json cyc = nlohmann::json::object();
    for (auto [len, cnt] : stats->cycle_counts) cyc[std::to_string(len)] = cnt;
    s["induced_cycles"] = cyc;
    nlohmann::json hist = nlohmann::json::object();
    for (auto [size, cnt] : stats->clique_size_hist) hist[std::to_string(size)] = cnt;
    s["clique_size_hist"] = hist;
    s["lower_bound"] = stats->lower_bound;
    j["stats"] = s;
  }
  return j;
}

}  // namespace nifsim
