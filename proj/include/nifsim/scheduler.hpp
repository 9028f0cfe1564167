#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nifsim/interference_graph.hpp"

namespace nifsim {

/// Space-time assignment grid of one run: per cell an N_RF x N matrix whose
/// entries are local user ids 1..U, 0 meaning the element is unassigned.
struct ScheduleMatrix {
  int K = 0, N_RF = 0, N = 0, U = 0;
  std::vector<int> s;  // K * N_RF * N, layout [k][r][n]

  ScheduleMatrix() = default;
  ScheduleMatrix(int K_, int N_RF_, int N_, int U_)
      : K(K_), N_RF(N_RF_), N(N_), U(U_), s(static_cast<std::size_t>(K_) * N_RF_ * N_, 0) {}

  int& at(int k, int r, int n) { return s[(static_cast<std::size_t>(k) * N_RF + r) * N + n]; }
  int at(int k, int r, int n) const { return s[(static_cast<std::size_t>(k) * N_RF + r) * N + n]; }

  /// Node id of the user on element (k, r, n), or -1 when unassigned.
  int node_at(int k, int r, int n) const {
    const int v = at(k, r, n);
    return v == 0 ? -1 : k * U + (v - 1);
  }

  /// Actual per-node element counts.
  RequirementVector counts() const {
    RequirementVector d_hat(static_cast<std::size_t>(K) * U, 0);
    for (int k = 0; k < K; ++k)
      for (int r = 0; r < N_RF; ++r)
        for (int n = 0; n < N; ++n)
          if (at(k, r, n) != 0) ++d_hat[node_at(k, r, n)];
    return d_hat;
  }

  int unassigned_count() const {
    return static_cast<int>(std::count(s.begin(), s.end(), 0));
  }

  bool operator==(const ScheduleMatrix& o) const {
    return K == o.K && N_RF == o.N_RF && N == o.N && U == o.U && s == o.s;
  }
};

/// Per-node slot sets T_{k,u} (slots are 0-based).
struct SlotAssignment {
  std::vector<std::vector<int>> slots;  // per node, sorted

  RequirementVector counts() const {
    RequirementVector d_hat(slots.size(), 0);
    for (std::size_t v = 0; v < slots.size(); ++v) d_hat[v] = static_cast<int>(slots[v].size());
    return d_hat;
  }
};

struct Violation {
  enum class Kind { Range, Sdm, Cap, Nif };
  Kind kind;
  int slot = -1;
  int node_a = -1;
  int node_b = -1;
  std::string message;
};

struct ScheduleStats {
  long long n0 = 0;             // unfulfilled resource-element requirements
  RequirementVector d_hat;      // actual counts per node
  int unassigned = 0;           // zero elements in the matrix
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
};

namespace detail {

inline void check_requirements(const InterferenceGraph& g, const RequirementVector& d, int N) {
  if (static_cast<int>(d.size()) != g.num_nodes())
    throw std::invalid_argument("scheduler: requirement vector size mismatch");
  for (int v : d)
    if (v < 0 || v > N) throw std::invalid_argument("scheduler: requirements must satisfy 0 <= d <= N");
}

/// Traversal order of one connected component: start at the highest-degree
/// node, then repeatedly take the untraversed neighbor with the most edges
/// into the traversed set. Ties prefer larger demand, then the smaller id.
inline std::vector<int> traversal_order(const InterferenceGraph& g, const std::vector<int>& comp,
                                        const RequirementVector& d) {
  std::vector<int> order;
  order.reserve(comp.size());
  std::vector<char> traversed(g.num_nodes(), 0);

  int start = comp.front();
  for (int v : comp) {
    if (g.degree(v) > g.degree(start) ||
        (g.degree(v) == g.degree(start) && (d[v] > d[start] || (d[v] == d[start] && v < start))))
      start = v;
  }
  order.push_back(start);
  traversed[start] = 1;

  while (order.size() < comp.size()) {
    int pick = -1, pick_links = -1;
    for (int v : comp) {
      if (traversed[v]) continue;
      int links = 0;
      for (int w : g.adj[v])
        if (traversed[w]) ++links;
      if (links == 0) continue;  // component is connected, so someone has links
      if (links > pick_links ||
          (links == pick_links && (d[v] > d[pick] || (d[v] == d[pick] && v < pick))))
        pick = v, pick_links = links;
    }
    order.push_back(pick);
    traversed[pick] = 1;
  }
  return order;
}

}  // namespace detail

/// RF-chain-sufficient scheduling: traverses every component and gives each
/// node min(|T'|, d) slots, where T' excludes the slots of already-traversed
/// neighbors. Slots are taken lowest-index first.
inline SlotAssignment schedule_rf_sufficient(const InterferenceGraph& g, const RequirementVector& d,
                                             int N) {
  detail::check_requirements(g, d, N);
  SlotAssignment out;
  out.slots.assign(g.num_nodes(), {});
  for (const auto& comp : connected_components(g)) {
    for (int v : detail::traversal_order(g, comp, d)) {
      std::vector<char> blocked(N, 0);
      for (int w : g.adj[v])
        for (int slot : out.slots[w]) blocked[slot] = 1;
      std::vector<int>& mine = out.slots[v];
      for (int slot = 0; slot < N && static_cast<int>(mine.size()) < d[v]; ++slot)
        if (!blocked[slot]) mine.push_back(slot);
    }
  }
  return out;
}

namespace detail {

/// Randomized counterpart of traversal_order: random start node and random
/// choice among the maximally connected candidates.
inline std::vector<int> traversal_order_random(const InterferenceGraph& g,
                                               const std::vector<int>& comp, Rng& rng) {
  std::vector<int> order;
  std::vector<char> traversed(g.num_nodes(), 0);
  order.push_back(comp[rng.bounded(comp.size())]);
  traversed[order.front()] = 1;
  while (order.size() < comp.size()) {
    std::vector<int> cands;
    int best = -1;
    for (int v : comp) {
      if (traversed[v]) continue;
      int links = 0;
      for (int w : g.adj[v])
        if (traversed[w]) ++links;
      if (links == 0) continue;
      if (links > best) {
        best = links;
        cands.clear();
      }
      if (links == best) cands.push_back(v);
    }
    const int pick = cands[rng.bounded(cands.size())];
    order.push_back(pick);
    traversed[pick] = 1;
  }
  return order;
}

/// One traversal of the capacity-aware scheduler. With rng == nullptr the
/// pass is fully deterministic: components ordered by descending total
/// demand, the spec's start/next tie rules, slot priority by ascending
/// occupancy with ascending slot index on ties. A non-null rng randomizes
/// the unpinned choices (component order, start node, slot ties).
inline ScheduleMatrix nif_single_pass(const InterferenceGraph& g, const RequirementVector& d,
                                      const RadioConfig& cfg, Rng* rng) {
  ScheduleMatrix S(cfg.K, cfg.N_RF, cfg.N, cfg.U);
  std::vector<std::vector<int>> w(cfg.K, std::vector<int>(cfg.N, 0));  // occupied chains

  auto comps = connected_components(g);
  if (rng == nullptr) {
    auto total_d = [&](const std::vector<int>& c) {
      long long s = 0;
      for (int v : c) s += d[v];
      return s;
    };
    std::stable_sort(comps.begin(), comps.end(),
                     [&](const auto& a, const auto& b) { return total_d(a) > total_d(b); });
  } else {
    for (std::size_t i = 0; i < comps.size(); ++i)
      std::swap(comps[i], comps[i + rng->bounded(comps.size() - i)]);
  }

  auto place = [&](int v, int slot) {
    const int k = v / cfg.U;
    for (int r = 0; r < cfg.N_RF; ++r) {
      if (S.at(k, r, slot) == 0) {
        S.at(k, r, slot) = v % cfg.U + 1;
        ++w[k][slot];
        return;
      }
    }
    throw std::logic_error("schedule_nif: no free RF chain on a slot marked available");
  };

  std::vector<std::vector<int>> assigned(g.num_nodes());
  for (const auto& comp : comps) {
    const std::vector<int> order =
        rng == nullptr ? traversal_order(g, comp, d) : traversal_order_random(g, comp, *rng);
    for (int v : order) {
      const int k = v / cfg.U;
      std::vector<char> blocked(cfg.N, 0);
      for (int nb : g.adj[v])
        for (int slot : assigned[nb]) blocked[slot] = 1;
      std::vector<std::pair<long long, int>> avail;
      for (int slot = 0; slot < cfg.N; ++slot)
        if (!blocked[slot] && w[k][slot] < cfg.N_RF) {
          const long long tie = rng == nullptr ? slot : static_cast<long long>(rng->bounded(1 << 20));
          avail.push_back({static_cast<long long>(w[k][slot]) * (1 << 20) + tie, slot});
        }
      std::stable_sort(avail.begin(), avail.end());
      const int take = std::min<int>(static_cast<int>(avail.size()), d[v]);
      for (int i = 0; i < take; ++i) {
        place(v, avail[i].second);
        assigned[v].push_back(avail[i].second);
      }
      std::sort(assigned[v].begin(), assigned[v].end());
    }
  }
  return S;
}

/// Shortfall repair: place an unfulfilled user on a conflict-free slot, if
/// needed relocating one co-cell occupant to another slot to free a chain.
/// Only ever adds service; never breaks the one-chain or adjacency rules.
inline void repair_shortfalls(ScheduleMatrix& S, const InterferenceGraph& g,
                              const RequirementVector& d, const RadioConfig& cfg) {
  std::vector<std::vector<int>> w(cfg.K, std::vector<int>(cfg.N, 0));
  for (int k = 0; k < cfg.K; ++k)
    for (int n = 0; n < cfg.N; ++n)
      for (int r = 0; r < cfg.N_RF; ++r)
        if (S.at(k, r, n) != 0) ++w[k][n];

  auto chain_of = [&](int v, int n) {
    const int k = v / cfg.U;
    for (int r = 0; r < cfg.N_RF; ++r)
      if (S.node_at(k, r, n) == v) return r;
    return -1;
  };
  auto graph_free = [&](int v, int n) {
    for (int k2 = 0; k2 < cfg.K; ++k2)
      for (int r2 = 0; r2 < cfg.N_RF; ++r2) {
        const int occ = S.node_at(k2, r2, n);
        if (occ >= 0 && occ != v && g.has_edge(v, occ)) return false;
      }
    return true;
  };
  auto place = [&](int v, int slot) {
    const int k = v / cfg.U;
    for (int r = 0; r < cfg.N_RF; ++r)
      if (S.at(k, r, slot) == 0) {
        S.at(k, r, slot) = v % cfg.U + 1;
        ++w[k][slot];
        return;
      }
  };

  for (int pass = 0; pass < 6; ++pass) {
    bool progress = false;
    RequirementVector cnt = S.counts();
    for (int u = 0; u < g.num_nodes(); ++u) {
      const int k = u / cfg.U;
      while (cnt[u] < d[u]) {
        bool placed = false;
        for (int n = 0; n < cfg.N && !placed; ++n) {
          if (chain_of(u, n) >= 0 || !graph_free(u, n)) continue;
          if (w[k][n] < cfg.N_RF) {
            place(u, n);
            ++cnt[u];
            placed = true;
            progress = true;
            break;
          }
          for (int r = 0; r < cfg.N_RF && !placed; ++r) {
            const int v = S.node_at(k, r, n);
            if (v < 0) continue;
            for (int n2 = 0; n2 < cfg.N && !placed; ++n2) {
              if (n2 == n || w[k][n2] >= cfg.N_RF) continue;
              if (chain_of(v, n2) >= 0 || !graph_free(v, n2)) continue;
              S.at(k, r, n) = 0;
              --w[k][n];
              place(v, n2);
              place(u, n);
              ++cnt[u];
              placed = true;
              progress = true;
            }
          }
        }
        if (!placed) break;
      }
    }
    if (!progress) break;
  }
}

inline long long shortfall_of(const ScheduleMatrix& S, const RequirementVector& d) {
  long long n0 = 0;
  const RequirementVector cnt = S.counts();
  for (std::size_t v = 0; v < d.size(); ++v) n0 += std::max(0, d[v] - cnt[v]);
  return n0;
}

}  // namespace detail

/// Full scheduler with limited RF chains. A deterministic traversal pass
/// (slot priority by ascending occupancy) plus a shortfall-repair step; when
/// requirements remain unfulfilled, the unpinned choices (component order,
/// start node, slot ties) are re-randomized from a fixed seed and the best
/// schedule wins, so identical inputs always yield identical output.
inline ScheduleMatrix schedule_nif(const InterferenceGraph& g, const RequirementVector& d,
                                   const RadioConfig& cfg) {
  detail::check_requirements(g, d, cfg.N);
  ScheduleMatrix best = detail::nif_single_pass(g, d, cfg, nullptr);
  detail::repair_shortfalls(best, g, d, cfg);
  long long best_n0 = detail::shortfall_of(best, d);
  if (best_n0 == 0) return best;

  constexpr int kMaxRetries = 500;
  constexpr int kStaleCutoff = 200;
  Rng rng(0x9E3779B97F4A7C15ULL);
  int stale = 0;
  for (int t = 0; t < kMaxRetries && best_n0 > 0 && stale < kStaleCutoff; ++t) {
    ScheduleMatrix S = detail::nif_single_pass(g, d, cfg, &rng);
    detail::repair_shortfalls(S, g, d, cfg);
    const long long n0 = detail::shortfall_of(S, d);
    if (n0 < best_n0) {
      best = std::move(S);
      best_n0 = n0;
      stale = 0;
    } else {
      ++stale;
    }
  }
  return best;
}

/// Checks value range, the one-chain-per-user rule, the d_hat <= d cap and
/// the no-adjacent-pair rule. Violations are reported as data, never thrown.
inline ScheduleStats validate_schedule(const ScheduleMatrix& S, const InterferenceGraph& g,
                                       const RequirementVector& d, const RadioConfig& cfg) {
  ScheduleStats st;
  st.d_hat.assign(g.num_nodes(), 0);
  st.unassigned = 0;

  for (int n = 0; n < cfg.N; ++n) {
    std::vector<int> active;  // nodes scheduled in this slot, all cells
    for (int k = 0; k < cfg.K; ++k) {
      std::vector<int> seen;
      for (int r = 0; r < cfg.N_RF; ++r) {
        const int v = S.at(k, r, n);
        if (v < 0 || v > cfg.U) {
          st.violations.push_back({Violation::Kind::Range, n, k * cfg.U + r, -1,
                                   "value out of range at cell " + std::to_string(k)});
          continue;
        }
        if (v == 0) {
          ++st.unassigned;
          continue;
        }
        const int node = k * cfg.U + (v - 1);
        if (std::find(seen.begin(), seen.end(), node) != seen.end()) {
          st.violations.push_back({Violation::Kind::Sdm, n, node, -1,
                                   "user on two RF chains in one slot"});
        }
        seen.push_back(node);
        active.push_back(node);
        ++st.d_hat[node];
      }
    }
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j)
        if (g.has_edge(active[i], active[j]))
          st.violations.push_back({Violation::Kind::Nif, n, active[i], active[j],
                                   "adjacent users co-scheduled"});
  }

  st.n0 = 0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (st.d_hat[v] > d[v])
      st.violations.push_back({Violation::Kind::Cap, -1, v, -1,
                               "assigned more elements than required"});
    st.n0 += std::max(0, d[v] - st.d_hat[v]);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Exact oracle for desk-scale instances
// ---------------------------------------------------------------------------

namespace detail {

/// Feasible slot configurations: independent sets that respect the per-cell
/// RF-chain capacity. Only inclusion-maximal ones matter for the optimum.
inline std::vector<std::uint32_t> maximal_slot_configs(const InterferenceGraph& g, int N_RF) {
  const int n = g.num_nodes();
  std::vector<std::uint32_t> feasible;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    bool ok = true;
    std::vector<int> per_cell(g.K, 0);
    for (int v = 0; v < n && ok; ++v) {
      if (!(mask & (1u << v))) continue;
      if (++per_cell[g.cell_of(v)] > N_RF) ok = false;
      for (int w : g.adj[v])
        if (w > v && (mask & (1u << w))) {
          ok = false;
          break;
        }
    }
    if (ok) feasible.push_back(mask);
  }
  std::vector<std::uint32_t> maximal;
  for (std::uint32_t a : feasible) {
    bool is_max = true;
    for (std::uint32_t b : feasible) {
      if (a != b && (a & b) == a) {
        is_max = false;
        break;
      }
    }
    if (is_max) maximal.push_back(a);
  }
  return maximal;
}

struct OracleState {
  const std::vector<std::uint32_t>* configs;
  int n = 0;
  std::unordered_map<std::uint64_t, long long> memo;

  std::uint64_t key(const std::vector<int>& rem, int slots_left) const {
    std::uint64_t k = slots_left;
    for (int v = 0; v < n; ++v) k = k * 7 + rem[v];
    return k;
  }

  long long solve(std::vector<int>& rem, int slots_left) {
    long long total = 0;
    for (int v = 0; v < n; ++v) total += rem[v];
    if (total == 0 || slots_left == 0) return total;
    const std::uint64_t k = key(rem, slots_left);
    if (auto it = memo.find(k); it != memo.end()) return it->second;

    long long best = total;  // leaving the rest unassigned is always possible
    for (std::uint32_t cfg_mask : *configs) {
      std::vector<int> changed;
      for (int v = 0; v < n; ++v) {
        if ((cfg_mask & (1u << v)) && rem[v] > 0) {
          --rem[v];
          changed.push_back(v);
        }
      }
      if (!changed.empty()) best = std::min(best, solve(rem, slots_left - 1));
      for (int v : changed) ++rem[v];
      if (best == std::max<long long>(0, total - static_cast<long long>(slots_left) * n)) break;
    }
    memo[k] = best;
    return best;
  }
};

}  // namespace detail

/// Exhaustive minimum of the unfulfilled requirements over all valid
/// schedules. Enforces the desk-scale limits K*U <= 8, N <= 6, N_RF <= 2.
inline long long brute_force_optimal_n0(const InterferenceGraph& g, const RequirementVector& d,
                                        const RadioConfig& cfg) {
  if (g.num_nodes() > 8 || cfg.N > 6 || cfg.N_RF > 2)
    throw std::invalid_argument("brute_force_optimal_n0: instance exceeds oracle limits");
  detail::check_requirements(g, d, cfg.N);
  const auto configs = detail::maximal_slot_configs(g, cfg.N_RF);
  detail::OracleState st;
  st.configs = &configs;
  st.n = g.num_nodes();
  std::vector<int> rem = d;
  return st.solve(rem, cfg.N);
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Per-slot greedy baseline: every slot scans the users in ascending node
/// order and admits each one with remaining demand that keeps the slot
/// conflict free and within RF capacity (first fit, no demand coordination
/// across slots).
inline ScheduleMatrix schedule_greedy_per_slot(const InterferenceGraph& g,
                                               const RequirementVector& d,
                                               const RadioConfig& cfg) {
  detail::check_requirements(g, d, cfg.N);
  ScheduleMatrix S(cfg.K, cfg.N_RF, cfg.N, cfg.U);
  RequirementVector rem = d;
  for (int n = 0; n < cfg.N; ++n) {
    std::vector<int> slot_nodes;
    std::vector<int> chains_used(cfg.K, 0);
    for (int v = 0; v < g.num_nodes(); ++v) {
      if (rem[v] <= 0) continue;
      const int k = g.cell_of(v);
      if (chains_used[k] >= cfg.N_RF) continue;
      bool blocked = false;
      for (int w : slot_nodes)
        if (g.has_edge(v, w)) {
          blocked = true;
          break;
        }
      if (blocked) continue;
      S.at(k, chains_used[k], n) = v % cfg.U + 1;
      ++chains_used[k];
      slot_nodes.push_back(v);
      --rem[v];
    }
  }
  return S;
}

/// Uncoordinated baseline: each cell schedules against its intra-cell edges
/// only, packing users into the lowest-index slots with free chains (no
/// occupancy balancing and no view of other cells), then inter-cell
/// conflicts are repaired by muting the element of the conflicting user with
/// the larger current count (ties: higher cell index).
inline ScheduleMatrix schedule_uncoordinated(const InterferenceGraph& g,
                                             const RequirementVector& d, const RadioConfig& cfg) {
  detail::check_requirements(g, d, cfg.N);
  ScheduleMatrix S(cfg.K, cfg.N_RF, cfg.N, cfg.U);

  for (int k = 0; k < cfg.K; ++k) {
    std::vector<std::pair<int, int>> intra;
    for (auto [a, b] : g.edges)
      if (g.cell_of(a) == k && g.cell_of(b) == k)
        intra.emplace_back(a % cfg.U, b % cfg.U);
    InterferenceGraph sub = InterferenceGraph::from_edges(1, cfg.U, intra);
    RequirementVector sub_d(cfg.U);
    for (int u = 0; u < cfg.U; ++u) sub_d[u] = d[k * cfg.U + u];
    std::vector<int> w(cfg.N, 0);
    std::vector<std::vector<int>> assigned(cfg.U);
    for (const auto& comp : connected_components(sub)) {
      for (int v : detail::traversal_order(sub, comp, sub_d)) {
        std::vector<char> blocked(cfg.N, 0);
        for (int nb : sub.adj[v])
          for (int slot : assigned[nb]) blocked[slot] = 1;
        for (int slot = 0; slot < cfg.N && static_cast<int>(assigned[v].size()) < sub_d[v];
             ++slot) {
          if (blocked[slot] || w[slot] >= cfg.N_RF) continue;
          assigned[v].push_back(slot);
          for (int r = 0; r < cfg.N_RF; ++r)
            if (S.at(k, r, slot) == 0) {
              S.at(k, r, slot) = v + 1;
              break;
            }
          ++w[slot];
        }
      }
    }
  }

  // Mute inter-cell conflicts in passes: each pass snapshots the counts,
  // then every surviving conflicting pair loses the element of the user with
  // the larger count (ties: higher cell index).
  for (;;) {
    struct Conflict {
      int slot, a, b;
    };
    std::vector<Conflict> conflicts;
    for (int n = 0; n < cfg.N; ++n) {
      std::vector<int> active;
      for (int k = 0; k < cfg.K; ++k)
        for (int r = 0; r < cfg.N_RF; ++r)
          if (S.at(k, r, n) != 0) active.push_back(S.node_at(k, r, n));
      std::sort(active.begin(), active.end());
      for (std::size_t i = 0; i < active.size(); ++i)
        for (std::size_t j = i + 1; j < active.size(); ++j)
          if (g.has_edge(active[i], active[j]))
            conflicts.push_back({n, active[i], active[j]});
    }
    if (conflicts.empty()) break;
    const RequirementVector cnt = S.counts();
    auto scheduled_at = [&](int v, int n) {
      const int k = g.cell_of(v);
      for (int r = 0; r < cfg.N_RF; ++r)
        if (S.node_at(k, r, n) == v) return r;
      return -1;
    };
    for (const auto& c : conflicts) {
      if (scheduled_at(c.a, c.slot) < 0 || scheduled_at(c.b, c.slot) < 0) continue;
      int victim;
      if (cnt[c.a] != cnt[c.b]) {
        victim = cnt[c.a] > cnt[c.b] ? c.a : c.b;
      } else {
        victim = g.cell_of(c.a) > g.cell_of(c.b) ? c.a : c.b;
      }
      S.at(g.cell_of(victim), scheduled_at(victim, c.slot), c.slot) = 0;
    }
  }
  return S;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ScheduleMatrix& S) {
  nlohmann::json j;
  j["K"] = S.K;
  j["N_RF"] = S.N_RF;
  j["N"] = S.N;
  j["U"] = S.U;
  auto cells = nlohmann::json::array();
  for (int k = 0; k < S.K; ++k) {
    auto rows = nlohmann::json::array();
    for (int r = 0; r < S.N_RF; ++r) {
      auto slots = nlohmann::json::array();
      for (int n = 0; n < S.N; ++n) slots.push_back(S.at(k, r, n));
      rows.push_back(slots);
    }
    cells.push_back(rows);
  }
  j["cells"] = cells;
  return j;
}

inline ScheduleMatrix schedule_from_json(const nlohmann::json& j) {
  ScheduleMatrix S(j.at("K").get<int>(), j.at("N_RF").get<int>(), j.at("N").get<int>(),
                   j.at("U").get<int>());
  const auto& cells = j.at("cells");
  for (int k = 0; k < S.K; ++k)
    for (int r = 0; r < S.N_RF; ++r)
      for (int n = 0; n < S.N; ++n) S.at(k, r, n) = cells[k][r][n].get<int>();
  return S;
}

/// CSV rows `k,r,n,user` (0-based indices; user 0 = unassigned).
inline std::string to_csv(const ScheduleMatrix& S) {
  std::ostringstream out;
  out << "k,r,n,user\n";
  for (int k = 0; k < S.K; ++k)
    for (int r = 0; r < S.N_RF; ++r)
      for (int n = 0; n < S.N; ++n)
        out << k << ',' << r << ',' << n << ',' << S.at(k, r, n) << '\n';
  return out.str();
}

inline nlohmann::json to_json(const ScheduleStats& st) {
  nlohmann::json j;
  j["n0"] = st.n0;
  j["d_hat"] = st.d_hat;
  j["unassigned"] = st.unassigned;
  auto v = nlohmann::json::array();
  for (const auto& viol : st.violations)
    v.push_back({{"slot", viol.slot},
                 {"node_a", viol.node_a},
                 {"node_b", viol.node_b},
                 {"message", viol.message}});
  j["violations"] = v;
  return j;
}

}  // namespace nifsim
