#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "nifsim/scheduler.hpp"

namespace nifsim {

/// Raised when the rate requirements cannot be met within the per-element
/// power budget; callers switch to best-effort mode on catching it.
class infeasible_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-user CSI carried across scheduling periods: local channel gain alpha,
/// measured interference-plus-noise power I_tilde, and their ratio beta.
struct CsiState {
  std::vector<double> alpha;    // linear channel gain, indexed by node
  std::vector<double> I_tilde;  // watts
  std::vector<double> beta;     // alpha / I_tilde

  void recompute_beta() {
    beta.resize(alpha.size());
    for (std::size_t v = 0; v < alpha.size(); ++v) beta[v] = alpha[v] / I_tilde[v];
  }
};

/// Transmit powers mirroring a ScheduleMatrix, watts.
struct PowerMatrix {
  int K = 0, N_RF = 0, N = 0;
  std::vector<double> p;

  PowerMatrix() = default;
  PowerMatrix(int K_, int N_RF_, int N_)
      : K(K_), N_RF(N_RF_), N(N_), p(static_cast<std::size_t>(K_) * N_RF_ * N_, 0.0) {}

  double& at(int k, int r, int n) { return p[(static_cast<std::size_t>(k) * N_RF + r) * N + n]; }
  double at(int k, int r, int n) const {
    return p[(static_cast<std::size_t>(k) * N_RF + r) * N + n];
  }
  double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
  double max_element() const { return p.empty() ? 0.0 : *std::max_element(p.begin(), p.end()); }
};

/// Fewest resource elements a user needs so that the per-element power stays
/// within Pmax: ceil(gamma*N / (W*log2(beta*Pmax + 1))). A value above N
/// signals per-user infeasibility.
inline int min_required_elements(double gamma, double beta, int N, double W_Hz,
                                 double pmax_watt) {
  if (gamma <= 0.0) return 0;
  if (beta <= 0.0 || pmax_watt <= 0.0)
    throw std::domain_error("min_required_elements: beta and Pmax must be positive");
  const double x = gamma * N / (W_Hz * std::log2(beta * pmax_watt + 1.0));
  if (x >= 1e9) return 1000000000;  // far beyond any slot budget
  return static_cast<int>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

/// Power per resource element that meets the rate requirement with equality
/// when the user holds d_hat elements.
inline double per_element_power(double gamma, double beta, int d_hat, int N, double W_Hz) {
  if (gamma <= 0.0) return 0.0;
  if (d_hat <= 0) throw std::domain_error("per_element_power: d_hat must be >= 1 for gamma > 0");
  if (beta <= 0.0) throw std::domain_error("per_element_power: beta must be positive");
  return (std::exp2(gamma * N / (d_hat * W_Hz)) - 1.0) / beta;
}

namespace detail {

/// Transmit-power cost of serving one user on d elements (real-valued d).
/// Infinite at d = 0 for users with a positive rate requirement.
inline double power_term(double gamma, double beta, double d, int N, double W_Hz) {
  if (gamma <= 0.0) return 0.0;
  if (d <= 0.0) return std::numeric_limits<double>::infinity();
  return d / beta * (std::exp2(gamma * N / (d * W_Hz)) - 1.0);
}

struct UserCurve {
  double beta = 0.0;
  double kappa = 0.0;  // gamma * N * ln2 / W

  double value(double d) const {
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    return d / beta * (std::exp(kappa / d) - 1.0);
  }
  double deriv(double d) const {
    const double e = std::exp(kappa / d);
    return (e * (1.0 - kappa / d) - 1.0) / beta;
  }
  double deriv2(double d) const {
    return std::exp(kappa / d) * kappa * kappa / (beta * d * d * d);
  }

  /// argmin over [lo, hi] of value(d) + s*d, for s >= 0.
  double minimize(double s, double lo, double hi) const {
    if (s <= 0.0) return hi;  // strictly decreasing objective
    if (deriv(hi) + s <= 0.0) return hi;
    double bracket_lo = lo;
    if (bracket_lo <= 0.0) {
      bracket_lo = hi / 2.0;
      while (deriv(bracket_lo) + s > 0.0) bracket_lo /= 2.0;
    } else if (deriv(bracket_lo) + s >= 0.0) {
      return bracket_lo;
    }
    // Safeguarded Newton on deriv(d) + s = 0 within [bracket_lo, hi].
    double a = bracket_lo, b = hi, d = 0.5 * (a + b);
    for (int it = 0; it < 100; ++it) {
      const double phi = deriv(d) + s;
      if (std::abs(phi) < 1e-14 * (1.0 + s)) break;
      if (phi > 0.0)
        b = d;
      else
        a = d;
      const double step = phi / deriv2(d);
      double next = d - step;
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - d) < 1e-15 * std::max(1.0, d)) {
        d = next;
        break;
      }
      d = next;
    }
    return std::clamp(d, std::max(lo, 0.0), hi);
  }
};

struct ConstraintGroup {
  std::vector<int> members;  // active node ids
  double bound = 0.0;
};

/// Greedy independent-set partition for the IS baseline: users sorted by
/// descending element need are placed first-fit into sets that stay conflict
/// free and keep at most N_RF members per cell.
inline std::vector<std::vector<int>> build_independent_sets(const InterferenceGraph& g,
                                                            const RequirementVector& need,
                                                            int N_RF) {
  std::vector<int> order;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (need[v] > 0) order.push_back(v);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return need[a] > need[b]; });
  std::vector<std::vector<int>> sets;
  for (int v : order) {
    bool placed = false;
    for (auto& is : sets) {
      int cell_cnt = 0;
      bool conflict = false;
      for (int w : is) {
        if (g.has_edge(v, w)) {
          conflict = true;
          break;
        }
        if (g.cell_of(w) == g.cell_of(v)) ++cell_cnt;
      }
      if (!conflict && cell_cnt < N_RF) {
        is.push_back(v);
        placed = true;
        break;
      }
    }
    if (!placed) sets.push_back({v});
  }
  return sets;
}

}  // namespace detail

/// Element needs of every user at the Pmax power ceiling (Eq.-style floor).
inline RequirementVector element_needs(const std::vector<double>& gamma,
                                       const std::vector<double>& beta, const RadioConfig& cfg) {
  RequirementVector need(gamma.size(), 0);
  for (std::size_t v = 0; v < gamma.size(); ++v)
    need[v] = min_required_elements(gamma[v], beta[v], cfg.N, cfg.W_Hz, cfg.pmax_watt());
  return need;
}

/// The IS baseline is feasible when every per-user need fits in a period and
/// the per-set maxima sum to at most N slots.
inline bool is_based_feasible(const InterferenceGraph& g, const std::vector<double>& gamma,
                              const CsiState& csi, const RadioConfig& cfg) {
  const RequirementVector need = element_needs(gamma, csi.beta, cfg);
  for (int v : need)
    if (v > cfg.N) return false;
  long long M = 0;
  for (const auto& is : detail::build_independent_sets(g, need, cfg.N_RF)) {
    int m = 0;
    for (int v : is) m = std::max(m, need[v]);
    M += m;
  }
  return M <= cfg.N;
}

/// Outcome of the resource-allocation stage.
struct AllocationResult {
  RequirementVector d;           // integer per-node element requirements
  std::vector<double> d_relaxed; // continuous optimum of the relaxed problem
  double relaxed_optimum = 0.0;  // lower bound on the total transmit power
  double integer_objective = 0.0;
  double kkt_residual = 0.0;     // solver residual of the relaxed stage
  bool feasible = true;
  bool best_effort = false;
};

struct RelaxedSolution {
  std::vector<double> d;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int passes = 0;
};

/// Relaxed transmit-power minimization: separable convex objective under the
/// per-user box, the per-clique slot budget and the per-cell element budget.
/// Solved by coordinate ascent on the dual with safeguarded Newton steps;
/// converges to a relative KKT residual <= 1e-6. The returned objective is a
/// valid lower bound for the integer problem because the lower box edge keeps
/// the ceiled per-user minimum.
inline RelaxedSolution solve_relaxed_p5(const std::vector<double>& beta,
                                        const std::vector<double>& gamma,
                                        const std::vector<std::vector<int>>& cliques,
                                        const RadioConfig& cfg, const RequirementVector& lo) {
  const int n = static_cast<int>(gamma.size());
  // The acceptance gate is 1e-6; converging well past it keeps the returned
  // objective a numerically trustworthy lower bound for the integer problem.
  constexpr double kTolTarget = 1e-10;
  constexpr double kTolAccept = 1e-6;
  constexpr int kMaxPasses = 10000;

  std::vector<char> active(n, 0);
  std::vector<detail::UserCurve> curve(n);
  for (int v = 0; v < n; ++v) {
    if (gamma[v] > 0.0) {
      active[v] = 1;
      curve[v].beta = beta[v];
      curve[v].kappa = gamma[v] * cfg.N * M_LN2 / cfg.W_Hz;
    }
  }

  // Constraint groups that can actually bind: cliques of >= 2 active users
  // and cells with more active users than N_RF.
  std::vector<detail::ConstraintGroup> groups;
  for (const auto& c : cliques) {
    detail::ConstraintGroup grp;
    for (int v : c)
      if (active[v]) grp.members.push_back(v);
    if (grp.members.size() < 2) continue;
    grp.bound = cfg.N;
    groups.push_back(std::move(grp));
  }
  for (int k = 0; k < cfg.K; ++k) {
    detail::ConstraintGroup grp;
    for (int u = 0; u < cfg.U; ++u)
      if (active[k * cfg.U + u]) grp.members.push_back(k * cfg.U + u);
    grp.bound = static_cast<double>(cfg.N_RF) * cfg.N;
    if (static_cast<double>(grp.members.size()) * cfg.N <= grp.bound) continue;  // cannot bind
    groups.push_back(std::move(grp));
  }

  for (const auto& grp : groups) {
    double lo_sum = 0.0;
    for (int v : grp.members) lo_sum += lo[v];
    if (lo_sum > grp.bound + 1e-9)
      throw infeasible_error("solve_relaxed_p5: constraint system infeasible at the box floor");
  }

  std::vector<std::vector<int>> groups_of(n);
  for (std::size_t j = 0; j < groups.size(); ++j)
    for (int v : groups[j].members) groups_of[v].push_back(static_cast<int>(j));

  std::vector<double> lambda(groups.size(), 0.0);
  std::vector<double> pressure(n, 0.0);  // sum of multipliers over groups containing v
  std::vector<double> d(n, 0.0);
  auto refresh = [&](int v) {
    d[v] = curve[v].minimize(pressure[v], static_cast<double>(lo[v]), cfg.N);
  };
  for (int v = 0; v < n; ++v)
    if (active[v]) refresh(v);

  RelaxedSolution sol;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    for (std::size_t j = 0; j < groups.size(); ++j) {
      auto& grp = groups[j];
      // Trial removal of this multiplier.
      for (int v : grp.members) pressure[v] -= lambda[j];
      double sum0 = 0.0;
      for (int v : grp.members) {
        refresh(v);
        sum0 += d[v];
      }
      if (sum0 <= grp.bound + 1e-15 * grp.bound) {
        lambda[j] = 0.0;
        continue;
      }
      // Find lambda_j > 0 with the group sum on its bound (monotone in lambda).
      auto group_sum = [&](double lj) {
        double s = 0.0;
        for (int v : grp.members)
          s += curve[v].minimize(pressure[v] + lj, static_cast<double>(lo[v]), cfg.N);
        return s;
      };
      double hi = std::max(lambda[j], 1e-12);
      while (group_sum(hi) > grp.bound && hi < 1e30) hi *= 4.0;
      double a = 0.0, b = hi, lj = std::min(lambda[j] > 0.0 ? lambda[j] : 0.5 * hi, hi);
      for (int it = 0; it < 200; ++it) {
        double slope = 0.0, s = 0.0;
        for (int v : grp.members) {
          const double dv =
              curve[v].minimize(pressure[v] + lj, static_cast<double>(lo[v]), cfg.N);
          s += dv;
          if (dv > lo[v] + 1e-12 && dv < cfg.N - 1e-12)
            slope -= 1.0 / curve[v].deriv2(dv);
        }
        const double resid = s - grp.bound;
        if (std::abs(resid) <= 1e-10 * std::max(1.0, grp.bound)) break;
        if (resid > 0.0)
          a = lj;
        else
          b = lj;
        double next = slope < 0.0 ? lj - resid / slope : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - lj) < 1e-16 * std::max(1.0, lj)) {
          lj = next;
          break;
        }
        lj = next;
      }
      lambda[j] = lj;
      for (int v : grp.members) {
        pressure[v] += lambda[j];
        refresh(v);
      }
    }

    // Relative KKT residual: primal feasibility, stationarity, complementarity.
    double resid = 0.0;
    for (std::size_t j = 0; j < groups.size(); ++j) {
      double s = 0.0;
      for (int v : groups[j].members) s += d[v];
      const double gap = (s - groups[j].bound) / std::max(1.0, groups[j].bound);
      resid = std::max(resid, gap);  // violation
      resid = std::max(resid, lambda[j] * std::max(0.0, -gap) / (1.0 + lambda[j]));
    }
    for (int v = 0; v < n; ++v) {
      if (!active[v]) continue;
      const double grad = curve[v].deriv(d[v]) + pressure[v];
      const double scale = 1.0 + std::abs(curve[v].deriv(d[v]));
      if (d[v] <= lo[v] + 1e-12)
        resid = std::max(resid, -grad / scale);
      else if (d[v] >= cfg.N - 1e-12)
        resid = std::max(resid, grad / scale);
      else
        resid = std::max(resid, std::abs(grad) / scale);
    }
    const double prev = sol.kkt_residual > 0.0 ? sol.kkt_residual : 1.0;
    sol.kkt_residual = resid;
    sol.passes = pass + 1;
    if (resid <= kTolTarget) break;
    if (resid <= kTolAccept && resid > 0.9 * prev) break;  // stalled below the gate
  }

  sol.d = d;
  sol.objective = 0.0;
  for (int v = 0; v < n; ++v)
    if (active[v]) sol.objective += curve[v].value(d[v]);
  return sol;
}

/// Feasibility test of the allocation problem: pin every user at its
/// per-element-power floor and check the clique and cell budgets.
inline bool check_feasibility(const std::vector<double>& beta, const std::vector<double>& gamma,
                              const std::vector<std::vector<int>>& cliques,
                              const RadioConfig& cfg) {
  const int n = static_cast<int>(gamma.size());
  RequirementVector lo(n, 0);
  for (int v = 0; v < n; ++v) {
    lo[v] = min_required_elements(gamma[v], beta[v], cfg.N, cfg.W_Hz, cfg.pmax_watt());
    if (lo[v] > cfg.N) return false;
  }
  for (const auto& c : cliques) {
    long long sum = 0;
    for (int v : c) sum += lo[v];
    if (sum > cfg.N) return false;
  }
  for (int k = 0; k < cfg.K; ++k) {
    long long sum = 0;
    for (int u = 0; u < cfg.U; ++u) sum += lo[k * cfg.U + u];
    if (sum > static_cast<long long>(cfg.N_RF) * cfg.N) return false;
  }
  return true;
}

/// Integer repair of the relaxed solution: round half-up, then while a clique
/// or cell budget is violated, decrement the member whose reduction costs the
/// least extra power without dropping below the box floor.
inline AllocationResult allocate_resources(const std::vector<double>& d_relaxed,
                                           double relaxed_objective,
                                           const std::vector<double>& beta,
                                           const std::vector<double>& gamma,
                                           const std::vector<std::vector<int>>& cliques,
                                           const RadioConfig& cfg, const RequirementVector& lo,
                                           bool best_effort) {
  const int n = static_cast<int>(gamma.size());
  AllocationResult res;
  res.d_relaxed = d_relaxed;
  res.relaxed_optimum = relaxed_objective;
  res.best_effort = best_effort;
  res.d.assign(n, 0);
  for (int v = 0; v < n; ++v) {
    if (gamma[v] <= 0.0) continue;
    const int rounded = static_cast<int>(std::floor(d_relaxed[v] + 0.5));
    res.d[v] = std::clamp(rounded, lo[v], cfg.N);
  }

  std::vector<detail::ConstraintGroup> groups;
  for (const auto& c : cliques) {
    detail::ConstraintGroup grp;
    for (int v : c)
      if (gamma[v] > 0.0) grp.members.push_back(v);
    if (grp.members.size() < 2) continue;
    grp.bound = cfg.N;
    groups.push_back(std::move(grp));
  }
  for (int k = 0; k < cfg.K; ++k) {
    detail::ConstraintGroup grp;
    for (int u = 0; u < cfg.U; ++u)
      if (gamma[k * cfg.U + u] > 0.0) grp.members.push_back(k * cfg.U + u);
    if (grp.members.empty()) continue;
    grp.bound = static_cast<double>(cfg.N_RF) * cfg.N;
    groups.push_back(std::move(grp));
  }

  auto term = [&](int v, int dv) { return detail::power_term(gamma[v], beta[v], dv, cfg.N, cfg.W_Hz); };

  for (;;) {
    std::vector<char> in_violated(n, 0);
    bool violated = false;
    for (const auto& grp : groups) {
      long long sum = 0;
      for (int v : grp.members) sum += res.d[v];
      if (sum > grp.bound) {
        violated = true;
        for (int v : grp.members) in_violated[v] = 1;
      }
    }
    if (!violated) break;
    int pick = -1;
    double pick_cost = std::numeric_limits<double>::infinity();
    bool pick_finite = false;
    for (int v = 0; v < n; ++v) {
      if (!in_violated[v] || res.d[v] - 1 < lo[v] || res.d[v] == 0) continue;
      const double cost = term(v, res.d[v] - 1) - term(v, res.d[v]);
      const bool finite = std::isfinite(cost);
      if (pick < 0 || (finite && !pick_finite) ||
          (finite == pick_finite && cost < pick_cost)) {
        pick = v;
        pick_cost = cost;
        pick_finite = finite;
      }
    }
    if (pick < 0)
      throw infeasible_error("allocate_resources: cannot repair without violating the box floor");
    --res.d[pick];
  }

  res.integer_objective = 0.0;
  for (int v = 0; v < n; ++v)
    if (gamma[v] > 0.0 && res.d[v] > 0) res.integer_objective += term(v, res.d[v]);
  return res;
}

/// Fills unassigned elements in (cell, slot, chain) order with the candidate
/// user whose extra element saves the most transmit power, then derives the
/// equal-power allocation. Candidates must belong to the element's cell, stay
/// below their cap (the planned allocation; N when no plan applies), not
/// already appear in the slot, and not neighbor any user scheduled in the
/// slot anywhere in the network.
inline std::pair<ScheduleMatrix, PowerMatrix> fill_and_allocate_power(
    ScheduleMatrix S, const InterferenceGraph& g, const std::vector<double>& beta,
    const std::vector<double>& gamma, const RadioConfig& cfg, bool best_effort,
    const RequirementVector& d_cap = {}) {
  RequirementVector cnt = S.counts();
  auto cap_of = [&](int v) { return d_cap.empty() ? cfg.N : std::min(d_cap[v], cfg.N); };

  auto term = [&](int v, int dv) { return detail::power_term(gamma[v], beta[v], dv, cfg.N, cfg.W_Hz); };

  for (int k = 0; k < cfg.K; ++k) {
    for (int slot = 0; slot < cfg.N; ++slot) {
      for (int r = 0; r < cfg.N_RF; ++r) {
        if (S.at(k, r, slot) != 0) continue;
        std::vector<int> slot_nodes;
        for (int k2 = 0; k2 < cfg.K; ++k2)
          for (int r2 = 0; r2 < cfg.N_RF; ++r2)
            if (S.at(k2, r2, slot) != 0) slot_nodes.push_back(S.node_at(k2, r2, slot));
        int pick = -1;
        double pick_gain = -1.0;
        for (int u = 0; u < cfg.U; ++u) {
          const int v = k * cfg.U + u;
          if (cnt[v] >= cap_of(v)) continue;
          bool blocked = false;
          for (int w : slot_nodes) {
            if (w == v || g.has_edge(v, w)) {
              blocked = true;
              break;
            }
          }
          if (blocked) continue;
          double gain = term(v, cnt[v]) - term(v, cnt[v] + 1);
          if (!std::isfinite(gain)) gain = std::numeric_limits<double>::max();
          if (gain > pick_gain) {
            pick_gain = gain;
            pick = v;
          }
        }
        if (pick >= 0) {
          S.at(k, r, slot) = pick % cfg.U + 1;
          ++cnt[pick];
        }
      }
    }
  }

  PowerMatrix P(cfg.K, cfg.N_RF, cfg.N);
  cnt = S.counts();
  for (int k = 0; k < cfg.K; ++k)
    for (int r = 0; r < cfg.N_RF; ++r)
      for (int slot = 0; slot < cfg.N; ++slot) {
        const int v = S.node_at(k, r, slot);
        if (v < 0) continue;
        double p = per_element_power(gamma[v], beta[v], cnt[v], cfg.N, cfg.W_Hz);
        if (best_effort) p = std::min(p, cfg.pmax_watt());
        P.at(k, r, slot) = p;
      }
  return {std::move(S), std::move(P)};
}

enum class SchedulerMode { Nif, Greedy, Uncoordinated, IsBased };

inline const char* to_string(SchedulerMode m) {
  switch (m) {
    case SchedulerMode::Nif: return "nif";
    case SchedulerMode::Greedy: return "greedy";
    case SchedulerMode::Uncoordinated: return "uncoordinated";
    case SchedulerMode::IsBased: return "is_based";
  }
  return "?";
}

inline SchedulerMode scheduler_mode_from_string(const std::string& s) {
  if (s == "nif") return SchedulerMode::Nif;
  if (s == "greedy") return SchedulerMode::Greedy;
  if (s == "uncoordinated") return SchedulerMode::Uncoordinated;
  if (s == "is_based") return SchedulerMode::IsBased;
  throw std::invalid_argument("unknown scheduler mode: " + s);
}

/// Output of one joint scheduling + power allocation run.
struct PipelineResult {
  ScheduleMatrix S;
  PowerMatrix P;
  AllocationResult alloc;
  RequirementVector d_hat;        // final per-node counts (after the fill stage)
  long long n0 = 0;               // unfulfilled vs. the allocated d (pre-fill scheduler)
  std::vector<Violation> violations;  // structural violations; empty on healthy runs
  double total_power_watt = 0.0;
};

/// Full pipeline: feasibility check (switching to best effort when the floors
/// do not fit), relaxed solve, integer repair, scheduling, fill and power.
/// The scheduler stage is exchangeable to support the baselines.
inline PipelineResult run_pipeline(const InterferenceGraph& g, const std::vector<double>& gamma,
                                   const CsiState& csi, const RadioConfig& cfg,
                                   SchedulerMode mode, bool strict) {
  const int n = g.num_nodes();
  PipelineResult res;

  if (mode == SchedulerMode::IsBased) {
    // Greedy independent-set grouping (first fit over users sorted by
    // descending element need), slot shares proportional to the largest need
    // in each set (largest-remainder rounding), then the common fill stage.
    const RequirementVector need = element_needs(gamma, csi.beta, cfg);
    bool ok = true;
    for (int v = 0; v < n; ++v)
      if (need[v] > cfg.N) ok = false;
    const std::vector<std::vector<int>> sets =
        detail::build_independent_sets(g, need, cfg.N_RF);
    std::vector<int> m(sets.size(), 0);
    long long M = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (int v : sets[i]) m[i] = std::max(m[i], need[v]);
      M += m[i];
    }
    if (M > cfg.N) ok = false;
    res.alloc.feasible = ok;
    res.alloc.best_effort = !ok;
    if (strict && !ok)
      throw infeasible_error("is_based: slot shares cannot satisfy the element needs");

    std::vector<int> share(sets.size(), 0);
    if (M > 0) {
      long long used = 0;
      std::vector<std::pair<double, std::size_t>> rema;
      for (std::size_t i = 0; i < sets.size(); ++i) {
        const double exact = static_cast<double>(cfg.N) * m[i] / static_cast<double>(M);
        share[i] = static_cast<int>(std::floor(exact));
        used += share[i];
        rema.push_back({exact - share[i], i});
      }
      std::stable_sort(rema.begin(), rema.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (long long left = cfg.N - used; left > 0; --left)
        ++share[rema[static_cast<std::size_t>(cfg.N - used - left)].second];
    }

    ScheduleMatrix S(cfg.K, cfg.N_RF, cfg.N, cfg.U);
    res.alloc.d.assign(n, 0);
    int cursor = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      std::vector<int> members = sets[i];
      std::sort(members.begin(), members.end());
      for (int slot = cursor; slot < std::min(cursor + share[i], cfg.N); ++slot) {
        for (int v : members) {
          const int k = g.cell_of(v);
          for (int r = 0; r < cfg.N_RF; ++r)
            if (S.at(k, r, slot) == 0) {
              S.at(k, r, slot) = v % cfg.U + 1;
              break;
            }
        }
      }
      for (int v : members) res.alloc.d[v] = std::min(share[i], cfg.N);
      cursor += share[i];
    }

    auto pre_fill_counts = S.counts();
    res.n0 = 0;
    for (int v = 0; v < n; ++v) res.n0 += std::max(0, res.alloc.d[v] - pre_fill_counts[v]);
    auto [S2, P] = fill_and_allocate_power(std::move(S), g, csi.beta, gamma, cfg, !ok, res.alloc.d);
    res.S = std::move(S2);
    res.P = std::move(P);
    res.alloc.relaxed_optimum = std::numeric_limits<double>::quiet_NaN();
    res.alloc.integer_objective = 0.0;
    for (int v = 0; v < n; ++v)
      if (gamma[v] > 0.0 && res.alloc.d[v] > 0)
        res.alloc.integer_objective +=
            detail::power_term(gamma[v], csi.beta[v], res.alloc.d[v], cfg.N, cfg.W_Hz);
  } else {
    RequirementVector lo(n, 0);
    for (int v = 0; v < n; ++v)
      lo[v] = min_required_elements(gamma[v], csi.beta[v], cfg.N, cfg.W_Hz, cfg.pmax_watt());
    const auto cliques = enumerate_maximal_cliques(g);
    const bool feasible = check_feasibility(csi.beta, gamma, cliques, cfg);
    if (strict && !feasible)
      throw infeasible_error("pipeline: rate requirements infeasible under Pmax");
    const bool best_effort = !feasible;
    if (best_effort) std::fill(lo.begin(), lo.end(), 0);

    const RelaxedSolution relaxed = solve_relaxed_p5(csi.beta, gamma, cliques, cfg, lo);
    res.alloc = allocate_resources(relaxed.d, relaxed.objective, csi.beta, gamma, cliques, cfg,
                                   lo, best_effort);
    res.alloc.kkt_residual = relaxed.kkt_residual;
    res.alloc.feasible = feasible;

    ScheduleMatrix S;
    switch (mode) {
      case SchedulerMode::Nif: S = schedule_nif(g, res.alloc.d, cfg); break;
      case SchedulerMode::Greedy: S = schedule_greedy_per_slot(g, res.alloc.d, cfg); break;
      case SchedulerMode::Uncoordinated: S = schedule_uncoordinated(g, res.alloc.d, cfg); break;
      case SchedulerMode::IsBased: break;  // handled above
    }
    auto pre_fill_counts = S.counts();
    res.n0 = 0;
    for (int v = 0; v < n; ++v) res.n0 += std::max(0, res.alloc.d[v] - pre_fill_counts[v]);

    auto [S2, P] = fill_and_allocate_power(std::move(S), g, csi.beta, gamma, cfg, best_effort,
                                           res.alloc.d);
    res.S = std::move(S2);
    res.P = std::move(P);
  }

  res.d_hat = res.S.counts();
  RequirementVector cap(n, cfg.N);
  ScheduleStats structural = validate_schedule(res.S, g, cap, cfg);
  res.violations = std::move(structural.violations);
  res.total_power_watt = res.P.total();
  return res;
}

/// Proposed joint scheme (relaxed P5 -> integer repair -> NIF scheduling ->
/// fill and power).
inline PipelineResult joint_pipeline(const InterferenceGraph& g, const std::vector<double>& gamma,
                                     const CsiState& csi, const RadioConfig& cfg, bool strict) {
  return run_pipeline(g, gamma, csi, cfg, SchedulerMode::Nif, strict);
}

/// Reimplementation of the independent-set baseline, enhanced by the fill
/// stage like the proposed scheme.
inline PipelineResult schedule_is_based(const InterferenceGraph& g,
                                        const std::vector<double>& gamma, const CsiState& csi,
                                        const RadioConfig& cfg, bool strict = false) {
  return run_pipeline(g, gamma, csi, cfg, SchedulerMode::IsBased, strict);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PowerMatrix& P) {
  nlohmann::json j;
  j["K"] = P.K;
  j["N_RF"] = P.N_RF;
  j["N"] = P.N;
  auto cells = nlohmann::json::array();
  for (int k = 0; k < P.K; ++k) {
    auto rows = nlohmann::json::array();
    for (int r = 0; r < P.N_RF; ++r) {
      auto slots = nlohmann::json::array();
      for (int n = 0; n < P.N; ++n) {
        const double w = P.at(k, r, n);
        if (w > 0.0)
          slots.push_back(watt_to_dbm(w));  // human-facing output is dBm
        else
          slots.push_back(nullptr);
      }
      rows.push_back(slots);
    }
    cells.push_back(rows);
  }
  j["cells_dBm"] = cells;
  return j;
}

inline nlohmann::json to_json(const AllocationResult& a) {
  nlohmann::json j;
  j["d"] = a.d;
  j["d_relaxed"] = a.d_relaxed;
  j["relaxed_optimum_watt"] = a.relaxed_optimum;
  j["integer_objective_watt"] = a.integer_objective;
  j["feasible"] = a.feasible;
  j["best_effort"] = a.best_effort;
  return j;
}

}  // namespace nifsim
