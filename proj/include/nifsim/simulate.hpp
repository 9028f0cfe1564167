#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "nifsim/power.hpp"

namespace nifsim {

/// Per-element SINR grid; 0 where the element is unassigned.
struct SinrGrid {
  int K = 0, N_RF = 0, N = 0;
  std::vector<double> rho;

  SinrGrid() = default;
  SinrGrid(int K_, int N_RF_, int N_)
      : K(K_), N_RF(N_RF_), N(N_), rho(static_cast<std::size_t>(K_) * N_RF_ * N_, 0.0) {}
  double& at(int k, int r, int n) { return rho[(static_cast<std::size_t>(k) * N_RF + r) * N + n]; }
  double at(int k, int r, int n) const {
    return rho[(static_cast<std::size_t>(k) * N_RF + r) * N + n];
  }
};

namespace detail {

struct ActiveElement {
  int k, r, node;
  double power;
};

inline std::vector<ActiveElement> active_in_slot(const ScheduleMatrix& S, const PowerMatrix& P,
                                                 int n) {
  std::vector<ActiveElement> out;
  for (int k = 0; k < S.K; ++k)
    for (int r = 0; r < S.N_RF; ++r)
      if (S.at(k, r, n) != 0) out.push_back({k, r, S.node_at(k, r, n), P.at(k, r, n)});
  return out;
}

/// Interference power received by `victim` from all other active elements in
/// the slot. With zf, intra-cell terms are cancelled.
inline double interference_on(const NetworkScenario& sc, const std::vector<ActiveElement>& act,
                              std::size_t self_idx, bool zf) {
  const auto& self = act[self_idx];
  double total = 0.0;
  for (std::size_t i = 0; i < act.size(); ++i) {
    if (i == self_idx) continue;
    const auto& other = act[i];
    if (zf && other.k == self.k) continue;
    total += other.power * sc.path_loss_lin[other.k][self.node] *
             sc.gain_cache[other.node][self.node];
  }
  return total;
}

}  // namespace detail

/// Exact SINR of every assigned element under the full gain cache. With zf
/// the intra-cell interference sum is removed (idealized zero-forcing);
/// inter-cell terms are unchanged.
inline SinrGrid compute_sinr(const NetworkScenario& sc, const ScheduleMatrix& S,
                             const PowerMatrix& P, bool zf) {
  SinrGrid grid(S.K, S.N_RF, S.N);
  const double p_n = sc.noise_watt();
  for (int n = 0; n < S.N; ++n) {
    const auto act = detail::active_in_slot(S, P, n);
    for (std::size_t i = 0; i < act.size(); ++i) {
      const auto& e = act[i];
      const double signal =
          e.power * sc.path_loss_lin[e.k][e.node] * sc.gain_cache[e.node][e.node];
      const double interf = detail::interference_on(sc, act, i, zf);
      grid.at(e.k, e.r, n) = signal / (p_n + interf);
    }
  }
  return grid;
}

/// Average per-user rate over the period: r = (1/N) * sum W*log2(1+rho).
inline std::vector<double> compute_rates(const NetworkScenario& sc, const ScheduleMatrix& S,
                                         const PowerMatrix& P, bool zf) {
  const SinrGrid grid = compute_sinr(sc, S, P, zf);
  std::vector<double> rates(sc.config.num_users(), 0.0);
  for (int k = 0; k < S.K; ++k)
    for (int r = 0; r < S.N_RF; ++r)
      for (int n = 0; n < S.N; ++n) {
        const int v = S.node_at(k, r, n);
        if (v < 0) continue;
        rates[v] += sc.config.W_Hz * std::log2(1.0 + grid.at(k, r, n)) / sc.config.N;
      }
  return rates;
}

/// Coarse period-1 interference estimate: side-lobe leakage from every BS at
/// reference power, scaled by eta, plus noise.
inline CsiState initial_interference(const NetworkScenario& sc, double eta, double p0_watt) {
  if (eta < 0.0) throw std::domain_error("initial_interference: eta must be >= 0");
  const int n = sc.config.num_users();
  CsiState csi;
  csi.alpha.resize(n);
  csi.I_tilde.resize(n);
  const double p_n = sc.noise_watt();
  for (int v = 0; v < n; ++v) {
    csi.alpha[v] = sc.local_gain(v);
    double leak = 0.0;
    for (int k = 0; k < sc.config.K; ++k)
      leak += sc.config.N_RF * p0_watt * sc.path_loss_lin[k][v] * sc.config.g_min;
    csi.I_tilde[v] = eta * leak + p_n;
  }
  csi.recompute_beta();
  return csi;
}

/// Post-period CSI feedback: every served user reports the maximum
/// interference-plus-noise power over its own slots; unserved users carry
/// their previous estimate forward.
inline CsiState measure_interference(const NetworkScenario& sc, const ScheduleMatrix& S,
                                     const PowerMatrix& P, bool zf, const CsiState& prev) {
  CsiState csi = prev;
  const double p_n = sc.noise_watt();
  std::vector<double> max_measured(sc.config.num_users(), -1.0);
  for (int n = 0; n < S.N; ++n) {
    const auto act = detail::active_in_slot(S, P, n);
    for (std::size_t i = 0; i < act.size(); ++i) {
      const double measured = detail::interference_on(sc, act, i, zf) + p_n;
      max_measured[act[i].node] = std::max(max_measured[act[i].node], measured);
    }
  }
  for (int v = 0; v < sc.config.num_users(); ++v)
    if (max_measured[v] >= 0.0) csi.I_tilde[v] = max_measured[v];
  csi.recompute_beta();
  return csi;
}

/// Scalar metrics of one scheduling period.
struct PeriodMetrics {
  std::vector<double> rate;    // bits/s per node
  std::vector<double> ratio;   // rate / gamma (1.0 where gamma = 0)
  double total_power_watt = 0.0;
  double energy_efficiency = 0.0;  // delivered bits per joule, period = 1 s
  int unfulfilled_rate_count = 0;
  double unfulfilled_rate_frac = 0.0;
  long long n0 = 0;
  double n0_pct = 0.0;
};

inline PeriodMetrics compute_metrics(const NetworkScenario& sc, const std::vector<double>& gamma,
                                     const PipelineResult& pr, bool zf) {
  PeriodMetrics m;
  m.rate = compute_rates(sc, pr.S, pr.P, zf);
  m.ratio.resize(m.rate.size());
  for (std::size_t v = 0; v < m.rate.size(); ++v) {
    if (gamma[v] > 0.0) {
      m.ratio[v] = m.rate[v] / gamma[v];
      if (m.rate[v] < gamma[v] * (1.0 - 1e-9)) ++m.unfulfilled_rate_count;
    } else {
      m.ratio[v] = 1.0;
    }
  }
  m.unfulfilled_rate_frac =
      m.rate.empty() ? 0.0 : static_cast<double>(m.unfulfilled_rate_count) / m.rate.size();
  m.total_power_watt = pr.total_power_watt;
  double delivered = 0.0;
  for (double r : m.rate) delivered += r;
  m.energy_efficiency = m.total_power_watt > 0.0 ? delivered / m.total_power_watt : 0.0;
  m.n0 = pr.n0;
  const double elements = static_cast<double>(sc.config.K) * sc.config.N_RF * sc.config.N;
  m.n0_pct = elements > 0.0 ? 100.0 * pr.n0 / elements : 0.0;
  return m;
}

/// One scheduling period of a consecutive run.
struct PeriodRecord {
  CsiState csi;  // CSI the period was planned with
  ScheduleMatrix S;
  PowerMatrix P;
  AllocationResult alloc;
  PeriodMetrics metrics;
};

struct RunTrace {
  std::vector<PeriodRecord> periods;
};

/// Consecutive scheduling periods with CSI feedback: period 1 plans against
/// the coarse initial estimate, later periods against the measured maxima.
inline RunTrace run_consecutive(const NetworkScenario& sc, const std::vector<double>& gamma,
                                const RadioConfig& cfg, SchedulerMode mode, bool zf,
                                bool strict) {
  const InterferenceGraph g = InterferenceGraph::build(sc, cfg.epsilon);
  CsiState csi = initial_interference(sc, cfg.eta, cfg.p0_watt());
  RunTrace trace;
  trace.periods.reserve(cfg.periods);
  for (int t = 0; t < cfg.periods; ++t) {
    PeriodRecord rec;
    rec.csi = csi;
    PipelineResult pr = run_pipeline(g, gamma, csi, cfg, mode, strict);
    rec.metrics = compute_metrics(sc, gamma, pr, zf);
    csi = measure_interference(sc, pr.S, pr.P, zf, csi);
    rec.alloc = std::move(pr.alloc);
    rec.S = std::move(pr.S);
    rec.P = std::move(pr.P);
    trace.periods.push_back(std::move(rec));
  }
  return trace;
}

/// Cross-realization aggregates: CDF of rate/requirement at 200 fixed bins
/// over [0, 3] for a chosen period (default: last), plus means and a few
/// percentiles of the headline metrics.
struct MetricsSummary {
  static constexpr int kCdfBins = 200;
  std::vector<double> cdf_edges;   // upper bin edges
  std::vector<double> cdf_values;  // fraction of ratios <= edge
  double mean_total_power_watt = 0.0;
  double mean_energy_efficiency = 0.0;
  double mean_unfulfilled_rate_frac = 0.0;
  double mean_n0_pct = 0.0;
  double power_p5 = 0.0, power_p50 = 0.0, power_p95 = 0.0;
  double ee_p5 = 0.0, ee_p50 = 0.0, ee_p95 = 0.0;
};

inline MetricsSummary summarize_metrics(const std::vector<RunTrace>& traces, int period = -1) {
  if (traces.empty()) throw std::invalid_argument("summarize_metrics: no traces");
  for (const auto& t : traces)
    if (t.periods.empty()) throw std::invalid_argument("summarize_metrics: empty trace");

  MetricsSummary s;
  std::vector<double> ratios, powers, ees;
  for (const auto& t : traces) {
    const int idx = period < 0 ? static_cast<int>(t.periods.size()) - 1 : period;
    if (idx >= static_cast<int>(t.periods.size()))
      throw std::invalid_argument("summarize_metrics: period index out of range");
    const auto& m = t.periods[idx].metrics;
    ratios.insert(ratios.end(), m.ratio.begin(), m.ratio.end());
    powers.push_back(m.total_power_watt);
    ees.push_back(m.energy_efficiency);
    s.mean_total_power_watt += m.total_power_watt;
    s.mean_energy_efficiency += m.energy_efficiency;
    s.mean_unfulfilled_rate_frac += m.unfulfilled_rate_frac;
    s.mean_n0_pct += m.n0_pct;
  }
  const double count = static_cast<double>(traces.size());
  s.mean_total_power_watt /= count;
  s.mean_energy_efficiency /= count;
  s.mean_unfulfilled_rate_frac /= count;
  s.mean_n0_pct /= count;

  s.cdf_edges.resize(MetricsSummary::kCdfBins);
  s.cdf_values.resize(MetricsSummary::kCdfBins);
  std::sort(ratios.begin(), ratios.end());
  for (int b = 0; b < MetricsSummary::kCdfBins; ++b) {
    const double edge = 3.0 * (b + 1) / MetricsSummary::kCdfBins;
    s.cdf_edges[b] = edge;
    const auto it = std::upper_bound(ratios.begin(), ratios.end(), edge);
    s.cdf_values[b] =
        ratios.empty() ? 0.0 : static_cast<double>(it - ratios.begin()) / ratios.size();
  }

  auto percentile = [](std::vector<double> xs, double q) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const double pos = q * (xs.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - i;
    if (i + 1 < xs.size()) return xs[i] * (1.0 - frac) + xs[i + 1] * frac;
    return xs.back();
  };
  s.power_p5 = percentile(powers, 0.05);
  s.power_p50 = percentile(powers, 0.50);
  s.power_p95 = percentile(powers, 0.95);
  s.ee_p5 = percentile(ees, 0.05);
  s.ee_p50 = percentile(ees, 0.50);
  s.ee_p95 = percentile(ees, 0.95);
  return s;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PeriodMetrics& m) {
  return nlohmann::json{{"rate", m.rate},
                        {"ratio", m.ratio},
                        {"total_power_watt", m.total_power_watt},
                        {"total_power_dBm", m.total_power_watt > 0.0
                                                ? watt_to_dbm(m.total_power_watt)
                                                : -300.0},
                        {"energy_efficiency_bits_per_joule", m.energy_efficiency},
                        {"unfulfilled_rate_frac", m.unfulfilled_rate_frac},
                        {"n0", m.n0},
                        {"n0_pct", m.n0_pct}};
}

inline nlohmann::json to_json(const RunTrace& trace) {
  nlohmann::json periods = nlohmann::json::array();
  for (const auto& rec : trace.periods) {
    nlohmann::json p;
    p["schedule"] = to_json(rec.S);
    p["power"] = to_json(rec.P);
    p["allocation"] = to_json(rec.alloc);
    p["metrics"] = to_json(rec.metrics);
    p["I_tilde_dBm"] = [&] {
      auto arr = nlohmann::json::array();
      for (double w : rec.csi.I_tilde) arr.push_back(watt_to_dbm(w));
      return arr;
    }();
    periods.push_back(std::move(p));
  }
  return nlohmann::json{{"periods", periods}};
}

}  // namespace nifsim
