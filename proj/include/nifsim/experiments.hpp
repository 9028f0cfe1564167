#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "nifsim/run_config.hpp"
#include "nifsim/simulate.hpp"

namespace nifsim {

// ---------------------------------------------------------------------------
// Demand sampling
// ---------------------------------------------------------------------------

/// Random requirements with 0 <= d <= N and a full per-cell budget
/// (sum_u d = N_RF * N): units are handed out one at a time to a uniformly
/// random user below the cap.
inline RequirementVector sample_demands(const RadioConfig& cfg, Rng& rng) {
  if (static_cast<long long>(cfg.U) * cfg.N < static_cast<long long>(cfg.N_RF) * cfg.N)
    throw config_error("sample_demands: per-cell budget exceeds U*N");
  RequirementVector d(static_cast<std::size_t>(cfg.K) * cfg.U, 0);
  for (int k = 0; k < cfg.K; ++k) {
    for (int unit = 0; unit < cfg.N_RF * cfg.N; ++unit) {
      std::vector<int> open;
      for (int u = 0; u < cfg.U; ++u)
        if (d[k * cfg.U + u] < cfg.N) open.push_back(k * cfg.U + u);
      d[open[rng.bounded(open.size())]] += 1;
    }
  }
  return d;
}

/// Random requirements with a full per-cell budget and a zero clique bound,
/// drawn as the per-user element counts of a random complete conflict-free
/// packing: every slot receives an independent set with exactly N_RF users
/// per cell. Such a packing is itself a valid schedule with no unfulfilled
/// requirement, so the clique bound is zero by construction and the full
/// budget is met exactly.
inline RequirementVector sample_zero_bound_demands(const InterferenceGraph& g,
                                                   const RadioConfig& cfg, Rng& rng) {
  RequirementVector d(g.num_nodes(), 0);
  for (int n = 0; n < cfg.N; ++n) {
    bool slot_ok = false;
    for (int attempt = 0; attempt < 80 && !slot_ok; ++attempt) {
      std::vector<int> picked;
      std::vector<int> cells(cfg.K);
      for (int k = 0; k < cfg.K; ++k) cells[k] = k;
      for (int i = 0; i < cfg.K; ++i)
        std::swap(cells[i], cells[i + rng.bounded(cfg.K - i)]);
      bool ok = true;
      for (int k : cells) {
        std::vector<int> users(cfg.U);
        for (int u = 0; u < cfg.U; ++u) users[u] = k * cfg.U + u;
        for (int i = 0; i < cfg.U; ++i)
          std::swap(users[i], users[i + rng.bounded(cfg.U - i)]);
        int taken = 0;
        for (int v : users) {
          if (taken == cfg.N_RF) break;
          if (d[v] >= cfg.N) continue;  // a user fits at most once per slot
          bool conflict = false;
          for (int w : picked)
            if (g.has_edge(v, w)) {
              conflict = true;
              break;
            }
          if (!conflict) {
            picked.push_back(v);
            ++taken;
          }
        }
        if (taken < cfg.N_RF) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (int v : picked) ++d[v];
        slot_ok = true;
      }
    }
    // A dense user cluster can make a full conflict-free slot impossible;
    // callers redraw the realization in that case.
    if (!slot_ok)
      throw std::runtime_error("sample_zero_bound_demands: no zero-bound draw found");
  }
  return d;
}

/// One instance of the zero-bound experiment. Realizations whose geometry
/// admits no zero-bound demand vector are redrawn from a derived sub-stream,
/// keeping runs deterministic.
struct ZeroBoundInstance {
  NetworkScenario scenario;
  InterferenceGraph graph;
  RequirementVector d;
  std::uint64_t seed = 0;
};

inline ZeroBoundInstance make_zero_bound_instance(const RadioConfig& cfg, std::uint64_t base_seed,
                                                  std::uint64_t index) {
  for (std::uint64_t retry = 0; retry < 64; ++retry) {
    const std::uint64_t seed = derive_seed(base_seed, index + (retry << 32));
    NetworkScenario sc = NetworkScenario::generate(cfg, seed);
    InterferenceGraph g = InterferenceGraph::build(sc, cfg.epsilon);
    Rng rng(splitmix64(seed));
    try {
      RequirementVector d = sample_zero_bound_demands(g, cfg, rng);
      return ZeroBoundInstance{std::move(sc), std::move(g), std::move(d), seed};
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  throw std::runtime_error("make_zero_bound_instance: persistent sampling failure");
}

/// Demand file: one line per cell with U whitespace-separated integers.
/// With enforce_budget every cell must sum to exactly N_RF * N.
inline RequirementVector read_demand_text(const std::string& text, const RadioConfig& cfg,
                                          bool enforce_budget) {
  RequirementVector d(static_cast<std::size_t>(cfg.K) * cfg.U, 0);
  std::istringstream in(text);
  std::string line;
  int line_no = 0, k = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (k >= cfg.K)
      throw config_error("demand file line " + std::to_string(line_no) + ": more rows than cells");
    std::istringstream ls(line);
    long long sum = 0;
    for (int u = 0; u < cfg.U; ++u) {
      int v;
      if (!(ls >> v))
        throw config_error("demand file line " + std::to_string(line_no) + ": expected " +
                           std::to_string(cfg.U) + " integers");
      if (v < 0 || v > cfg.N)
        throw config_error("demand file line " + std::to_string(line_no) +
                           ": entry out of range [0, N]");
      d[k * cfg.U + u] = v;
      sum += v;
    }
    if (enforce_budget && sum != static_cast<long long>(cfg.N_RF) * cfg.N)
      throw config_error("demand file line " + std::to_string(line_no) + ": cell sum " +
                         std::to_string(sum) + " != N_RF*N");
    ++k;
  }
  if (k != cfg.K) throw config_error("demand file: expected one row per cell");
  return d;
}

inline RequirementVector read_demand_file(const std::string& path, const RadioConfig& cfg,
                                          bool enforce_budget) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open demand file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_demand_text(buf.str(), cfg, enforce_budget);
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

namespace detail {

inline void write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path.string());
  out << content;
  if (!out) throw io_error("write failed: " + path.string());
}

inline std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Writes scenario.json plus the interference graph (JSON with stats and the
/// plain edge list) for the first realization.
inline void cmd_scenario(const RunConfig& cfg) {
  const NetworkScenario sc = NetworkScenario::generate(cfg.radio, derive_seed(cfg.seed, 0));
  const InterferenceGraph g = InterferenceGraph::build(sc, cfg.radio.epsilon);
  GraphStats stats = analyze_graph(g, cfg.max_cycle_len);
  detail::write_file(cfg.out_dir, "scenario.json", to_json(sc).dump(2) + "\n");
  detail::write_file(cfg.out_dir, "graph.json", to_json(g, &stats).dump(2) + "\n");
  detail::write_file(cfg.out_dir, "graph.txt", to_edge_list_text(g));
}

/// Sweeps the interference threshold and writes per-epsilon mean edge counts
/// and mean chordless-cycle counts per length over the realizations.
inline void cmd_graph_stats(const RunConfig& cfg) {
  std::vector<double> eps = cfg.eps_list;
  if (eps.empty()) eps.push_back(cfg.radio.epsilon);
  const int R = cfg.realizations;
  const int lengths = cfg.max_cycle_len - 2;  // lengths 3..max_cycle_len

  std::vector<std::vector<double>> edge_sum(eps.size(), std::vector<double>(1, 0.0));
  std::vector<std::vector<double>> cycle_sum(eps.size(), std::vector<double>(lengths, 0.0));
  std::mutex mu;
  parallel_for(R, cfg.workers, [&](std::size_t i) {
    const NetworkScenario sc = NetworkScenario::generate(cfg.radio, derive_seed(cfg.seed, i));
    std::vector<double> edges(eps.size());
    std::vector<std::vector<double>> cycles(eps.size(), std::vector<double>(lengths, 0.0));
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const InterferenceGraph g = InterferenceGraph::build(sc, eps[e]);
      edges[e] = static_cast<double>(g.edges.size());
      const auto counts = count_induced_cycles(g, cfg.max_cycle_len);
      for (int len = 3; len <= cfg.max_cycle_len; ++len)
        cycles[e][len - 3] = static_cast<double>(counts.at(len));
    }
    std::lock_guard<std::mutex> lock(mu);
    for (std::size_t e = 0; e < eps.size(); ++e) {
      edge_sum[e][0] += edges[e];
      for (int l = 0; l < lengths; ++l) cycle_sum[e][l] += cycles[e][l];
    }
  });

  std::ostringstream csv;
  csv << "epsilon,realizations,mean_edges";
  for (int len = 3; len <= cfg.max_cycle_len; ++len) csv << ",mean_cycles_len" << len;
  csv << '\n';
  for (std::size_t e = 0; e < eps.size(); ++e) {
    csv << detail::fmt(eps[e]) << ',' << R << ',' << detail::fmt(edge_sum[e][0] / R);
    for (int l = 0; l < lengths; ++l) csv << ',' << detail::fmt(cycle_sum[e][l] / R);
    csv << '\n';
  }
  detail::write_file(cfg.out_dir, "graph_stats.csv", csv.str());
}

/// Single-shot scheduling experiment: per realization the chosen scheduler
/// runs against the clique lower bound; writes the unfulfilled-percentage CSV
/// and, for the first realization, the schedule itself.
inline void cmd_schedule(const RunConfig& cfg) {
  if (cfg.mode == SchedulerMode::IsBased)
    throw config_error("cmd_schedule: is_based needs CSI; use the simulate command");
  RequirementVector file_d;
  if (cfg.d_source == DemandSource::File) {
    if (cfg.d_file.empty()) throw config_error("cmd_schedule: d_source=file needs d_file");
    file_d = read_demand_file(cfg.d_file, cfg.radio, cfg.strict);
  }

  struct Row {
    std::uint64_t seed;
    long long n0_bound, n0_sched;
  };
  std::vector<Row> rows(cfg.realizations);
  std::mutex first_mu;
  bool first_written = false;
  parallel_for(cfg.realizations, cfg.workers, [&](std::size_t i) {
    std::uint64_t seed = derive_seed(cfg.seed, i);
    NetworkScenario sc;
    InterferenceGraph g;
    RequirementVector d;
    if (cfg.d_source == DemandSource::RandomZeroBound) {
      ZeroBoundInstance inst = make_zero_bound_instance(cfg.radio, cfg.seed, i);
      sc = std::move(inst.scenario);
      g = std::move(inst.graph);
      d = std::move(inst.d);
      seed = inst.seed;
    } else {
      sc = NetworkScenario::generate(cfg.radio, seed);
      g = InterferenceGraph::build(sc, cfg.radio.epsilon);
      Rng rng(splitmix64(seed));
      d = cfg.d_source == DemandSource::Random ? sample_demands(cfg.radio, rng) : file_d;
    }
    const long long bound = lower_bound_n0(g, d, cfg.radio.N);
    ScheduleMatrix S;
    switch (cfg.mode) {
      case SchedulerMode::Nif: S = schedule_nif(g, d, cfg.radio); break;
      case SchedulerMode::Greedy: S = schedule_greedy_per_slot(g, d, cfg.radio); break;
      case SchedulerMode::Uncoordinated: S = schedule_uncoordinated(g, d, cfg.radio); break;
      case SchedulerMode::IsBased: break;  // rejected above
    }
    const ScheduleStats st = validate_schedule(S, g, d, cfg.radio);
    rows[i] = Row{seed, bound, st.n0};
    if (i == 0) {
      std::lock_guard<std::mutex> lock(first_mu);
      if (!first_written) {
        first_written = true;
        detail::write_file(cfg.out_dir, "schedule.json", to_json(S).dump(2) + "\n");
        detail::write_file(cfg.out_dir, "schedule.csv", to_csv(S));
        detail::write_file(cfg.out_dir, "schedule_stats.json", to_json(st).dump(2) + "\n");
      }
    }
  });

  const double elements = static_cast<double>(cfg.radio.K) * cfg.radio.N_RF * cfg.radio.N;
  std::ostringstream csv;
  csv << "realization,seed,n0_bound,n0_scheme,pct_bound,pct_scheme\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv << i << ',' << rows[i].seed << ',' << rows[i].n0_bound << ',' << rows[i].n0_sched << ','
        << detail::fmt(100.0 * rows[i].n0_bound / elements) << ','
        << detail::fmt(100.0 * rows[i].n0_sched / elements) << '\n';
  }
  detail::write_file(cfg.out_dir, "schedule_stats.csv", csv.str());
}

/// Multi-period simulation across realizations; writes one metrics row per
/// (seed, period). With a Pmax sweep configured, also writes the feasibility
/// probability of the proposed and IS-based schemes per Pmax point.
inline void cmd_simulate(const RunConfig& cfg) {
  std::ostringstream csv;
  csv << "seed,period,total_power_dbm,ee_bits_per_joule,unfulfilled_rate_frac,n0_pct\n";
  if (cfg.radio.U == 0) {
    detail::write_file(cfg.out_dir, "metrics.csv", csv.str());
    return;
  }

  struct Rlz {
    std::uint64_t seed = 0;
    std::vector<PeriodMetrics> metrics;
    bool infeasible = false;
  };
  std::vector<Rlz> results(cfg.realizations);
  std::mutex trace_mu;
  bool trace_written = false;
  parallel_for(cfg.realizations, cfg.workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.seed, i);
    const NetworkScenario sc = NetworkScenario::generate(cfg.radio, seed);
    Rng rate_rng(splitmix64(seed ^ 0x5bf03635ULL));
    const std::vector<double> gamma = gen_rate_requirements(cfg.radio, rate_rng).flat();
    results[i].seed = seed;
    try {
      const RunTrace trace =
          run_consecutive(sc, gamma, cfg.radio, cfg.mode, cfg.zf, cfg.strict);
      for (const auto& rec : trace.periods) results[i].metrics.push_back(rec.metrics);
      if (i == 0) {
        std::lock_guard<std::mutex> lock(trace_mu);
        if (!trace_written) {
          trace_written = true;
          detail::write_file(cfg.out_dir, "trace.json", to_json(trace).dump() + "\n");
        }
      }
    } catch (const infeasible_error&) {
      results[i].infeasible = true;
    }
  });

  std::stable_sort(results.begin(), results.end(),
                   [](const Rlz& a, const Rlz& b) { return a.seed < b.seed; });
  std::ostringstream infeasible_csv;
  infeasible_csv << "seed\n";
  for (const auto& r : results) {
    if (r.infeasible) {
      infeasible_csv << r.seed << '\n';
      continue;
    }
    for (std::size_t t = 0; t < r.metrics.size(); ++t) {
      const auto& m = r.metrics[t];
      csv << r.seed << ',' << t + 1 << ','
          << detail::fmt(m.total_power_watt > 0.0 ? watt_to_dbm(m.total_power_watt) : -300.0)
          << ',' << detail::fmt(m.energy_efficiency) << ','
          << detail::fmt(m.unfulfilled_rate_frac) << ',' << detail::fmt(m.n0_pct) << '\n';
    }
  }
  detail::write_file(cfg.out_dir, "metrics.csv", csv.str());
  if (cfg.strict) detail::write_file(cfg.out_dir, "infeasible.csv", infeasible_csv.str());

  if (!cfg.pmax_list_dBm.empty()) {
    std::ostringstream feas;
    feas << "pmax_dbm,mode,feasible_frac\n";
    for (double pmax : cfg.pmax_list_dBm) {
      RadioConfig radio = cfg.radio;
      radio.Pmax_dBm = pmax;
      std::vector<int> ok_nif(cfg.realizations, 0), ok_is(cfg.realizations, 0);
      parallel_for(cfg.realizations, cfg.workers, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(cfg.seed, i);
        const NetworkScenario sc = NetworkScenario::generate(radio, seed);
        const InterferenceGraph g = InterferenceGraph::build(sc, radio.epsilon);
        Rng rate_rng(splitmix64(seed ^ 0x5bf03635ULL));
        const std::vector<double> gamma = gen_rate_requirements(radio, rate_rng).flat();
        const CsiState csi = initial_interference(sc, radio.eta, radio.p0_watt());
        ok_nif[i] = check_feasibility(csi.beta, gamma, enumerate_maximal_cliques(g), radio);
        ok_is[i] = is_based_feasible(g, gamma, csi, radio);
      });
      double f_nif = 0.0, f_is = 0.0;
      for (int i = 0; i < cfg.realizations; ++i) {
        f_nif += ok_nif[i];
        f_is += ok_is[i];
      }
      feas << detail::fmt(pmax) << ",nif," << detail::fmt(f_nif / cfg.realizations) << '\n';
      feas << detail::fmt(pmax) << ",is_based," << detail::fmt(f_is / cfg.realizations) << '\n';
    }
    detail::write_file(cfg.out_dir, "feasibility.csv", feas.str());
  }
}

}  // namespace nifsim
