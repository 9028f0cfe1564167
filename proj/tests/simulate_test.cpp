#include <gtest/gtest.h>

#include <cmath>

#include "nifsim/experiments.hpp"
#include "nifsim/simulate.hpp"

using namespace nifsim;

namespace {

NetworkScenario one_user_scenario(std::uint64_t seed = 2) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = 1;
  cfg.N_RF = 1;
  cfg.N = 4;
  return NetworkScenario::generate(cfg, seed);
}

}  // namespace

TEST(ComputeSinr, SingleElementIsSignalOverNoise) {
  const auto sc = one_user_scenario();
  ScheduleMatrix S(1, 1, 4, 1);
  S.at(0, 0, 2) = 1;
  PowerMatrix P(1, 1, 4);
  P.at(0, 0, 2) = 0.05;
  const auto grid = compute_sinr(sc, S, P, false);
  const double expected = 0.05 * sc.local_gain(0) / sc.noise_watt();
  EXPECT_DOUBLE_EQ(grid.at(0, 0, 2), expected);
  EXPECT_DOUBLE_EQ(grid.at(0, 0, 0), 0.0);
}

TEST(ComputeSinr, ZfRemovesIntraCellTermOnly) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = 2;
  cfg.N_RF = 2;
  cfg.N = 2;
  const auto sc = NetworkScenario::generate(cfg, 9);
  ScheduleMatrix S(1, 2, 2, 2);
  S.at(0, 0, 0) = 1;
  S.at(0, 1, 0) = 2;
  PowerMatrix P(1, 2, 2);
  P.at(0, 0, 0) = 0.1;
  P.at(0, 1, 0) = 0.1;
  const auto plain = compute_sinr(sc, S, P, false);
  const auto zf = compute_sinr(sc, S, P, true);
  EXPECT_GT(zf.at(0, 0, 0), plain.at(0, 0, 0));
  EXPECT_GT(zf.at(0, 1, 0), plain.at(0, 1, 0));
  // With intra-cell interference gone the SINR is signal over noise.
  EXPECT_DOUBLE_EQ(zf.at(0, 0, 0), 0.1 * sc.local_gain(0) / sc.noise_watt());
}

TEST(ComputeSinr, NifScheduleKeepsPairwiseRatiosBelowEpsilon) {
  RadioConfig cfg;  // defaults: K=7, U=8, eps=0.08
  const auto sc = NetworkScenario::generate(cfg, 33);
  const auto g = InterferenceGraph::build(sc, cfg.epsilon);
  Rng rng(33);
  const auto d = sample_zero_bound_demands(g, cfg, rng);
  const auto S = schedule_nif(g, d, cfg);
  for (int n = 0; n < cfg.N; ++n) {
    std::vector<int> active;
    for (int k = 0; k < cfg.K; ++k)
      for (int r = 0; r < cfg.N_RF; ++r)
        if (S.at(k, r, n) != 0) active.push_back(S.node_at(k, r, n));
    for (int a : active)
      for (int b : active) {
        if (a == b) continue;
        const double desired =
            sc.path_loss_lin[sc.cell_of(a)][a] * sc.gain_cache[a][a];
        const double cross = sc.path_loss_lin[sc.cell_of(b)][a] * sc.gain_cache[b][a];
        ASSERT_LE(cross / desired, cfg.epsilon * (1.0 + 1e-12));
      }
  }
}

TEST(ComputeRates, UnscheduledUserHasZeroRate) {
  const auto sc = one_user_scenario();
  ScheduleMatrix S(1, 1, 4, 1);
  PowerMatrix P(1, 1, 4);
  EXPECT_DOUBLE_EQ(compute_rates(sc, S, P, false)[0], 0.0);
}

TEST(ComputeRates, SingleElementHandValue) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = 1;
  cfg.N_RF = 1;
  cfg.N = 16;
  cfg.W_Hz = 1.0;
  const auto sc = NetworkScenario::generate(cfg, 4);
  ScheduleMatrix S(1, 1, 16, 1);
  S.at(0, 0, 0) = 1;
  PowerMatrix P(1, 1, 16);
  P.at(0, 0, 0) = 3.0 * sc.noise_watt() / sc.local_gain(0);  // rho = 3
  const auto rates = compute_rates(sc, S, P, false);
  EXPECT_NEAR(rates[0], 2.0 / 16.0, 1e-12);  // W*log2(4)/N
}

TEST(ComputeRates, ElementsScaleRateLinearlyAtFixedSinr) {
  const auto sc = one_user_scenario();
  ScheduleMatrix S1(1, 1, 4, 1), S2(1, 1, 4, 1);
  S1.at(0, 0, 0) = 1;
  S2.at(0, 0, 0) = 1;
  S2.at(0, 0, 1) = 1;
  PowerMatrix P1(1, 1, 4), P2(1, 1, 4);
  P1.at(0, 0, 0) = 0.02;
  P2.at(0, 0, 0) = 0.02;
  P2.at(0, 0, 1) = 0.02;
  EXPECT_NEAR(compute_rates(sc, S2, P2, false)[0], 2.0 * compute_rates(sc, S1, P1, false)[0],
              1e-12);
}

TEST(InitialInterference, ZeroEtaGivesPureNoise) {
  RadioConfig cfg;
  const auto sc = NetworkScenario::generate(cfg, 8);
  const auto csi = initial_interference(sc, 0.0, cfg.p0_watt());
  for (double i : csi.I_tilde) EXPECT_DOUBLE_EQ(i, sc.noise_watt());
}

TEST(InitialInterference, ClosedFormSingleCell) {
  const auto sc = one_user_scenario();
  const auto& cfg = sc.config;
  const double eta = 0.2;
  const auto csi = initial_interference(sc, eta, cfg.p0_watt());
  const double expected =
      eta * cfg.N_RF * cfg.p0_watt() * sc.path_loss_lin[0][0] * cfg.g_min + sc.noise_watt();
  EXPECT_DOUBLE_EQ(csi.I_tilde[0], expected);
  EXPECT_DOUBLE_EQ(csi.alpha[0], sc.local_gain(0));
  EXPECT_DOUBLE_EQ(csi.beta[0], csi.alpha[0] / csi.I_tilde[0]);
}

TEST(InitialInterference, LinearInEta) {
  RadioConfig cfg;
  const auto sc = NetworkScenario::generate(cfg, 12);
  const auto a = initial_interference(sc, 0.2, cfg.p0_watt());
  const auto b = initial_interference(sc, 0.4, cfg.p0_watt());
  const double p_n = sc.noise_watt();
  for (int v = 0; v < cfg.num_users(); ++v) {
    EXPECT_GT(a.I_tilde[v], p_n);
    EXPECT_NEAR(b.I_tilde[v] - p_n, 2.0 * (a.I_tilde[v] - p_n), (b.I_tilde[v] - p_n) * 1e-12);
  }
}

TEST(MeasureInterference, IsolatedUserMeasuresNoise) {
  const auto sc = one_user_scenario();
  ScheduleMatrix S(1, 1, 4, 1);
  S.at(0, 0, 1) = 1;
  PowerMatrix P(1, 1, 4);
  P.at(0, 0, 1) = 0.1;
  CsiState prev = initial_interference(sc, 0.5, sc.config.p0_watt());
  const auto next = measure_interference(sc, S, P, false, prev);
  EXPECT_DOUBLE_EQ(next.I_tilde[0], sc.noise_watt());
}

TEST(MeasureInterference, SingleSlotEqualsThatSlotExactly) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = 2;
  cfg.N_RF = 2;
  cfg.N = 2;
  const auto sc = NetworkScenario::generate(cfg, 21);
  ScheduleMatrix S(1, 2, 2, 2);
  S.at(0, 0, 0) = 1;
  S.at(0, 1, 0) = 2;
  PowerMatrix P(1, 2, 2);
  P.at(0, 0, 0) = 0.05;
  P.at(0, 1, 0) = 0.08;
  CsiState prev = initial_interference(sc, 0.0, cfg.p0_watt());
  const auto next = measure_interference(sc, S, P, false, prev);
  const double on_user0 = 0.08 * sc.path_loss_lin[0][0] * sc.gain_cache[1][0] + sc.noise_watt();
  EXPECT_DOUBLE_EQ(next.I_tilde[0], on_user0);
  EXPECT_DOUBLE_EQ(next.beta[0], next.alpha[0] / next.I_tilde[0]);
}

TEST(MeasureInterference, UnservedUserKeepsPreviousEstimate) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = 2;
  cfg.N_RF = 1;
  cfg.N = 2;
  const auto sc = NetworkScenario::generate(cfg, 23);
  ScheduleMatrix S(1, 1, 2, 2);
  S.at(0, 0, 0) = 1;  // user 2 unserved
  PowerMatrix P(1, 1, 2);
  P.at(0, 0, 0) = 0.1;
  CsiState prev = initial_interference(sc, 0.7, cfg.p0_watt());
  const auto next = measure_interference(sc, S, P, false, prev);
  EXPECT_DOUBLE_EQ(next.I_tilde[1], prev.I_tilde[1]);
}

TEST(RunConsecutive, InterferenceFreeNetworkReachesFixedPoint) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = 1;
  cfg.N_RF = 1;
  cfg.N = 4;
  cfg.periods = 6;
  cfg.W_Hz = 1e6;
  const auto sc = NetworkScenario::generate(cfg, 3);
  const std::vector<double> gamma{0.4e6};
  const auto trace = run_consecutive(sc, gamma, cfg, SchedulerMode::Nif, false, false);
  ASSERT_EQ(trace.periods.size(), 6u);
  for (std::size_t t = 2; t < trace.periods.size(); ++t) {
    EXPECT_TRUE(trace.periods[t].S == trace.periods[1].S);
    EXPECT_EQ(trace.periods[t].P.p, trace.periods[1].P.p);
    EXPECT_DOUBLE_EQ(trace.periods[t].metrics.total_power_watt,
                     trace.periods[1].metrics.total_power_watt);
  }
  // The design guarantee: planned rates meet the requirement from period 2 on.
  EXPECT_GE(trace.periods[1].metrics.ratio[0], 1.0 - 1e-9);
}

TEST(Summarize, AllRatiosAtOneGiveStepCdf) {
  RunTrace t;
  PeriodRecord rec;
  rec.metrics.ratio = {1.0, 1.0, 1.0};
  rec.metrics.total_power_watt = 2.0;
  rec.metrics.energy_efficiency = 5.0;
  t.periods.push_back(rec);
  const auto s = summarize_metrics({t});
  for (int b = 0; b < MetricsSummary::kCdfBins; ++b) {
    if (s.cdf_edges[b] < 1.0)
      EXPECT_DOUBLE_EQ(s.cdf_values[b], 0.0);
    else
      EXPECT_DOUBLE_EQ(s.cdf_values[b], 1.0);
  }
}

TEST(Summarize, EmptyInputThrows) {
  EXPECT_THROW(summarize_metrics({}), std::invalid_argument);
  RunTrace empty;
  EXPECT_THROW(summarize_metrics({empty}), std::invalid_argument);
}

TEST(Summarize, MeanPowerIsArithmetic) {
  RunTrace a, b;
  PeriodRecord ra, rb;
  ra.metrics.total_power_watt = 1.0;
  rb.metrics.total_power_watt = 3.0;
  a.periods.push_back(ra);
  b.periods.push_back(rb);
  EXPECT_DOUBLE_EQ(summarize_metrics({a, b}).mean_total_power_watt, 2.0);
}

TEST(RunConsecutive, TableScaleSmoke) {
  RadioConfig cfg;  // 7 cells, 8 users
  cfg.periods = 2;
  const auto sc = NetworkScenario::generate(cfg, 1001);
  Rng rng(55);
  const auto gamma = gen_rate_requirements(cfg, rng).flat();
  const auto trace = run_consecutive(sc, gamma, cfg, SchedulerMode::Nif, false, false);
  ASSERT_EQ(trace.periods.size(), 2u);
  const auto g = InterferenceGraph::build(sc, cfg.epsilon);
  for (const auto& rec : trace.periods) {
    const auto st =
        validate_schedule(rec.S, g, RequirementVector(cfg.num_users(), cfg.N), cfg);
    EXPECT_TRUE(st.valid());
    EXPECT_GE(rec.metrics.energy_efficiency, 0.0);
  }
}

TEST(ZfMode, NeverLowersAnySinr) {
  RadioConfig cfg;
  cfg.periods = 1;
  const auto sc = NetworkScenario::generate(cfg, 77);
  Rng rng(77);
  const auto gamma = gen_rate_requirements(cfg, rng).flat();
  const auto trace = run_consecutive(sc, gamma, cfg, SchedulerMode::Nif, false, false);
  const auto& rec = trace.periods[0];
  const auto plain = compute_sinr(sc, rec.S, rec.P, false);
  const auto zf = compute_sinr(sc, rec.S, rec.P, true);
  for (std::size_t i = 0; i < plain.rho.size(); ++i) ASSERT_GE(zf.rho[i], plain.rho[i]);
  // Energy efficiency on identical schedules and powers can only improve.
  const auto r_plain = compute_rates(sc, rec.S, rec.P, false);
  const auto r_zf = compute_rates(sc, rec.S, rec.P, true);
  double sum_plain = 0.0, sum_zf = 0.0;
  for (std::size_t v = 0; v < r_plain.size(); ++v) {
    sum_plain += r_plain[v];
    sum_zf += r_zf[v];
  }
  EXPECT_GE(sum_zf, sum_plain);
}
