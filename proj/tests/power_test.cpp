#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "nifsim/power.hpp"

using namespace nifsim;

namespace {

/// One-cell config with unit bandwidth so the exponents are easy to read.
RadioConfig unit_config(int U, int N_RF, int N, double pmax_dbm = 30.0) {
  RadioConfig cfg;
  cfg.K = 1;
  cfg.U = U;
  cfg.N_RF = N_RF;
  cfg.N = N;
  cfg.W_Hz = 1.0;
  cfg.Pmax_dBm = pmax_dbm;  // 30 dBm = 1 W
  return cfg;
}

CsiState csi_from_beta(const std::vector<double>& beta) {
  CsiState csi;
  csi.beta = beta;
  csi.alpha.assign(beta.size(), 1.0);
  csi.I_tilde.resize(beta.size());
  for (std::size_t v = 0; v < beta.size(); ++v) csi.I_tilde[v] = 1.0 / beta[v];
  return csi;
}

double objective(const std::vector<double>& gamma, const std::vector<double>& beta,
                 const RequirementVector& d, const RadioConfig& cfg) {
  double total = 0.0;
  for (std::size_t v = 0; v < gamma.size(); ++v) {
    if (gamma[v] <= 0.0 || d[v] == 0) continue;
    total += d[v] / beta[v] * (std::exp2(gamma[v] * cfg.N / (d[v] * cfg.W_Hz)) - 1.0);
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

TEST(MinRequiredElements, HandValue) {
  // gamma=1, N=16, W=1, beta*Pmax=3: ceil(16 / log2(4)) = 8.
  EXPECT_EQ(min_required_elements(1.0, 3.0, 16, 1.0, 1.0), 8);
}

TEST(MinRequiredElements, ZeroRateNeedsNothing) {
  EXPECT_EQ(min_required_elements(0.0, 3.0, 16, 1.0, 1.0), 0);
}

TEST(MinRequiredElements, AboveNSignalsInfeasibility) {
  // gamma*N/W = 64 at log2(1+beta*Pmax) = 1 requires 64 > N elements.
  EXPECT_GT(min_required_elements(4.0, 1.0, 16, 1.0, 1.0), 16);
}

TEST(PerElementPower, HandValues) {
  // gamma*N/(d*W) = 2, beta = 1 -> 2^2 - 1 = 3.
  EXPECT_DOUBLE_EQ(per_element_power(1.0, 1.0, 8, 16, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(per_element_power(0.0, 1.0, 8, 16, 1.0), 0.0);
  // Doubling the elements drops the exponent to 1: 2^1 - 1 = 1.
  EXPECT_DOUBLE_EQ(per_element_power(1.0, 1.0, 16, 16, 1.0), 1.0);
}

TEST(PerElementPower, MonotoneDecreasingInElements) {
  double prev = per_element_power(2.0, 0.7, 1, 16, 1.0);
  for (int d = 2; d <= 16; ++d) {
    const double p = per_element_power(2.0, 0.7, d, 16, 1.0);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(PerElementPower, ZeroElementsWithPositiveRateThrows) {
  EXPECT_THROW(per_element_power(1.0, 1.0, 0, 16, 1.0), std::domain_error);
}

TEST(PowerTerm, IntegerConvexity) {
  for (double gamma : {0.5, 1.0, 2.5}) {
    for (double beta : {0.3, 1.0, 40.0}) {
      for (int d = 2; d < 16; ++d) {
        const double a = detail::power_term(gamma, beta, d - 1, 16, 1.0);
        const double b = detail::power_term(gamma, beta, d, 16, 1.0);
        const double c = detail::power_term(gamma, beta, d + 1, 16, 1.0);
        EXPECT_GE(a + c - 2.0 * b, -1e-9) << "gamma " << gamma << " d " << d;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Relaxed solve
// ---------------------------------------------------------------------------

TEST(RelaxedSolve, SingleUserSaturatesAtN) {
  const auto cfg = unit_config(1, 1, 8);
  const auto sol = solve_relaxed_p5({1.0}, {0.5}, {{0}}, cfg, {4});
  EXPECT_NEAR(sol.d[0], 8.0, 1e-9);
  EXPECT_LE(sol.kkt_residual, 1e-6);
}

TEST(RelaxedSolve, SymmetricAdjacentPairSplitsEvenly) {
  const auto cfg = unit_config(2, 2, 8);
  const auto sol = solve_relaxed_p5({1.0, 1.0}, {1.0, 1.0}, {{0, 1}}, cfg, {1, 1});
  EXPECT_NEAR(sol.d[0], 4.0, 1e-6);
  EXPECT_NEAR(sol.d[1], 4.0, 1e-6);
  EXPECT_LE(sol.kkt_residual, 1e-6);
}

TEST(RelaxedSolve, LowerBoundsEveryFeasibleIntegerPoint) {
  // Exhaustive integer-grid oracle on small instances.
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const int n = 2 + static_cast<int>(rng.bounded(3));  // 2..4 users
    const int N = 6 + static_cast<int>(rng.bounded(3));  // 6..8 slots
    auto cfg = unit_config(n, 2, N);
    std::vector<double> beta(n), gamma(n);
    for (int v = 0; v < n; ++v) {
      beta[v] = 0.5 + 3.5 * rng.uniform01();
      gamma[v] = 0.2 + 0.4 * rng.uniform01();  // keeps the floors small
    }
    // Random clique structure over the users.
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform01() < 0.5) e.emplace_back(i, j);
    const auto g = InterferenceGraph::from_edges(1, n, e);
    const auto cliques = enumerate_maximal_cliques(g);

    RequirementVector lo(n);
    for (int v = 0; v < n; ++v)
      lo[v] = min_required_elements(gamma[v], beta[v], N, 1.0, cfg.pmax_watt());
    if (!check_feasibility(beta, gamma, cliques, cfg)) continue;

    const auto sol = solve_relaxed_p5(beta, gamma, cliques, cfg, lo);
    ASSERT_LE(sol.kkt_residual, 1e-6) << "seed " << seed;

    // Enumerate all integer-feasible vectors.
    RequirementVector d(n, 0);
    std::function<void(int)> enumerate = [&](int v) {
      if (v == n) {
        for (const auto& c : cliques) {
          long long sum = 0;
          for (int u : c) sum += d[u];
          if (sum > N) return;
        }
        long long cell = std::accumulate(d.begin(), d.end(), 0LL);
        if (cell > static_cast<long long>(cfg.N_RF) * N) return;
        const double obj = objective(gamma, beta, d, cfg);
        ASSERT_LE(sol.objective, obj * (1.0 + 1e-7) + 1e-12)
            << "relaxed bound above an integer point, seed " << seed;
        return;
      }
      for (int x = lo[v]; x <= N; ++x) {
        d[v] = x;
        enumerate(v + 1);
      }
    };
    enumerate(0);
  }
}

TEST(RelaxedSolve, InfeasibleFloorsThrow) {
  const auto cfg = unit_config(2, 2, 8);
  EXPECT_THROW(solve_relaxed_p5({1.0, 1.0}, {1.0, 1.0}, {{0, 1}}, cfg, {6, 6}),
               infeasible_error);
}

// ---------------------------------------------------------------------------
// Integer repair
// ---------------------------------------------------------------------------

TEST(AllocateResources, IntegralFeasibleInputUnchanged) {
  const auto cfg = unit_config(2, 2, 16);
  const auto res = allocate_resources({5.0, 7.0}, 1.0, {1.0, 1.0}, {1.0, 1.0}, {{0, 1}}, cfg,
                                      {1, 1}, false);
  EXPECT_EQ(res.d, (RequirementVector{5, 7}));
}

TEST(AllocateResources, SymmetricHalfRoundsRepairByConvexity) {
  const auto cfg = unit_config(2, 2, 16);
  const auto res = allocate_resources({8.5, 8.5}, 1.0, {1.0, 1.0}, {1.0, 1.0}, {{0, 1}}, cfg,
                                      {1, 1}, false);
  EXPECT_EQ(res.d, (RequirementVector{8, 8}));
}

TEST(AllocateResources, RepairBlockedByFloorsThrows) {
  const auto cfg = unit_config(2, 2, 16);
  EXPECT_THROW(allocate_resources({9.0, 9.0}, 1.0, {1.0, 1.0}, {1.0, 1.0}, {{0, 1}}, cfg,
                                  {9, 9}, false),
               infeasible_error);
}

TEST(AllocateResources, CellBudgetRepaired) {
  auto cfg = unit_config(3, 1, 6);  // cell budget N_RF*N = 6
  const auto res = allocate_resources({4.0, 3.0, 3.0}, 1.0, {1.0, 1.0, 1.0},
                                      {0.5, 0.5, 0.5}, {}, cfg, {1, 1, 1}, false);
  const long long sum = res.d[0] + res.d[1] + res.d[2];
  EXPECT_LE(sum, 6);
  EXPECT_GE(res.integer_objective, res.relaxed_optimum);
}

// ---------------------------------------------------------------------------
// Feasibility check
// ---------------------------------------------------------------------------

TEST(CheckFeasibility, AllZeroRatesFeasible) {
  const auto cfg = unit_config(3, 2, 8);
  EXPECT_TRUE(check_feasibility({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {{0, 1, 2}}, cfg));
}

TEST(CheckFeasibility, SingleUserNeedingMoreThanNIsInfeasible) {
  const auto cfg = unit_config(1, 1, 8);
  // need = ceil(4*8 / log2(2)) = 32 > 8.
  EXPECT_FALSE(check_feasibility({1.0}, {4.0}, {{0}}, cfg));
}

TEST(CheckFeasibility, TriangleFloorSumJustAboveN) {
  const auto cfg = unit_config(3, 3, 6);
  // Floors: gamma*N at log2(1+beta*Pmax)=1 -> (3, 2, 2); sum 7 > N = 6.
  const std::vector<double> beta{1.0, 1.0, 1.0};
  const std::vector<double> gamma{0.5, 1.0 / 3.0, 1.0 / 3.0};
  EXPECT_FALSE(check_feasibility(beta, gamma, {{0, 1, 2}}, cfg));
  // The same floors fit when the budget grows to 7.
  const auto cfg7 = unit_config(3, 3, 7);
  const std::vector<double> gamma7{3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0};
  EXPECT_TRUE(check_feasibility(beta, gamma7, {{0, 1, 2}}, cfg7));
}

// ---------------------------------------------------------------------------
// Fill stage
// ---------------------------------------------------------------------------

TEST(FillStage, FullScheduleOnlyComputesPowers) {
  const auto cfg = unit_config(1, 1, 4);
  const auto g = InterferenceGraph::from_edges(1, 1, {});
  ScheduleMatrix S(1, 1, 4, 1);
  for (int n = 0; n < 4; ++n) S.at(0, 0, n) = 1;
  const auto [S2, P] = fill_and_allocate_power(S, g, {1.0}, {0.5}, cfg, false);
  EXPECT_TRUE(S2 == S);
  const double expected = per_element_power(0.5, 1.0, 4, 4, 1.0);
  for (int n = 0; n < 4; ++n) EXPECT_DOUBLE_EQ(P.at(0, 0, n), expected);
}

TEST(FillStage, EligibleUserGainsSlotAndPowerDrops) {
  const auto cfg = unit_config(2, 1, 2);
  const auto g = InterferenceGraph::from_edges(1, 2, {{0, 1}});
  ScheduleMatrix S(1, 1, 2, 2);
  S.at(0, 0, 0) = 1;  // user 0 holds slot 0; slot 1 is free
  const std::vector<double> gamma{0.5, 0.0};
  const auto p_before = per_element_power(0.5, 1.0, 1, 2, 1.0);
  const auto [S2, P] = fill_and_allocate_power(S, g, {1.0, 1.0}, gamma, cfg, false);
  EXPECT_EQ(S2.at(0, 0, 1), 1);  // user 0 won the free element
  EXPECT_LT(P.at(0, 0, 1), p_before);
  EXPECT_DOUBLE_EQ(P.at(0, 0, 0), P.at(0, 0, 1));
}

TEST(FillStage, BlockedElementStaysMutedAtZeroPower) {
  RadioConfig cfg = unit_config(1, 1, 1);
  cfg.K = 2;
  const auto g = InterferenceGraph::from_edges(2, 1, {{0, 1}});
  ScheduleMatrix S(2, 1, 1, 1);
  S.at(0, 0, 0) = 1;  // cell 0 serves its user; cell 1's candidate is adjacent
  const auto [S2, P] = fill_and_allocate_power(S, g, {1.0, 1.0}, {0.5, 0.5}, cfg, false);
  EXPECT_EQ(S2.at(1, 0, 0), 0);
  EXPECT_DOUBLE_EQ(P.at(1, 0, 0), 0.0);
}

// ---------------------------------------------------------------------------
// Joint pipeline
// ---------------------------------------------------------------------------

TEST(JointPipeline, SingleUserClosedForm) {
  const auto cfg = unit_config(1, 1, 8);
  const auto g = InterferenceGraph::from_edges(1, 1, {});
  const auto res = joint_pipeline(g, {0.5}, csi_from_beta({1.0}), cfg, true);
  EXPECT_TRUE(res.alloc.feasible);
  EXPECT_EQ(res.alloc.d[0], 8);
  EXPECT_EQ(res.d_hat[0], 8);
  const double expected = 8.0 * (std::exp2(0.5) - 1.0);
  EXPECT_NEAR(res.total_power_watt, expected, 1e-9);
  EXPECT_NEAR(res.alloc.relaxed_optimum, expected, 1e-6);
}

TEST(JointPipeline, AllZeroRatesGiveZeroPower) {
  const auto cfg = unit_config(3, 2, 8);
  const auto g = InterferenceGraph::from_edges(1, 3, {{0, 1}});
  const auto res = joint_pipeline(g, {0.0, 0.0, 0.0}, csi_from_beta({1.0, 1.0, 1.0}), cfg, true);
  EXPECT_DOUBLE_EQ(res.total_power_watt, 0.0);
  EXPECT_TRUE(res.violations.empty());
}

TEST(JointPipeline, LowerBoundChainHolds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    auto cfg = unit_config(4, 2, 8);
    std::vector<double> beta(4), gamma(4);
    for (int v = 0; v < 4; ++v) {
      beta[v] = 0.5 + 3.0 * rng.uniform01();
      gamma[v] = 0.2 + 0.3 * rng.uniform01();
    }
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (rng.uniform01() < 0.4) e.emplace_back(i, j);
    const auto g = InterferenceGraph::from_edges(1, 4, e);
    if (!check_feasibility(beta, gamma, enumerate_maximal_cliques(g), cfg)) continue;
    const auto res = joint_pipeline(g, gamma, csi_from_beta(beta), cfg, true);
    ASSERT_TRUE(res.violations.empty());
    ASSERT_LE(res.alloc.kkt_residual, 1e-6);
    ASSERT_LE(res.alloc.relaxed_optimum, res.alloc.integer_objective * (1.0 + 1e-7) + 1e-12);
    if (res.n0 == 0) {
      // Every fill only lowers the objective below the integer allocation.
      ASSERT_LE(res.total_power_watt, res.alloc.integer_objective * (1.0 + 1e-7) + 1e-12);
    }
  }
}

TEST(JointPipeline, RateGuaranteeExactUnderSimplifiedSinr) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed * 17 + 3);
    auto cfg = unit_config(4, 2, 8);
    std::vector<double> beta(4), gamma(4);
    for (int v = 0; v < 4; ++v) {
      beta[v] = 0.5 + 3.0 * rng.uniform01();
      gamma[v] = 0.2 + 0.3 * rng.uniform01();
    }
    const auto g = InterferenceGraph::from_edges(1, 4, {{0, 1}, {2, 3}});
    if (!check_feasibility(beta, gamma, enumerate_maximal_cliques(g), cfg)) continue;
    const auto res = joint_pipeline(g, gamma, csi_from_beta(beta), cfg, true);
    for (int v = 0; v < 4; ++v) {
      if (res.d_hat[v] == 0) continue;
      // All elements of one user carry the same power.
      double p = -1.0;
      for (int k = 0; k < cfg.K; ++k)
        for (int r = 0; r < cfg.N_RF; ++r)
          for (int n = 0; n < cfg.N; ++n)
            if (res.S.node_at(k, r, n) == v) {
              if (p < 0.0)
                p = res.P.at(k, r, n);
              else
                ASSERT_DOUBLE_EQ(res.P.at(k, r, n), p);
            }
      const double rate =
          static_cast<double>(res.d_hat[v]) / cfg.N * cfg.W_Hz * std::log2(1.0 + beta[v] * p);
      ASSERT_GE(rate, gamma[v] * (1.0 - 1e-9)) << "seed " << seed << " user " << v;
    }
  }
}

TEST(JointPipeline, InfeasibleStrictThrows) {
  const auto cfg = unit_config(1, 1, 8);
  const auto g = InterferenceGraph::from_edges(1, 1, {});
  EXPECT_THROW(joint_pipeline(g, {4.0}, csi_from_beta({1.0}), cfg, true), infeasible_error);
}

TEST(JointPipeline, BestEffortClampsAtPmax) {
  const auto cfg = unit_config(2, 1, 8);
  const auto g = InterferenceGraph::from_edges(1, 2, {{0, 1}});
  // Both users want far more than a period can carry.
  const auto res = joint_pipeline(g, {4.0, 4.0}, csi_from_beta({1.0, 1.0}), cfg, false);
  EXPECT_FALSE(res.alloc.feasible);
  EXPECT_TRUE(res.alloc.best_effort);
  EXPECT_LE(res.P.max_element(), cfg.pmax_watt() * (1.0 + 1e-12));
  EXPECT_TRUE(res.violations.empty());
}

// ---------------------------------------------------------------------------
// IS baseline
// ---------------------------------------------------------------------------

TEST(IsBased, EdgelessSingleCellFormsOneSetWithAllSlots) {
  const auto cfg = unit_config(2, 2, 8);
  const auto g = InterferenceGraph::from_edges(1, 2, {});
  const auto res = schedule_is_based(g, {0.5, 0.5}, csi_from_beta({1.0, 1.0}), cfg, true);
  EXPECT_TRUE(res.alloc.feasible);
  EXPECT_EQ(res.d_hat[0], 8);
  EXPECT_EQ(res.d_hat[1], 8);
  const double per_user = 8.0 * (std::exp2(0.5) - 1.0);
  EXPECT_NEAR(res.total_power_watt, 2.0 * per_user, 1e-9);
}

TEST(IsBased, MutuallyAdjacentEqualUsersSplitThePeriod) {
  const auto cfg = unit_config(2, 2, 8);
  const auto g = InterferenceGraph::from_edges(1, 2, {{0, 1}});
  const auto res = schedule_is_based(g, {0.4, 0.4}, csi_from_beta({1.0, 1.0}), cfg, true);
  EXPECT_EQ(res.alloc.d[0], 4);
  EXPECT_EQ(res.alloc.d[1], 4);
  EXPECT_EQ(res.d_hat[0], 4);
  EXPECT_EQ(res.d_hat[1], 4);
  EXPECT_TRUE(res.violations.empty());
}

TEST(IsBased, InfeasibleNeedsSetBestEffortAndClamp) {
  const auto cfg = unit_config(2, 1, 4);
  const auto g = InterferenceGraph::from_edges(1, 2, {{0, 1}});
  const auto res = schedule_is_based(g, {2.0, 2.0}, csi_from_beta({1.0, 1.0}), cfg, false);
  EXPECT_TRUE(res.alloc.best_effort);
  EXPECT_LE(res.P.max_element(), cfg.pmax_watt() * (1.0 + 1e-12));
  EXPECT_THROW(schedule_is_based(g, {2.0, 2.0}, csi_from_beta({1.0, 1.0}), cfg, true),
               infeasible_error);
}

TEST(IsBased, FeasibilityHelperAgreesWithStrictRun) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed + 400);
    auto cfg = unit_config(4, 2, 8);
    std::vector<double> beta(4), gamma(4);
    for (int v = 0; v < 4; ++v) {
      beta[v] = 0.3 + 2.0 * rng.uniform01();
      gamma[v] = 0.3 + 0.8 * rng.uniform01();
    }
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (rng.uniform01() < 0.4) e.emplace_back(i, j);
    const auto g = InterferenceGraph::from_edges(1, 4, e);
    const bool expected = is_based_feasible(g, gamma, csi_from_beta(beta), cfg);
    bool threw = false;
    try {
      schedule_is_based(g, gamma, csi_from_beta(beta), cfg, true);
    } catch (const infeasible_error&) {
      threw = true;
    }
    EXPECT_EQ(expected, !threw) << "seed " << seed;
  }
}
