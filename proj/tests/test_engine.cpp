#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "support.hpp"

using namespace ehpc;
using support::make_scenario;

namespace {

// The single-UE desk scenario: delta = 0, h = g = 1e-3, mu = 0.5, eps = 0.2,
// p_cir = 1e-6 W, sigma^2 = 1e-14 W, target 0.05.
Scenario single_ue(double delta = 0.0) { return make_scenario({{.g = 1e-3, .mu = 0.5, .p_cir = 1e-6, .gamma = 0.05}}, 1e-14, delta); }

ScenarioTemplate desk_template(std::size_t k = 5) {
  auto f = load_scenario_file(support::config_path("desk_consistent.json"));
  f.tpl.config.num_ues = k;
  return f.tpl;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(FixedPoint, SingleUeClosedForm) {
  const auto s = single_ue();
  const auto tr = run_fixed_point(Algorithm::tpceh, s, default_initial_power(s), 1e-12, 1000);
  ASSERT_TRUE(tr.converged);
  EXPECT_NEAR(tr.fixed_point.p_u[0] / 5e-13, 1.0, 1e-9);
  EXPECT_NEAR(tr.fixed_point.p_h / 2.000005e-3, 1.0, 1e-9);
}

TEST(FixedPoint, SingleUeWithSelfInterference) {
  const double delta = 1e-6;
  const auto s = single_ue(delta);
  const double k = 0.05 / (1e-3 * 0.2 * 0.5 * 1e-3);  // gamma / (h eps mu g)
  const double p_min = 1e-6 / (0.5 * 1e-3);
  const double ph = (k * 1e-14 + p_min) / (1.0 - k * delta);
  const double pu = 0.05 * (delta * ph + 1e-14) / 1e-3;
  const auto tr = run_fixed_point(Algorithm::tpceh, s, default_initial_power(s), 1e-13, 10000);
  ASSERT_TRUE(tr.converged);
  EXPECT_NEAR(tr.fixed_point.p_h / ph, 1.0, 1e-9);
  EXPECT_NEAR(tr.fixed_point.p_u[0] / pu, 1.0, 1e-9);
}

TEST(FixedPoint, StartingAtFixedPoint) {
  const auto s = support::fixed_snapshot("desk_consistent.json");
  for (auto a : kAllAlgorithms) {
    const auto first = run_fixed_point(a, s, default_initial_power(s), 1e-14, 100000, false);
    ASSERT_TRUE(first.converged) << to_string(a);
    const auto again = run_fixed_point(a, s, first.fixed_point, 1e-9, 100000, false);
    EXPECT_TRUE(again.converged);
    EXPECT_LE(again.iterations_used, 1u) << to_string(a);
  }
}

TEST(FixedPoint, FixedSnapshotMeetsTargets) {
  const auto s = support::fixed_snapshot("paper_4a.json");
  ASSERT_DOUBLE_EQ(s.config.delta, 1e-12);
  const auto tr = run_fixed_point(Algorithm::tpceh, s);
  ASSERT_TRUE(tr.converged);
  const auto m = metrics(tr.fixed_point, s);
  const double target[] = {0.04, 0.05, 0.07, 0.08, 0.1};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(m.sinr[i] / target[i], 1.0, 1e-6);
    EXPECT_FALSE(m.outage[i]);
  }
}

TEST(FixedPoint, ZeroBudget) {
  const auto s = single_ue();
  const auto tr = run_fixed_point(Algorithm::tpceh, s, default_initial_power(s), 1e-9, 0);
  EXPECT_FALSE(tr.converged);
  EXPECT_EQ(tr.iterations_used, 0u);
  EXPECT_EQ(tr.steps.size(), 1u);
}

TEST(FixedPoint, TraceInvariants) {
  const auto s = support::fixed_snapshot("desk_consistent.json");
  for (auto a : kAllAlgorithms) {
    for (std::size_t budget : {3u, 10000u}) {
      const auto tr = run_fixed_point(a, s, default_initial_power(s), 1e-9, budget);
      EXPECT_LE(tr.steps.size(), budget + 1);
      EXPECT_EQ(tr.steps.size(), tr.iterations_used + 1);
      if (tr.converged) {
        const auto& last = tr.steps.back().p;
        const auto& prev = tr.steps[tr.steps.size() - 2].p;
        EXPECT_LE(relative_change(prev, last), 1e-9);
      }
      for (std::size_t t = 0; t < tr.steps.size(); ++t) EXPECT_EQ(tr.steps[t].t, t);
    }
  }
}

TEST(FixedPoint, InitialVectorClipped) {
  const auto s = single_ue();
  PowerVector p{{1e6}, 1e6};
  const auto tr = run_fixed_point(Algorithm::tpceh, s, p, 1e-9, 0);
  EXPECT_EQ(tr.steps[0].p.p_u[0], s.ues[0].p_bar_u);
  EXPECT_EQ(tr.steps[0].p.p_h, s.hbs.p_bar_h);
  const auto base = run_fixed_point(Algorithm::tpc, s, p, 1e-9, 0);
  EXPECT_EQ(base.steps[0].p.p_h, 0.0);
}

TEST(FixedPoint, WrongLengthRejected) {
  const auto s = single_ue();
  EXPECT_THROW(run_fixed_point(Algorithm::tpceh, s, PowerVector::uniform(2, 1e-6), 1e-9, 10), std::invalid_argument);
}

TEST(Feasibility, DeskSingleUe) {
  const auto s = single_ue();
  const auto r = check_energy_feasibility(run_fixed_point(Algorithm::tpceh, s), s);
  EXPECT_TRUE(r.all_feasible);
  EXPECT_FALSE(r.hbs_cap_binding);
}

TEST(Feasibility, ReferenceParametersCapBinding) {
  const auto s = support::fixed_snapshot("paper_4a.json");
  const auto tr = run_fixed_point(Algorithm::tpceh, s);
  const auto r = check_energy_feasibility(tr, s);
  EXPECT_FALSE(r.all_feasible);
  EXPECT_TRUE(r.hbs_cap_binding);
  EXPECT_EQ(tr.fixed_point.p_h, s.hbs.p_bar_h);
  EXPECT_GT(optimal_hbs_power(tr.fixed_point.p_u, s), s.hbs.p_bar_h);
}

TEST(Feasibility, OptimalHbsPowerTight) {
  const auto s = support::fixed_snapshot("desk_consistent.json");
  PowerVector p{{1e-7, 2e-7, 3e-8, 4e-9, 5e-9}, 0.0};
  p.p_h = optimal_hbs_power(p.p_u, s);
  const auto r = check_energy_feasibility(p, s);
  EXPECT_TRUE(r.all_feasible);
  bool tight = false;
  for (std::size_t i = 0; i < s.size(); ++i)
    tight = tight || required_hbs_power(p.p_u[i], s.ues[i], s.config.epsilon) == p.p_h;
  EXPECT_TRUE(tight);
}

TEST(Statistics, MeanAndHalfWidth) {
  const auto st = mean_and_half_width({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(st.mean, 2.5);
  EXPECT_NEAR(st.half_width, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(st.n, 4u);
  EXPECT_EQ(mean_and_half_width({7.0}).half_width, 0.0);
}

TEST(Sweep, AxisParsing) {
  EXPECT_EQ(parse_axis("delta_db"), SweepAxis::delta_db);
  EXPECT_EQ(parse_axis("num_ues"), SweepAxis::num_ues);
  EXPECT_THROW(parse_axis("bogus"), std::invalid_argument);
  const auto tpl = desk_template();
  EXPECT_THROW(apply_axis(tpl, SweepAxis::num_ues, 2.5), std::invalid_argument);
  EXPECT_THROW(apply_axis(tpl, SweepAxis::num_ues, 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(apply_axis(tpl, SweepAxis::delta_db, -90).config.delta, 1e-9);
  EXPECT_EQ(apply_axis(tpl, SweepAxis::cell_side, 40).config.cell_side, 40.0);
  EXPECT_EQ(apply_axis(tpl, SweepAxis::gamma_target, 0.2).ue.gamma_target, 0.2);
}

TEST(Sweep, SingleSnapshotEqualsSingleRun) {
  const auto tpl = desk_template(4);
  MonteCarloOptions opt;
  opt.n_snapshots = 1;
  const auto res = run_monte_carlo(Algorithm::tpceh, tpl, SweepAxis::gamma_target, {0.05}, opt);
  const auto snap = sample_snapshot(tpl, 0);
  const auto tr = run_fixed_point(Algorithm::tpceh, snap);
  const auto m = metrics(tr.fixed_point, snap);
  const auto& pt = res.points.at(0);
  EXPECT_EQ(pt.stat("p_h").mean, tr.fixed_point.p_h);
  EXPECT_EQ(pt.stat("aggregate_power").mean, m.aggregate_power);
  EXPECT_EQ(pt.stat("aggregate_throughput").mean, m.aggregate_throughput);
  EXPECT_EQ(pt.stat("aggregate_power").half_width, 0.0);
  EXPECT_EQ(pt.stat("iterations").n, 1u);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  const auto tpl = desk_template(5);
  MonteCarloOptions one, many;
  one.n_snapshots = many.n_snapshots = 37;
  many.threads = 4;
  const auto a = run_monte_carlo(Algorithm::opceh, tpl, SweepAxis::cell_side, {40, 60}, one);
  const auto b = run_monte_carlo(Algorithm::opceh, tpl, SweepAxis::cell_side, {40, 60}, many);
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t m = 0; m < kNumSweepMetrics; ++m) {
      EXPECT_TRUE(same_bits(a.points[p].stats[m].mean, b.points[p].stats[m].mean));
      EXPECT_TRUE(same_bits(a.points[p].stats[m].half_width, b.points[p].stats[m].half_width));
    }
}

TEST(Sweep, NonConvergedCountedAndOptionallyExcluded) {
  auto tpl = desk_template(3);
  tpl.config.max_iter = 1;
  MonteCarloOptions opt;
  opt.n_snapshots = 5;
  auto res = run_monte_carlo(Algorithm::tpceh, tpl, SweepAxis::delta_db, {-120}, opt);
  EXPECT_EQ(res.points[0].nonconverged, 5u);
  EXPECT_EQ(res.points[0].stat("p_h").n, 5u);
  opt.exclude_nonconverged = true;
  res = run_monte_carlo(Algorithm::tpceh, tpl, SweepAxis::delta_db, {-120}, opt);
  EXPECT_EQ(res.points[0].stat("p_h").n, 0u);
}

TEST(Sweep, MetadataRecorded) {
  auto tpl = desk_template(2);
  tpl.config.hbs_placement = HbsPlacement::corner;
  tpl.config.seed = 99;
  MonteCarloOptions opt;
  opt.n_snapshots = 3;
  const auto res = run_monte_carlo(Algorithm::tpc, tpl, SweepAxis::num_ues, {2, 3}, opt);
  EXPECT_EQ(res.seed, 99u);
  EXPECT_EQ(res.placement, HbsPlacement::corner);
  EXPECT_EQ(res.n_snapshots, 3u);
  EXPECT_EQ(res.points.size(), 2u);
}

TEST(Mobility, EnergyAccounting) {
  const auto tpl = desk_template(5);
  MobilityOptions opt;
  opt.duration_s = 2.0;
  for (auto a : kAllAlgorithms) {
    const auto run = run_mobility(a, tpl, opt);
    ASSERT_EQ(run.records.size(), 2000u);
    std::vector<double> prev(5, opt.battery_init_j);
    for (const auto& r : run.records) {
      for (std::size_t i = 0; i < 5; ++i) {
        const double b = r.state.battery[i];
        EXPECT_GE(b, 0.0);
        EXPECT_LE(b, run.battery_capacity_j);
        const double delta = r.harvested_j[i] - r.consumed_j[i] - r.spilled_j[i];
        EXPECT_NEAR(b - prev[i], delta, 1e-21) << to_string(a) << " t=" << r.t;
        const auto& pos = r.state.positions[i];
        EXPECT_GE(pos.x, 0.0);
        EXPECT_LE(pos.x, tpl.config.cell_side);
        prev[i] = b;
      }
    }
  }
}

TEST(Mobility, StaticWithUnlimitedBattery) {
  const auto tpl = desk_template(4);
  MobilityOptions opt;
  opt.duration_s = 0.5;
  opt.speed_mps = 0.0;
  opt.battery_init_j = std::numeric_limits<double>::infinity();
  const auto run = run_mobility(Algorithm::tpceh, tpl, opt);
  ASSERT_EQ(run.records.size(), 500u);
  const auto& last = run.records.back();
  for (std::size_t n = 400; n < 500; ++n) {
    EXPECT_EQ(run.records[n].p.p_u, last.p.p_u);
    EXPECT_EQ(run.records[n].p.p_h, last.p.p_h);
  }
  EXPECT_FALSE(run.first_shortfall_time.has_value());
}

TEST(Mobility, ZeroDuration) {
  MobilityOptions opt;
  opt.duration_s = 0.0;
  EXPECT_TRUE(run_mobility(Algorithm::tpc, desk_template(), opt).records.empty());
  opt.duration_s = -1.0;
  EXPECT_THROW(run_mobility(Algorithm::tpc, desk_template(), opt), std::invalid_argument);
}

TEST(Mobility, BaselineDepletesForGood) {
  MobilityOptions opt;
  opt.duration_s = 2.0;
  const auto run = run_mobility(Algorithm::tpc, desk_template(), opt);
  ASSERT_TRUE(run.all_depleted_time.has_value());
  EXPECT_GT(*run.all_depleted_time, 0.0);
  for (const auto& r : run.records) {
    EXPECT_EQ(r.p.p_h, 0.0);
    if (r.t >= *run.all_depleted_time) {
      for (double g : r.metrics.sinr) EXPECT_EQ(g, 0.0);
    }
  }
}

TEST(Mobility, HarvestingStartsAtFirstShortfall) {
  MobilityOptions opt;
  opt.duration_s = 1.0;
  const auto run = run_mobility(Algorithm::tpceh, desk_template(), opt);
  ASSERT_TRUE(run.activation_time.has_value());
  EXPECT_EQ(*run.activation_time, *run.first_shortfall_time);
  for (const auto& r : run.records) {
    if (r.t < *run.activation_time) EXPECT_EQ(r.p.p_h, 0.0);
    else EXPECT_GT(r.p.p_h, 0.0);
    EXPECT_EQ(r.state.harvesting_active, r.t >= *run.activation_time);
  }
}
