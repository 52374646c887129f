#pragma once

// Synchronous fixed-point iteration, Monte-Carlo sweeps and the moving-UE
// battery scenario.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ehpc/channel.hpp"
#include "ehpc/power_control.hpp"

namespace ehpc {

inline constexpr double kDefaultInitialPower = 1e-6;
inline constexpr double kConvergenceFloor = 1e-18;

struct TraceStep {
  std::size_t t = 0;
  PowerVector p;
  Metrics metrics;
};

struct IterationTrace {
  Algorithm algorithm = Algorithm::tpceh;
  std::vector<TraceStep> steps;
  bool converged = false;
  std::size_t iterations_used = 0;
  PowerVector fixed_point;  // last iterate; a true fixed point only if converged
  double last_relative_change = std::numeric_limits<double>::infinity();
};

// max_i |b_i - a_i| / max(a_i, floor) over all K+1 components.
inline double relative_change(const PowerVector& a, const PowerVector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.p_u.size(); ++i)
    worst = std::max(worst, std::abs(b.p_u[i] - a.p_u[i]) / std::max(a.p_u[i], kConvergenceFloor));
  worst = std::max(worst, std::abs(b.p_h - a.p_h) / std::max(a.p_h, kConvergenceFloor));
  return worst;
}

inline PowerVector default_initial_power(const Scenario& s) {
  return clip_to_caps(PowerVector::uniform(s.size(), kDefaultInitialPower), s);
}

// Iterates p(t+1) = f(p(t)) until the relative change drops to `tol` or
// `max_iter` updates have been made. Non-convergence is reported in the trace.
inline IterationTrace run_fixed_point(Algorithm alg, const Scenario& s, const PowerVector& p_init, double tol,
                                      std::size_t max_iter, bool record_steps = true) {
  if (p_init.size() != s.size()) throw std::invalid_argument("run_fixed_point: initial vector has wrong length");
  IterationTrace tr;
  tr.algorithm = alg;
  PowerVector p = clip_to_caps(p_init, s);
  if (!harvests(alg)) p.p_h = 0.0;
  if (record_steps) tr.steps.push_back({0, p, metrics(p, s)});
  for (std::size_t t = 1; t <= max_iter; ++t) {
    PowerVector next = joint_update(alg, p, s);
    tr.last_relative_change = relative_change(p, next);
    p = std::move(next);
    tr.iterations_used = t;
    if (record_steps) tr.steps.push_back({t, p, metrics(p, s)});
    if (tr.last_relative_change <= tol) {
      tr.converged = true;
      break;
    }
  }
  tr.fixed_point = std::move(p);
  return tr;
}

inline IterationTrace run_fixed_point(Algorithm alg, const Scenario& s) {
  return run_fixed_point(alg, s, default_initial_power(s), s.config.tol, s.config.max_iter);
}

struct FeasibilityReport {
  std::vector<bool> ue_feasible;
  bool all_feasible = false;
  bool hbs_cap_binding = false;  // p_h at its peak while some UE is short of energy
  double required_hbs_power = 0.0;
};

inline FeasibilityReport check_energy_feasibility(const PowerVector& p, const Scenario& s) {
  FeasibilityReport r;
  r.ue_feasible.resize(s.size());
  r.all_feasible = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    r.ue_feasible[i] = energy_feasible(p.p_h, p.p_u[i], s.ues[i], s.config.epsilon);
    r.all_feasible = r.all_feasible && r.ue_feasible[i];
  }
  r.required_hbs_power = optimal_hbs_power(p.p_u, s);
  const bool at_cap = p.p_h >= s.hbs.p_bar_h * (1.0 - kFeasibilitySlack);
  r.hbs_cap_binding = at_cap && !r.all_feasible;
  return r;
}

inline FeasibilityReport check_energy_feasibility(const IterationTrace& tr, const Scenario& s) {
  return check_energy_feasibility(tr.fixed_point, s);
}

// ---------------------------------------------------------------------------
// Monte-Carlo sweeps

enum class SweepAxis { delta_db, cell_side, gamma_target, num_ues };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::delta_db: return "delta_db";
    case SweepAxis::cell_side: return "cell_side";
    case SweepAxis::gamma_target: return "gamma_target";
    case SweepAxis::num_ues: return "num_ues";
  }
  return "?";
}

inline SweepAxis parse_axis(std::string_view name) {
  for (auto a : {SweepAxis::delta_db, SweepAxis::cell_side, SweepAxis::gamma_target, SweepAxis::num_ues})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

inline ScenarioTemplate apply_axis(ScenarioTemplate tpl, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::delta_db: tpl.config.delta = db_to_linear(value); break;
    case SweepAxis::cell_side: tpl.config.cell_side = value; break;
    case SweepAxis::gamma_target: tpl.ue.gamma_target = value; break;
    case SweepAxis::num_ues:
      if (!(value >= 1.0) || value != std::floor(value))
        throw std::invalid_argument("num_ues axis values must be positive integers");
      tpl.config.num_ues = static_cast<std::size_t>(value);
      break;
  }
  return tpl;
}

// Per-snapshot scalar summaries that get averaged. Order is the CSV order.
inline constexpr const char* kSweepMetricNames[] = {
    "avg_sinr",          "aggregate_throughput", "total_ue_power",           "total_ue_transmit_power",
    "p_h",               "hbs_total_power",      "aggregate_power",          "energy_feasible_fraction",
    "outage_fraction",   "iterations"};
inline constexpr std::size_t kNumSweepMetrics = std::size(kSweepMetricNames);

struct SnapshotSummary {
  bool converged = false;
  double values[kNumSweepMetrics] = {};
};

inline SnapshotSummary summarize(const IterationTrace& tr, const Scenario& s) {
  const auto m = metrics(tr.fixed_point, s);
  const auto k = static_cast<double>(s.size());
  SnapshotSummary out;
  out.converged = tr.converged;
  double sinr_sum = 0.0, ue_total = 0.0, tx = 0.0, feas = 0.0, outg = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sinr_sum += m.sinr[i];
    ue_total += m.ue_total_power[i];
    tx += tr.fixed_point.p_u[i];
    feas += m.energy_feasible[i] ? 1.0 : 0.0;
    outg += m.outage[i] ? 1.0 : 0.0;
  }
  const double v[kNumSweepMetrics] = {sinr_sum / k, m.aggregate_throughput, ue_total, tx,
                                      tr.fixed_point.p_h, m.hbs_total_power, m.aggregate_power,
                                      feas / k, outg / k, static_cast<double>(tr.iterations_used)};
  std::copy(std::begin(v), std::end(v), out.values);
  return out;
}

struct Stat {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal-approximation confidence half-width
  std::size_t n = 0;
};

inline Stat mean_and_half_width(const std::vector<double>& xs) {
  Stat st;
  st.n = xs.size();
  if (xs.empty()) return st;
  double sum = 0.0;
  for (double x : xs) sum += x;
  st.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - st.mean) * (x - st.mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    st.half_width = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return st;
}

struct SweepPoint {
  double value = 0.0;
  Stat stats[kNumSweepMetrics];
  std::size_t nonconverged = 0;

  const Stat& stat(std::string_view name) const {
    for (std::size_t m = 0; m < kNumSweepMetrics; ++m)
      if (name == kSweepMetricNames[m]) return stats[m];
    throw std::invalid_argument("unknown sweep metric '" + std::string(name) + "'");
  }
};

struct SweepResult {
  Algorithm algorithm = Algorithm::tpceh;
  SweepAxis axis = SweepAxis::delta_db;
  std::vector<SweepPoint> points;
  std::size_t n_snapshots = 0;
  std::uint64_t seed = 0;
  HbsPlacement placement = HbsPlacement::center;

  // Mean of `metric` across the sweep, in axis order.
  std::vector<double> curve(std::string_view metric) const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.stat(metric).mean);
    return out;
  }
  std::vector<double> half_widths(std::string_view metric) const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.stat(metric).half_width);
    return out;
  }
};

struct MonteCarloOptions {
  std::size_t n_snapshots = 200;
  unsigned threads = 1;
  bool exclude_nonconverged = false;
};

// Snapshot ids 0..n-1 are shared across axis values, so every point of a
// sweep sees the same random draws.
inline SweepResult run_monte_carlo(Algorithm alg, const ScenarioTemplate& tpl, SweepAxis axis,
                                   const std::vector<double>& values, const MonteCarloOptions& opt = {}) {
  SweepResult res;
  res.algorithm = alg;
  res.axis = axis;
  res.n_snapshots = opt.n_snapshots;
  res.seed = tpl.config.seed;
  res.placement = tpl.config.hbs_placement;

  for (double v : values) {
    const ScenarioTemplate point_tpl = apply_axis(tpl, axis, v);
    std::vector<SnapshotSummary> summaries(opt.n_snapshots);
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t id = begin; id < opt.n_snapshots; id += stride) {
        const Snapshot snap = sample_snapshot(point_tpl, id);
        const auto tr = run_fixed_point(alg, snap, default_initial_power(snap), snap.config.tol,
                                        snap.config.max_iter, false);
        summaries[id] = summarize(tr, snap);
      }
    };
    const unsigned nthreads = std::max(1u, opt.threads);
    if (nthreads == 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work, t, nthreads);
    }

    SweepPoint pt;
    pt.value = v;
    for (const auto& s : summaries) pt.nonconverged += s.converged ? 0 : 1;
    for (std::size_t m = 0; m < kNumSweepMetrics; ++m) {
      std::vector<double> xs;
      xs.reserve(summaries.size());
      for (const auto& s : summaries)
        if (s.converged || !opt.exclude_nonconverged) xs.push_back(s.values[m]);
      pt.stats[m] = mean_and_half_width(xs);
    }
    res.points.push_back(std::move(pt));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Moving UEs with a finite initial battery

struct MobilityOptions {
  double duration_s = 10.0;
  double step_s = 1e-3;
  double speed_mps = 5.0 / 3.6;
  double battery_init_j = 1e-6;
  double min_distance_m = 1.0;  // gains are evaluated at max(d, min_distance)
};

struct MobilityState {
  double time = 0.0;
  std::vector<Vec2> positions;
  std::vector<double> battery;
  std::vector<Vec2> direction;
  std::vector<bool> off;  // browned out; resumes only once harvest covers the step
  bool harvesting_active = false;
};

struct MobilityRecord {
  double t = 0.0;
  PowerVector p;
  Metrics metrics;
  MobilityState state;
  std::vector<double> harvested_j;
  std::vector<double> consumed_j;
  std::vector<double> spilled_j;  // harvest discarded at full capacity
};

struct MobilityRun {
  Algorithm algorithm = Algorithm::tpc;
  std::vector<MobilityRecord> records;
  std::optional<double> first_shortfall_time;  // first step some UE could not cover its energy
  std::optional<double> activation_time;       // harvesting UEs only
  std::optional<double> all_depleted_time;     // first step with every UE off
  double battery_capacity_j = 0.0;
};

namespace detail {

inline void refresh_gains(Snapshot& s, const std::vector<Vec2>& pos, Vec2 hbs, double min_d) {
  for (std::size_t i = 0; i < s.ues.size(); ++i) {
    auto& u = s.ues[i];
    u.position = pos[i];
    u.distance = distance(pos[i], hbs);
    u.g = u.h = path_gain(std::max(u.distance, min_d), s.config.attenuation_k);
    u.p_min = u.p_cir / (u.mu * u.g);
  }
}

// Straight-line motion with specular reflection at the cell walls.
inline void advance(double& x, double& dir, double step, double side) {
  x += dir * step;
  while (x < 0.0 || x > side) {
    if (x > side) {
      x = 2.0 * side - x;
      dir = -dir;
    } else {
      x = -x;
      dir = -dir;
    }
  }
}

}  // namespace detail

// UEs start at x = 0 on random lanes y ~ U(0, side) and travel along +x,
// bouncing between the walls. Each step: move, recompute gains, run one
// synchronous power update, then settle energy. The HBS of a harvesting
// algorithm stays silent until the first step some UE cannot cover its
// consumption from its battery; from that step on it transmits f_H(p).
inline MobilityRun run_mobility(Algorithm alg, const ScenarioTemplate& tpl, const MobilityOptions& opt) {
  if (!(opt.step_s > 0.0) || !(opt.duration_s >= 0.0) || !(opt.speed_mps >= 0.0) || !(opt.battery_init_j >= 0.0))
    throw std::invalid_argument("run_mobility: invalid options");

  const auto& cfg = tpl.config;
  const double side = cfg.cell_side;
  const Vec2 hbs = hbs_position(cfg);
  Rng rng(cfg.seed);

  MobilityState st;
  std::vector<UeParams> ues;
  for (std::size_t i = 0; i < cfg.num_ues; ++i) {
    const double lane = rng.uniform() * side;
    double mu = 0.0;
    if (tpl.ue.mu) {
      mu = *tpl.ue.mu;
    } else {
      do mu = rng.uniform();
      while (mu < kMinSampledMu);
    }
    st.positions.push_back({0.0, lane});
    st.direction.push_back({1.0, 0.0});
    UeParams u = detail::ue_from_template(tpl.ue);
    u.mu = mu;
    u.distance = std::max(distance(st.positions.back(), hbs), opt.min_distance_m);
    u.g = u.h = path_gain(u.distance, cfg.attenuation_k);
    ues.push_back(std::move(u));
  }
  Snapshot snap = detail::finish(tpl, std::move(ues), 0, cfg.seed);
  detail::refresh_gains(snap, st.positions, hbs, opt.min_distance_m);

  const std::size_t k = snap.size();
  const double capacity = opt.battery_init_j;
  const double eps = cfg.epsilon;
  st.battery.assign(k, opt.battery_init_j);
  st.off.assign(k, false);

  MobilityRun run;
  run.algorithm = alg;
  run.battery_capacity_j = capacity;

  PowerVector p = default_initial_power(snap);
  p.p_h = 0.0;

  const auto n_steps = static_cast<std::size_t>(std::llround(opt.duration_s / opt.step_s));
  const double move = opt.speed_mps * opt.step_s;
  for (std::size_t n = 1; n <= n_steps; ++n) {
    st.time = static_cast<double>(n) * opt.step_s;
    for (std::size_t i = 0; i < k; ++i) detail::advance(st.positions[i].x, st.direction[i].x, move, side);
    detail::refresh_gains(snap, st.positions, hbs, opt.min_distance_m);

    PowerVector next;
    next.p_u.resize(k);
    for (std::size_t i = 0; i < k; ++i) next.p_u[i] = ue_update(alg, p, snap, i);
    next.p_h = (harvests(alg) && st.harvesting_active) ? hbs_update(p, snap) : 0.0;

    std::vector<double> need(k), harvest(k, 0.0);
    auto settle_harvest = [&] {
      for (std::size_t i = 0; i < k; ++i) harvest[i] = snap.ues[i].mu * snap.ues[i].g * next.p_h * opt.step_s;
    };
    settle_harvest();
    bool shortfall = false;
    for (std::size_t i = 0; i < k; ++i) {
      need[i] = (next.p_u[i] / eps + snap.ues[i].p_cir) * opt.step_s;
      if (!st.off[i] && st.battery[i] + harvest[i] < need[i]) shortfall = true;
    }
    if (shortfall && !run.first_shortfall_time) run.first_shortfall_time = st.time;
    if (shortfall && harvests(alg) && !st.harvesting_active) {
      st.harvesting_active = true;
      run.activation_time = st.time;
      next.p_h = hbs_update(p, snap);
      settle_harvest();
    }

    MobilityRecord rec;
    rec.harvested_j = harvest;
    rec.consumed_j.assign(k, 0.0);
    rec.spilled_j.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double available = st.battery[i] + harvest[i];
      const bool can_resume = !st.off[i] || harvest[i] > 0.0;
      if (can_resume && available >= need[i]) {
        st.off[i] = false;
        rec.consumed_j[i] = need[i];
      } else {
        st.off[i] = true;
        next.p_u[i] = 0.0;
      }
      const double after = available - rec.consumed_j[i];
      rec.spilled_j[i] = std::max(0.0, after - capacity);
      st.battery[i] = after - rec.spilled_j[i];
    }
    if (!run.all_depleted_time && std::all_of(st.off.begin(), st.off.end(), [](bool b) { return b; }))
      run.all_depleted_time = st.time;

    p = std::move(next);
    rec.t = st.time;
    rec.p = p;
    rec.metrics = metrics(p, snap);
    rec.state = st;
    run.records.push_back(std::move(rec));
  }
  return run;
}

}  // namespace ehpc
