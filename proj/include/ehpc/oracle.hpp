#pragma once

// Independent checks of the convergence and optimality properties of the
// harvesting-aware power control maps:
//
//  * exhaustive grid search for the aggregate-power-minimization problem,
//    used as the reference optimum;
//  * randomized sandwich trials for two-sided scalability;
//  * fixed-point uniqueness from random starting points;
//  * the energy-signal optimality condition at converged fixed points;
//  * the Fast-Lipschitz rewrite of the problem (its constraint map G, the
//    analytic gradient, and the iteration it induces).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehpc/channel.hpp"
#include "ehpc/engine.hpp"
#include "ehpc/power_control.hpp"

namespace ehpc {

// Sum of UE and HBS total power.
inline double aggregate_power(const PowerVector& p, const Scenario& s) {
  const double eps = s.config.epsilon;
  double acc = p.p_h / eps + s.hbs.p_cir;
  for (std::size_t i = 0; i < s.size(); ++i) acc += p.p_u[i] / eps + s.ues[i].p_cir;
  return acc;
}

// Direct check of all four constraints of the aggregate-power problem, with
// no slack: energy harvesting, HBS peak power, UE caps and target SINR.
inline bool satisfies_problem1(const PowerVector& p, const Scenario& s) {
  if (p.p_h > s.hbs.p_bar_h || p.p_h < 0.0) return false;
  const double eps = s.config.epsilon;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& u = s.ues[i];
    if (p.p_u[i] < 0.0 || p.p_u[i] > u.p_bar_u) return false;
    if (p.p_h < p.p_u[i] / (eps * u.mu * u.g) + u.p_min) return false;
    double interf = s.config.delta * p.p_h + s.config.sigma2;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (j != i) interf += s.ues[j].h * p.p_u[j];
    if (u.h * p.p_u[i] < u.gamma_target * interf) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Grid-search reference optimum

struct BruteForceOptions {
  std::size_t points_per_dim = 64;  // one of them is the exact zero
  std::size_t refine_rounds = 3;    // window shrinks 4x per round
  std::size_t max_recenters = 12;   // extra rounds that only move the window
  double span_decades = 12.0;       // initial log-window below each cap
};

struct BruteForceResult {
  PowerVector best;
  double best_objective = std::numeric_limits<double>::infinity();
  std::size_t points_per_dim = 0;
  std::size_t rounds_run = 0;
  std::vector<double> round_objectives;  // incumbent after each round
  std::size_t feasible_count = 0;        // feasible grid points over all rounds
  double final_log10_step = 0.0;         // grid spacing in the last round
  bool infeasible = true;
};

namespace detail {

struct LogWindow {
  double lo = 0.0;  // log10
  double hi = 0.0;  // log10
};

inline std::vector<double> grid_points(const LogWindow& w, std::size_t n) {
  std::vector<double> xs;
  xs.reserve(n);
  xs.push_back(0.0);
  const std::size_t m = n - 1;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = m == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(m - 1);
    xs.push_back(std::pow(10.0, w.lo + (w.hi - w.lo) * t));
  }
  return xs;
}

}  // namespace detail

// Exhaustive search over a per-dimension grid {0} U {log-spaced points} on
// [0, p_bar_u]^K x [0, p_bar_h], refined around the incumbent. The grid is
// logarithmic because feasible uplink powers may sit many decades below their
// caps. Every candidate is checked against the constraints directly.
inline BruteForceResult brute_force_problem1(const Scenario& s, const BruteForceOptions& opt = {}) {
  const std::size_t k = s.size();
  if (k > 3) throw std::invalid_argument("brute_force_problem1: refusing K > 3 (grid is exponential in K)");
  if (opt.points_per_dim < 3) throw std::invalid_argument("brute_force_problem1: need at least 3 points per dimension");

  const std::size_t dims = k + 1;  // last dimension is p_h
  std::vector<double> caps(dims);
  for (std::size_t i = 0; i < k; ++i) caps[i] = s.ues[i].p_bar_u;
  caps[k] = s.hbs.p_bar_h;

  std::vector<detail::LogWindow> win(dims);
  for (std::size_t d = 0; d < dims; ++d) win[d] = {std::log10(caps[d]) - opt.span_decades, std::log10(caps[d])};

  BruteForceResult res;
  res.points_per_dim = opt.points_per_dim;
  res.best.p_u.assign(k, 0.0);

  const std::size_t n = opt.points_per_dim;
  std::size_t zooms = 0, recenters = 0;
  PowerVector cand;
  cand.p_u.assign(k, 0.0);
  std::vector<std::size_t> idx(k, 0);

  while (true) {
    std::vector<std::vector<double>> grid(dims);
    for (std::size_t d = 0; d < dims; ++d) grid[d] = detail::grid_points(win[d], n);

    std::fill(idx.begin(), idx.end(), 0);
    bool done = false;
    while (!done) {
      for (std::size_t i = 0; i < k; ++i) cand.p_u[i] = grid[i][idx[i]];
      for (double ph : grid[k]) {
        cand.p_h = ph;
        if (!satisfies_problem1(cand, s)) continue;
        ++res.feasible_count;
        const double obj = aggregate_power(cand, s);
        if (obj < res.best_objective) {
          res.best_objective = obj;
          res.best = cand;
          res.infeasible = false;
        }
      }
      std::size_t d = 0;
      while (d < k && ++idx[d] == n) idx[d++] = 0;
      done = (d == k);
    }
    res.round_objectives.push_back(res.best_objective);
    res.final_log10_step = (win[k].hi - win[k].lo) / static_cast<double>(n - 2);
    ++res.rounds_run;

    if (res.infeasible || zooms >= opt.refine_rounds) break;

    // Re-center each window on the incumbent. A coordinate sitting on the edge
    // of its window (other than the cap) moves the window without shrinking it.
    bool on_edge = false;
    const double tiny = 1e-12;
    for (std::size_t d = 0; d < dims; ++d) {
      const double x = d < k ? res.best.p_u[d] : res.best.p_h;
      const double cap_log = std::log10(caps[d]);
      if (x <= 0.0) continue;
      const double lx = std::log10(x);
      if (std::abs(lx - win[d].lo) < tiny * std::max(1.0, std::abs(lx))) on_edge = true;
      if (std::abs(lx - win[d].hi) < tiny * std::max(1.0, std::abs(lx)) && win[d].hi < cap_log - tiny) on_edge = true;
    }
    const bool shrink = !on_edge || recenters >= opt.max_recenters;
    if (shrink) ++zooms;
    else ++recenters;
    for (std::size_t d = 0; d < dims; ++d) {
      const double x = d < k ? res.best.p_u[d] : res.best.p_h;
      const double cap_log = std::log10(caps[d]);
      const double width = (win[d].hi - win[d].lo) / (shrink ? 4.0 : 1.0);
      if (x <= 0.0) {
        win[d] = {win[d].lo - width, win[d].lo};  // optimum hugs zero: look further down
        continue;
      }
      const double lx = std::log10(x);
      double hi = std::min(cap_log, lx + 0.5 * width);
      win[d] = {hi - width, hi};
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Energy-signal optimality at a fixed point

enum class Lemma1Status { holds, violated, cap_binding, not_converged };

inline const char* to_string(Lemma1Status s) {
  switch (s) {
    case Lemma1Status::holds: return "holds";
    case Lemma1Status::violated: return "violated";
    case Lemma1Status::cap_binding: return "cap binding";
    case Lemma1Status::not_converged: return "not converged";
  }
  return "?";
}

struct Lemma1Result {
  Lemma1Status status = Lemma1Status::not_converged;
  std::size_t argmax_ue = 0;
  double relative_gap = 0.0;                 // |p_h - max_i need_i| / p_h
  std::optional<std::size_t> offending_ue;   // UE whose energy constraint fails
};

inline Lemma1Result verify_lemma1_at_fixed_point(const IterationTrace& tr, const Scenario& s,
                                                 double rel_tol = 1e-9) {
  Lemma1Result r;
  if (!tr.converged) return r;
  const auto& p = tr.fixed_point;
  if (p.p_h >= s.hbs.p_bar_h * (1.0 - kFeasibilitySlack)) {
    r.status = Lemma1Status::cap_binding;
    return r;
  }
  double best = -1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double need = required_hbs_power(p.p_u[i], s.ues[i], s.config.epsilon);
    if (need > best) {
      best = need;
      r.argmax_ue = i;
    }
    if (p.p_h < need * (1.0 - rel_tol) && !r.offending_ue) r.offending_ue = i;
  }
  r.relative_gap = std::abs(p.p_h - best) / p.p_h;
  r.status = (!r.offending_ue && r.relative_gap <= rel_tol) ? Lemma1Status::holds : Lemma1Status::violated;
  if (r.status == Lemma1Status::violated && !r.offending_ue) r.offending_ue = r.argmax_ue;
  return r;
}

// ---------------------------------------------------------------------------
// Optimality of the target-tracking fixed point

struct Theorem2Result {
  bool passed = false;
  double gap = 0.0;  // (iteration objective - grid objective) / grid objective
  double iteration_objective = 0.0;
  double grid_objective = 0.0;
  bool grid_infeasible = false;
  bool iteration_infeasible = false;  // HBS cap binding or a target missed
  PowerVector iteration_point;
  PowerVector grid_point;
  std::string message;
};

inline Theorem2Result verify_theorem2(const Scenario& s, double tol, const BruteForceOptions& bf_opt = {},
                                      double iteration_tol = 1e-12) {
  Theorem2Result r;
  const auto tr = run_fixed_point(Algorithm::tpceh, s, default_initial_power(s), iteration_tol,
                                  std::max<std::size_t>(s.config.max_iter, 100000), false);
  const auto bf = brute_force_problem1(s, bf_opt);
  const auto m = metrics(tr.fixed_point, s);
  const auto feas = check_energy_feasibility(tr.fixed_point, s);
  r.iteration_point = tr.fixed_point;
  r.grid_point = bf.best;
  r.iteration_objective = aggregate_power(tr.fixed_point, s);
  r.grid_objective = bf.best_objective;
  r.grid_infeasible = bf.infeasible;
  r.iteration_infeasible = feas.hbs_cap_binding || !feas.all_feasible || m.any_outage();

  std::ostringstream os;
  if (!tr.converged) {
    os << "TPCEH did not converge";
  } else if (bf.infeasible || r.iteration_infeasible) {
    r.passed = bf.infeasible && r.iteration_infeasible;
    os << (r.passed ? "both report infeasibility" : "feasibility verdicts disagree")
       << " (grid infeasible=" << bf.infeasible << ", iteration infeasible=" << r.iteration_infeasible << ")";
  } else {
    r.gap = (r.iteration_objective - r.grid_objective) / r.grid_objective;
    r.passed = std::abs(r.gap) <= tol;
    os << "gap " << r.gap;
  }
  r.message = os.str();
  return r;
}

// ---------------------------------------------------------------------------
// Two-sided scalability of the joint maps

struct ScalabilityCounterexample {
  PowerVector p;
  PowerVector p_prime;
  double a = 0.0;
  std::size_t component = 0;  // K means the HBS component
  double f_p = 0.0;
  double f_p_prime = 0.0;
};

struct ScalabilityResult {
  bool passed = true;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::optional<ScalabilityCounterexample> counterexample;
};

// For random p > 0, a in (1, 10] and (1/a) p <= p' <= a p, checks
// (1/a) f(p) <= f(p') <= a f(p) componentwise for an arbitrary map f.
// `check_hbs` = false ignores the HBS component (baselines pin it at zero).
inline ScalabilityResult check_two_sided_scalable_map(const std::function<PowerVector(const PowerVector&)>& f,
                                                      std::size_t k, std::size_t trials, Rng& rng,
                                                      bool check_hbs = true, double slack = 1e-12) {
  if (trials < 1) throw std::invalid_argument("check_two_sided_scalable: trials must be >= 1");
  ScalabilityResult r;
  auto draw = [&](double lo, double hi) { return rng.log_uniform(lo, hi); };
  for (std::size_t t = 0; t < trials; ++t) {
    const double a = 1.0 + 9.0 * (1.0 - rng.uniform());  // (1, 10]
    PowerVector p, q;
    p.p_u.resize(k);
    q.p_u.resize(k);
    for (std::size_t i = 0; i < k; ++i) p.p_u[i] = draw(1e-18, 1e3);
    p.p_h = draw(1e-18, 1e3);
    // Half of the trials pin p' to a corner of the sandwich.
    const int mode = static_cast<int>(rng.next() % 4);
    auto pick = [&](double x) {
      if (mode == 1) return x / a;
      if (mode == 2) return x * a;
      return draw(x / a, x * a);
    };
    for (std::size_t i = 0; i < k; ++i) q.p_u[i] = pick(p.p_u[i]);
    q.p_h = pick(p.p_h);

    const auto fp = f(p);
    const auto fq = f(q);
    auto check = [&](std::size_t comp, double x, double y) {
      const bool ok = y >= (x / a) * (1.0 - slack) && y <= (x * a) * (1.0 + slack);
      if (!ok) {
        ++r.violations;
        if (!r.counterexample) r.counterexample = ScalabilityCounterexample{p, q, a, comp, x, y};
      }
    };
    for (std::size_t i = 0; i < k; ++i) check(i, fp.p_u[i], fq.p_u[i]);
    if (check_hbs) check(k, fp.p_h, fq.p_h);
    ++r.trials;
  }
  r.passed = r.violations == 0;
  return r;
}

// The joint map of one algorithm, clipping included.
inline ScalabilityResult check_two_sided_scalable(const Scenario& s, Algorithm alg, std::size_t trials, Rng& rng,
                                                  double slack = 1e-12) {
  return check_two_sided_scalable_map([&](const PowerVector& p) { return joint_update(alg, p, s); }, s.size(),
                                      trials, rng, harvests(alg), slack);
}

// ---------------------------------------------------------------------------
// Fixed-point uniqueness from random starts

struct UniquenessResult {
  bool all_converged = true;
  double max_spread = 0.0;  // relative inf-norm distance to the first fixed point
  std::size_t max_iterations = 0;
  PowerVector reference;
};

inline double relative_distance(const PowerVector& a, const PowerVector& b) {
  double worst = 0.0;
  auto one = [&](double x, double y) {
    const double scale = std::max({std::abs(x), std::abs(y), kConvergenceFloor});
    worst = std::max(worst, std::abs(x - y) / scale);
  };
  for (std::size_t i = 0; i < a.p_u.size(); ++i) one(a.p_u[i], b.p_u[i]);
  one(a.p_h, b.p_h);
  return worst;
}

inline PowerVector random_power_vector(const Scenario& s, Rng& rng) {
  PowerVector p;
  p.p_u.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) p.p_u[i] = rng.log_uniform(s.ues[i].p_bar_u * 1e-12, s.ues[i].p_bar_u);
  p.p_h = rng.log_uniform(s.hbs.p_bar_h * 1e-12, s.hbs.p_bar_h);
  return p;
}

inline UniquenessResult check_unique_fixed_point(const Scenario& s, Algorithm alg, std::size_t n_starts, Rng& rng,
                                                 double tol, std::size_t max_iter) {
  UniquenessResult r;
  for (std::size_t n = 0; n < n_starts; ++n) {
    const auto tr = run_fixed_point(alg, s, random_power_vector(s, rng), tol, max_iter, false);
    r.all_converged = r.all_converged && tr.converged;
    r.max_iterations = std::max(r.max_iterations, tr.iterations_used);
    if (n == 0) r.reference = tr.fixed_point;
    else r.max_spread = std::max(r.max_spread, relative_distance(r.reference, tr.fixed_point));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Fast-Lipschitz rewrite of the aggregate-power problem

// alpha_i = gamma_i / ((1 + gamma_i) eps h_i g_i mu_i)
inline std::vector<double> fl_alpha(const Scenario& s) {
  std::vector<double> a(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& u = s.ues[i];
    a[i] = u.gamma_target / ((1.0 + u.gamma_target) * s.config.epsilon * u.h * u.g * u.mu);
  }
  return a;
}

// gamma_i / ((1 + gamma_i) h_i)
inline std::vector<double> fl_ue_coefficients(const Scenario& s) {
  std::vector<double> c(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) c[i] = s.ues[i].gamma_target / ((1.0 + s.ues[i].gamma_target) * s.ues[i].h);
  return c;
}

// Sum over all UEs (own term included) + delta p_h + sigma^2.
inline double total_received_plus_noise(const PowerVector& p, const Scenario& s) {
  double acc = s.config.delta * p.p_h + s.config.sigma2;
  for (std::size_t l = 0; l < s.size(); ++l) acc += s.ues[l].h * p.p_u[l];
  return acc;
}

// Index attaining max_i alpha_i * total + p_min_i (lowest index on ties).
inline std::size_t fl_active_index(const PowerVector& p, const Scenario& s) {
  const auto alpha = fl_alpha(s);
  const double total = total_received_plus_noise(p, s);
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = alpha[i] * total + s.ues[i].p_min;
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

// G(p) = [g_1(p), ..., g_K(p), z(p)], unclipped.
inline std::vector<double> fl_constraint_map(const PowerVector& p, const Scenario& s) {
  const auto c = fl_ue_coefficients(s);
  const auto alpha = fl_alpha(s);
  const double total = total_received_plus_noise(p, s);
  std::vector<double> G(s.size() + 1);
  double z = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    G[i] = c[i] * total;
    z = std::max(z, alpha[i] * total + s.ues[i].p_min);
  }
  G[s.size()] = z;
  return G;
}

// The clipped iteration the rewrite induces (HBS row: alpha form with the
// all-UE sum; UE rows: (1 + gamma) denominator).
inline PowerVector fl_update(const PowerVector& p, const Scenario& s) {
  const auto G = fl_constraint_map(p, s);
  PowerVector next;
  next.p_u.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) next.p_u[i] = std::min(s.ues[i].p_bar_u, G[i]);
  next.p_h = std::min(s.hbs.p_bar_h, G[s.size()]);
  return next;
}

struct FLReport {
  std::vector<double> alpha;
  std::vector<std::vector<double>> grad;  // grad[i][j] = d G_j / d x_i
  std::size_t active_index = 0;
  double grad_norm_inf = 0.0;  // max_j sum_i |grad[i][j]|, as the norm is defined for this form
  double grad_norm_row = 0.0;  // max_i sum_j |grad[i][j]|, reported alongside
  bool grad_nonneg = false;
  bool grad_f0_positive = false;
  bool qualifies = false;
};

// Analytic gradient of G at p. Within one branch of the max, G is linear, so
// the gradient only depends on the active index.
inline std::vector<std::vector<double>> fl_gradient(const PowerVector& p, const Scenario& s) {
  const std::size_t k = s.size(), n = k + 1;
  const auto c = fl_ue_coefficients(s);
  const auto alpha = fl_alpha(s);
  const std::size_t star = fl_active_index(p, s);
  std::vector<std::vector<double>> grad(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double coef = j < k ? c[j] : alpha[star];
    for (std::size_t i = 0; i < k; ++i) grad[i][j] = coef * s.ues[i].h;
    grad[k][j] = coef * s.config.delta;
  }
  return grad;
}

inline FLReport fl_condition_check(const Scenario& s, const PowerVector& at) {
  FLReport r;
  const std::size_t n = s.size() + 1;
  r.alpha = fl_alpha(s);
  r.grad = fl_gradient(at, s);
  r.active_index = fl_active_index(at, s);
  r.grad_nonneg = true;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      col += std::abs(r.grad[i][j]);
      r.grad_nonneg = r.grad_nonneg && r.grad[i][j] >= 0.0;
    }
    r.grad_norm_inf = std::max(r.grad_norm_inf, col);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(r.grad[i][j]);
    r.grad_norm_row = std::max(r.grad_norm_row, row);
  }
  // f0(x) = -g0(-x) with g0 = (sum p_u + p_h) / eps + circuit terms: every
  // partial derivative equals 1 / eps.
  r.grad_f0_positive = 1.0 / s.config.epsilon > 0.0;
  r.qualifies = r.grad_f0_positive && r.grad_nonneg && r.grad_norm_inf < 1.0;
  return r;
}

struct FiniteDifference {
  std::vector<std::vector<double>> grad;  // grad[i][j] = dG_j / dx_i
  bool crossed_switch = false;            // a perturbed point changed the active HBS branch
};

// Forward differences of G. G is piecewise linear, so there is no truncation
// error and the step is sized for rounding: it moves the total by rel_step of
// max(total, G_H / alpha*), which keeps the HBS row (often dominated by
// p_min) resolvable.
inline FiniteDifference fl_gradient_finite_difference(const PowerVector& p, const Scenario& s, double rel_step = 1e-6) {
  const std::size_t k = s.size(), n = k + 1;
  FiniteDifference r;
  r.grad.assign(n, std::vector<double>(n, 0.0));
  const auto g0 = fl_constraint_map(p, s);
  const std::size_t star = fl_active_index(p, s);
  const double total = total_received_plus_noise(p, s);
  const double reach = std::max(total, g0[k] / fl_alpha(s)[star]);
  for (std::size_t i = 0; i < n; ++i) {
    PowerVector hi = p;
    double& x = i < k ? hi.p_u[i] : hi.p_h;
    const double weight = i < k ? s.ues[i].h : s.config.delta;
    const double step = weight > 0.0 ? rel_step * reach / weight : rel_step * std::max(std::abs(x), kConvergenceFloor);
    const double before = x;
    x += step;
    const double actual = x - before;
    const auto gh = fl_constraint_map(hi, s);
    r.crossed_switch = r.crossed_switch || fl_active_index(hi, s) != star;
    for (std::size_t j = 0; j < n; ++j) r.grad[i][j] = (gh[j] - g0[j]) / actual;
  }
  return r;
}

// Evaluated at the TPCEH fixed point.
inline FLReport fl_condition_check(const Scenario& s) {
  const auto tr = run_fixed_point(Algorithm::tpceh, s, default_initial_power(s), s.config.tol, s.config.max_iter, false);
  return fl_condition_check(s, tr.fixed_point);
}

// Iterates an arbitrary map to a fixed point (same stopping rule as
// run_fixed_point). Returns the last iterate and whether it converged.
inline std::pair<PowerVector, bool> iterate_to_fixed_point(const std::function<PowerVector(const PowerVector&)>& f,
                                                           PowerVector p, double tol, std::size_t max_iter) {
  for (std::size_t t = 0; t < max_iter; ++t) {
    PowerVector next = f(p);
    const double change = relative_change(p, next);
    p = std::move(next);
    if (change <= tol) return {p, true};
  }
  return {p, false};
}

struct EquivalenceResult {
  bool passed = true;
  std::size_t trials = 0;
  std::size_t compared = 0;
  std::size_t skipped_ue_cap = 0;  // a UE sits at its cap; the alpha form then overshoots
  std::size_t nonconverged = 0;
  double worst_fixed_point_gap = 0.0;
  double worst_map_gap = 0.0;  // |fl_update(p*) - joint_update(p*)| at the common fixed point
  std::optional<std::uint64_t> counterexample_snapshot;
  std::optional<std::size_t> counterexample_k;
};

// Draws `trials` snapshots with K uniform in {1..max_k} from the template,
// iterates both parameterizations to their fixed points and compares them.
inline EquivalenceResult appendix_update_equivalence(const ScenarioTemplate& tpl, std::size_t trials,
                                                     std::uint64_t seed, std::size_t max_k = 4,
                                                     double fixed_point_tol = 1e-9, double map_tol = 1e-12) {
  if (trials < 1) throw std::invalid_argument("appendix_update_equivalence: trials must be >= 1");
  EquivalenceResult r;
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    ScenarioTemplate point = tpl;
    point.config.num_ues = 1 + static_cast<std::size_t>(rng.next() % max_k);
    point.config.seed = seed;
    const Snapshot snap = sample_snapshot(point, t);
    ++r.trials;

    const auto p0 = default_initial_power(snap);
    const double tol = 1e-14;
    const std::size_t cap = 200000;
    const auto orig = run_fixed_point(Algorithm::tpceh, snap, p0, tol, cap, false);
    const auto alt = iterate_to_fixed_point([&](const PowerVector& p) { return fl_update(p, snap); }, p0, tol, cap);
    if (!orig.converged || !alt.second) {
      ++r.nonconverged;
      r.passed = false;
      if (!r.counterexample_snapshot) {
        r.counterexample_snapshot = t;
        r.counterexample_k = snap.size();
      }
      continue;
    }
    bool at_cap = false;
    for (std::size_t i = 0; i < snap.size(); ++i)
      at_cap = at_cap || orig.fixed_point.p_u[i] >= snap.ues[i].p_bar_u * (1.0 - kFeasibilitySlack);
    if (at_cap) {
      ++r.skipped_ue_cap;
      continue;
    }
    ++r.compared;
    const double fp_gap = relative_distance(orig.fixed_point, alt.first);
    const double map_gap = relative_distance(fl_update(orig.fixed_point, snap), joint_update(Algorithm::tpceh, orig.fixed_point, snap));
    r.worst_fixed_point_gap = std::max(r.worst_fixed_point_gap, fp_gap);
    r.worst_map_gap = std::max(r.worst_map_gap, map_gap);
    if (fp_gap > fixed_point_tol || map_gap > map_tol) {
      r.passed = false;
      if (!r.counterexample_snapshot) {
        r.counterexample_snapshot = t;
        r.counterexample_k = snap.size();
      }
    }
  }
  return r;
}

}  // namespace ehpc
