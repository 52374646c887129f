#pragma once

// Deterministic path-loss channel and seedable snapshot generation.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehpc/units.hpp"

namespace ehpc {

// Reciprocal power gain k * d^-3.
inline double path_gain(double d, double k) {
  if (!(d > 0.0)) throw std::domain_error("path_gain: distance must be strictly positive");
  return k / (d * d * d);
}

// One random (or fixed) realization of a cell.
struct Snapshot : Scenario {
  std::uint64_t snapshot_id = 0;
  std::uint64_t seed_used = 0;
};

// Parameter set from which snapshots are drawn.
struct ScenarioTemplate {
  ScenarioConfig config;
  HbsParams hbs;
  UeTemplate ue;
};

inline Vec2 hbs_position(const ScenarioConfig& c) {
  if (c.hbs_placement == HbsPlacement::corner) return {0.0, 0.0};
  return {0.5 * c.cell_side, 0.5 * c.cell_side};
}

// Portable uniform draws; std::uniform_real_distribution is not bit-stable
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline constexpr double kMinSampledMu = 1e-6;

namespace detail {

inline UeParams ue_from_template(const UeTemplate& t) {
  UeParams u;
  u.n_antennas = t.n_antennas;
  u.p_dyn = t.p_dyn;
  u.p_sta = t.p_sta;
  u.gamma_target = t.gamma_target;
  u.eta = t.eta;
  u.e_bar = t.e_bar;
  if (t.p_bar_u) u.p_bar_u = *t.p_bar_u;
  return u;
}

inline Snapshot finish(const ScenarioTemplate& tpl, std::vector<UeParams> ues, std::uint64_t id,
                       std::uint64_t seed) {
  auto issues = check_template(tpl.ue);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  auto cfg = tpl.config;
  cfg.num_ues = ues.size();
  Snapshot s;
  static_cast<Scenario&>(s) = validate_scenario(cfg, tpl.hbs, std::move(ues));
  s.snapshot_id = id;
  s.seed_used = seed;
  return s;
}

}  // namespace detail

// Draws num_ues positions uniformly in the square cell and, unless the
// template fixes mu, harvesting efficiencies uniformly in (0, 1).
//
// Each UE consumes its draws in order (x, y[, mu]) from a stream seeded with
// config.seed + snapshot_id, so a K-UE snapshot is a prefix of the (K+1)-UE
// snapshot and positions scale exactly with cell_side.
inline Snapshot sample_snapshot(const ScenarioTemplate& tpl, std::uint64_t snapshot_id) {
  const auto& cfg = tpl.config;
  const std::uint64_t seed = cfg.seed + snapshot_id;
  Rng rng(seed);
  const Vec2 hbs = hbs_position(cfg);

  std::vector<UeParams> ues;
  ues.reserve(cfg.num_ues);
  for (std::size_t i = 0; i < cfg.num_ues; ++i) {
    UeParams u = detail::ue_from_template(tpl.ue);
    Vec2 pos;
    double d = 0.0;
    do {
      pos = {rng.uniform() * cfg.cell_side, rng.uniform() * cfg.cell_side};
      d = distance(pos, hbs);
    } while (!(d > 0.0));
    u.position = pos;
    u.distance = d;
    u.g = u.h = path_gain(d, cfg.attenuation_k);
    if (tpl.ue.mu) {
      u.mu = *tpl.ue.mu;
    } else {
      do {
        u.mu = rng.uniform();
      } while (u.mu < kMinSampledMu);
    }
    ues.push_back(std::move(u));
  }
  return detail::finish(tpl, std::move(ues), snapshot_id, seed);
}

// Per-UE overrides for fixed-distance snapshots.
struct FixedSnapshotSpec {
  std::vector<double> distances;
  std::vector<double> gamma_targets;  // empty: use template value
  std::vector<double> mu;             // empty: use template value (required then)
};

inline Snapshot snapshot_from_distances(const ScenarioTemplate& tpl, const FixedSnapshotSpec& spec) {
  const auto k = spec.distances.size();
  std::vector<std::string> issues;
  if (k == 0) issues.push_back("snapshot.distances_m: at least one distance is required");
  if (tpl.config.num_ues != k)
    issues.push_back("snapshot.distances_m: length " + std::to_string(k) + " does not match num_ues " +
                     std::to_string(tpl.config.num_ues));
  if (!spec.gamma_targets.empty() && spec.gamma_targets.size() != k)
    issues.push_back("snapshot.gamma_targets: length mismatch with distances");
  if (!spec.mu.empty() && spec.mu.size() != k) issues.push_back("snapshot.mu: length mismatch with distances");
  if (spec.mu.empty() && !tpl.ue.mu)
    issues.push_back("snapshot.mu: fixed snapshots need mu either per UE or in the UE template");
  for (std::size_t i = 0; i < k; ++i)
    if (!(spec.distances[i] > 0.0))
      issues.push_back("snapshot.distances_m[" + std::to_string(i) + "]: distance must be strictly positive");
  if (!issues.empty()) throw ConfigError(std::move(issues));

  std::vector<UeParams> ues;
  ues.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    UeParams u = detail::ue_from_template(tpl.ue);
    u.distance = spec.distances[i];
    u.g = u.h = path_gain(u.distance, tpl.config.attenuation_k);
    u.mu = spec.mu.empty() ? *tpl.ue.mu : spec.mu[i];
    if (!spec.gamma_targets.empty()) u.gamma_target = spec.gamma_targets[i];
    ues.push_back(std::move(u));
  }
  return detail::finish(tpl, std::move(ues), 0, tpl.config.seed);
}

}  // namespace ehpc
