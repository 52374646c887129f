#pragma once

// Scenario files, snapshot replay files, CSV writers and run manifests.
//
// Scenario files use dBm for powers and dB for the self-interference
// coefficient; everything is converted to watts on load. Parsing is strict:
// unknown keys and wrong types are configuration errors.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ehpc/channel.hpp"
#include "ehpc/engine.hpp"
#include "ehpc/oracle.hpp"
#include "ehpc/power_control.hpp"
#include "ehpc/units.hpp"

namespace ehpc {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

// A scenario file: the template every snapshot is drawn from, plus an optional
// fixed-distance snapshot.
struct ScenarioFile {
  ScenarioTemplate tpl;
  std::optional<FixedSnapshotSpec> snapshot;
};

namespace detail {

class StrictObject {
 public:
  StrictObject(const json& j, std::string path, std::vector<std::string>& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {
    if (!j_.is_object()) issues_.push_back(path_ + ": expected an object");
  }

  ~StrictObject() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_) known = known || k == it.key();
      if (!known) issues_.push_back(path_ + "." + it.key() + ": unknown key");
    }
  }

  StrictObject(const StrictObject&) = delete;
  StrictObject& operator=(const StrictObject&) = delete;

  const json* find(const std::string& key) {
    seen_.push_back(key);
    if (!j_.is_object()) return nullptr;
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else issues_.push_back(at(key) + ": expected a number");
    }
  }

  std::optional<double> optional_number(const std::string& key) {
    if (const json* v = find(key)) {
      if (v->is_number()) return v->get<double>();
      issues_.push_back(at(key) + ": expected a number");
    }
    return std::nullopt;
  }

  // dBm on disk, watts in memory.
  void dbm(const std::string& key, double& watts) {
    if (auto x = optional_number(key)) watts = dbm_to_watt(*x);
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long long lo) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) {
        issues_.push_back(at(key) + ": expected an integer");
      } else if (v->get<long long>() < lo) {
        issues_.push_back(at(key) + ": must be at least " + std::to_string(lo));
      } else {
        out = static_cast<Int>(v->get<long long>());
      }
    }
  }

  std::vector<double> number_list(const std::string& key) {
    std::vector<double> out;
    if (const json* v = find(key)) {
      if (!v->is_array()) {
        issues_.push_back(at(key) + ": expected an array of numbers");
        return out;
      }
      for (std::size_t i = 0; i < v->size(); ++i) {
        if ((*v)[i].is_number()) out.push_back((*v)[i].get<double>());
        else issues_.push_back(at(key) + "[" + std::to_string(i) + "]: expected a number");
      }
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::vector<std::string> seen_;
};

}  // namespace detail

// Parses and validates a scenario document. Throws ConfigError listing every
// problem found.
inline ScenarioFile parse_scenario(const json& root) {
  std::vector<std::string> issues;
  ScenarioFile f;
  auto& cfg = f.tpl.config;
  auto& hbs = f.tpl.hbs;
  auto& ue = f.tpl.ue;
  {
    detail::StrictObject top(root, "$", issues);
    if (const json* s = top.find("scenario")) {
      detail::StrictObject o(*s, "scenario", issues);
      o.integer("num_ues", cfg.num_ues, 1);
      o.number("epsilon", cfg.epsilon);
      if (auto x = o.optional_number("delta_db")) cfg.delta = db_to_linear(*x);
      if (auto x = o.optional_number("sigma2_dbm")) cfg.sigma2 = dbm_to_watt(*x);
      else issues.push_back("scenario.sigma2_dbm: required");
      o.number("delta_t_s", cfg.delta_t);
      o.number("attenuation_k", cfg.attenuation_k);
      o.number("cell_side_m", cfg.cell_side);
      if (const json* p = o.find("hbs_placement")) {
        if (*p == "center") cfg.hbs_placement = HbsPlacement::center;
        else if (*p == "corner") cfg.hbs_placement = HbsPlacement::corner;
        else issues.push_back("scenario.hbs_placement: expected \"center\" or \"corner\"");
      }
      o.integer("seed", cfg.seed, 0);
      o.number("tol", cfg.tol);
      o.integer("max_iter", cfg.max_iter, 1);
    } else {
      issues.push_back("scenario: required section missing");
    }
    if (const json* s = top.find("hbs")) {
      detail::StrictObject o(*s, "hbs", issues);
      if (auto x = o.optional_number("p_bar_h_dbm")) hbs.p_bar_h = dbm_to_watt(*x);
      else issues.push_back("hbs.p_bar_h_dbm: required");
      o.integer("n_antennas", hbs.n_antennas, 1);
      o.dbm("p_dyn_dbm", hbs.p_dyn);
      o.dbm("p_sta_dbm", hbs.p_sta);
    } else {
      issues.push_back("hbs: required section missing");
    }
    if (const json* s = top.find("ue")) {
      detail::StrictObject o(*s, "ue", issues);
      o.integer("n_antennas", ue.n_antennas, 1);
      o.dbm("p_dyn_dbm", ue.p_dyn);
      o.dbm("p_sta_dbm", ue.p_sta);
      o.number("gamma_target", ue.gamma_target);
      o.number("eta", ue.eta);
      if (auto x = o.optional_number("p_bar_u_dbm")) ue.p_bar_u = dbm_to_watt(*x);
      ue.e_bar = o.optional_number("e_bar_j");
      ue.mu = o.optional_number("mu");
      if (ue.p_bar_u && ue.e_bar) issues.push_back("ue: give either p_bar_u_dbm or e_bar_j, not both");
    } else {
      issues.push_back("ue: required section missing");
    }
    if (const json* s = top.find("snapshot")) {
      detail::StrictObject o(*s, "snapshot", issues);
      FixedSnapshotSpec spec;
      spec.distances = o.number_list("distances_m");
      spec.gamma_targets = o.number_list("gamma_targets");
      spec.mu = o.number_list("mu");
      f.snapshot = std::move(spec);
    }
  }
  auto more = check_config(cfg);
  issues.insert(issues.end(), more.begin(), more.end());
  more = check_hbs(hbs);
  issues.insert(issues.end(), more.begin(), more.end());
  more = check_template(ue);
  issues.insert(issues.end(), more.begin(), more.end());
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return f;
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("$: malformed JSON: ") + e.what()});
  }
  return parse_scenario(root);
}

inline ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open config file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

// Resolved template in the on-disk schema (used for hashing and manifests).
inline json scenario_to_json(const ScenarioFile& f) {
  const auto& c = f.tpl.config;
  const auto& h = f.tpl.hbs;
  const auto& u = f.tpl.ue;
  json j;
  j["scenario"] = {{"num_ues", c.num_ues},
                   {"epsilon", c.epsilon},
                   {"delta_db", linear_to_db(c.delta)},
                   {"sigma2_dbm", watt_to_dbm(c.sigma2)},
                   {"delta_t_s", c.delta_t},
                   {"attenuation_k", c.attenuation_k},
                   {"cell_side_m", c.cell_side},
                   {"hbs_placement", to_string(c.hbs_placement)},
                   {"seed", c.seed},
                   {"tol", c.tol},
                   {"max_iter", c.max_iter}};
  j["hbs"] = {{"p_bar_h_dbm", watt_to_dbm(h.p_bar_h)},
              {"n_antennas", h.n_antennas},
              {"p_dyn_dbm", watt_to_dbm(h.p_dyn)},
              {"p_sta_dbm", watt_to_dbm(h.p_sta)}};
  json ue = {{"n_antennas", u.n_antennas},
             {"p_dyn_dbm", watt_to_dbm(u.p_dyn)},
             {"p_sta_dbm", watt_to_dbm(u.p_sta)},
             {"gamma_target", u.gamma_target},
             {"eta", u.eta}};
  if (u.p_bar_u) ue["p_bar_u_dbm"] = watt_to_dbm(*u.p_bar_u);
  if (u.e_bar) ue["e_bar_j"] = *u.e_bar;
  if (u.mu) ue["mu"] = *u.mu;
  j["ue"] = ue;
  if (f.snapshot) {
    json s = {{"distances_m", f.snapshot->distances}};
    if (!f.snapshot->gamma_targets.empty()) s["gamma_targets"] = f.snapshot->gamma_targets;
    if (!f.snapshot->mu.empty()) s["mu"] = f.snapshot->mu;
    j["snapshot"] = s;
  }
  return j;
}

// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const ScenarioFile& f) { return fnv1a_hex(scenario_to_json(f).dump()); }

// ---------------------------------------------------------------------------
// Snapshot replay (linear units, full precision)

inline json snapshot_to_json(const Snapshot& s) {
  const auto& c = s.config;
  json j;
  j["snapshot_id"] = s.snapshot_id;
  j["seed_used"] = s.seed_used;
  j["config"] = {{"num_ues", c.num_ues},         {"epsilon", c.epsilon},
                 {"delta", c.delta},             {"sigma2_w", c.sigma2},
                 {"delta_t_s", c.delta_t},       {"attenuation_k", c.attenuation_k},
                 {"cell_side_m", c.cell_side},   {"hbs_placement", to_string(c.hbs_placement)},
                 {"seed", c.seed},               {"tol", c.tol},
                 {"max_iter", c.max_iter}};
  j["hbs"] = {{"p_bar_h_w", s.hbs.p_bar_h},
              {"n_antennas", s.hbs.n_antennas},
              {"p_dyn_w", s.hbs.p_dyn},
              {"p_sta_w", s.hbs.p_sta}};
  json ues = json::array();
  for (const auto& u : s.ues) {
    json x = {{"distance_m", u.distance}, {"g", u.g},         {"h", u.h},
              {"mu", u.mu},               {"n_antennas", u.n_antennas},
              {"p_dyn_w", u.p_dyn},       {"p_sta_w", u.p_sta}, {"gamma_target", u.gamma_target},
              {"eta", u.eta},             {"p_bar_u_w", u.p_bar_u}};
    if (u.position) x["position_m"] = {u.position->x, u.position->y};
    if (u.e_bar) x["e_bar_j"] = *u.e_bar;
    ues.push_back(x);
  }
  j["ues"] = ues;
  return j;
}

inline Snapshot snapshot_from_json(const json& j) {
  std::vector<std::string> issues;
  Snapshot s;
  ScenarioConfig cfg;
  HbsParams hbs;
  std::vector<UeParams> ues;
  {
    detail::StrictObject top(j, "$", issues);
    top.integer("snapshot_id", s.snapshot_id, 0);
    top.integer("seed_used", s.seed_used, 0);
    if (const json* c = top.find("config")) {
      detail::StrictObject o(*c, "config", issues);
      o.integer("num_ues", cfg.num_ues, 1);
      o.number("epsilon", cfg.epsilon);
      o.number("delta", cfg.delta);
      o.number("sigma2_w", cfg.sigma2);
      o.number("delta_t_s", cfg.delta_t);
      o.number("attenuation_k", cfg.attenuation_k);
      o.number("cell_side_m", cfg.cell_side);
      if (const json* p = o.find("hbs_placement"))
        cfg.hbs_placement = (*p == "corner") ? HbsPlacement::corner : HbsPlacement::center;
      o.integer("seed", cfg.seed, 0);
      o.number("tol", cfg.tol);
      o.integer("max_iter", cfg.max_iter, 1);
    }
    if (const json* h = top.find("hbs")) {
      detail::StrictObject o(*h, "hbs", issues);
      o.number("p_bar_h_w", hbs.p_bar_h);
      o.integer("n_antennas", hbs.n_antennas, 1);
      o.number("p_dyn_w", hbs.p_dyn);
      o.number("p_sta_w", hbs.p_sta);
    }
    if (const json* arr = top.find("ues"); arr && arr->is_array()) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        detail::StrictObject o((*arr)[i], "ues[" + std::to_string(i) + "]", issues);
        UeParams u;
        o.number("distance_m", u.distance);
        o.number("g", u.g);
        o.number("h", u.h);
        o.number("mu", u.mu);
        o.integer("n_antennas", u.n_antennas, 1);
        o.number("p_dyn_w", u.p_dyn);
        o.number("p_sta_w", u.p_sta);
        o.number("gamma_target", u.gamma_target);
        o.number("eta", u.eta);
        o.number("p_bar_u_w", u.p_bar_u);
        u.e_bar = o.optional_number("e_bar_j");
        auto pos = o.number_list("position_m");
        if (pos.size() == 2) u.position = Vec2{pos[0], pos[1]};
        ues.push_back(u);
      }
    } else {
      issues.push_back("ues: expected an array");
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  static_cast<Scenario&>(s) = validate_scenario(cfg, hbs, std::move(ues));
  return s;
}

// ---------------------------------------------------------------------------
// CSV

// 17 significant digits.
inline std::string fmt_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline const char* fmt_bool(bool b) { return b ? "true" : "false"; }

inline void write_snapshot_csv(std::ostream& os, const std::vector<Snapshot>& snaps) {
  os << "snapshot_id,ue,d_m,g,mu\n";
  for (const auto& s : snaps)
    for (std::size_t i = 0; i < s.size(); ++i)
      os << s.snapshot_id << ',' << i + 1 << ',' << fmt_num(s.ues[i].distance) << ',' << fmt_num(s.ues[i].g)
         << ',' << fmt_num(s.ues[i].mu) << '\n';
}

inline void write_trace_csv(std::ostream& os, const IterationTrace& tr, std::size_t k) {
  os << "t";
  for (std::size_t i = 1; i <= k; ++i) os << ",p_u_" << i;
  os << ",p_h";
  for (std::size_t i = 1; i <= k; ++i) os << ",sinr_" << i;
  for (std::size_t i = 1; i <= k; ++i) os << ",rate_" << i;
  for (std::size_t i = 1; i <= k; ++i) os << ",feasible_" << i;
  for (std::size_t i = 1; i <= k; ++i) os << ",outage_" << i;
  os << '\n';
  for (const auto& st : tr.steps) {
    os << st.t;
    for (double x : st.p.p_u) os << ',' << fmt_num(x);
    os << ',' << fmt_num(st.p.p_h);
    for (double x : st.metrics.sinr) os << ',' << fmt_num(x);
    for (double x : st.metrics.rate) os << ',' << fmt_num(x);
    for (bool b : st.metrics.energy_feasible) os << ',' << fmt_bool(b);
    for (bool b : st.metrics.outage) os << ',' << fmt_bool(b);
    os << '\n';
  }
}

// Long format: one row per (axis value, metric).
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "axis,metric_name,mean,half_width,n\n";
  for (const auto& p : r.points) {
    for (std::size_t m = 0; m < kNumSweepMetrics; ++m)
      os << fmt_num(p.value) << ',' << kSweepMetricNames[m] << ',' << fmt_num(p.stats[m].mean) << ','
         << fmt_num(p.stats[m].half_width) << ',' << p.stats[m].n << '\n';
    os << fmt_num(p.value) << ",nonconverged," << fmt_num(static_cast<double>(p.nonconverged)) << ','
       << fmt_num(0.0) << ',' << r.n_snapshots << '\n';
  }
}

inline void write_mobility_csv(std::ostream& os, const MobilityRun& run) {
  os << "t,avg_sinr,avg_p_u,p_h,min_battery,harvesting_active,ues_off\n";
  for (const auto& r : run.records) {
    const auto k = r.p.p_u.size();
    double sinr = 0.0, pu = 0.0, bat = std::numeric_limits<double>::infinity();
    std::size_t off = 0;
    for (std::size_t i = 0; i < k; ++i) {
      sinr += r.metrics.sinr[i];
      pu += r.p.p_u[i];
      bat = std::min(bat, r.state.battery[i]);
      off += r.state.off[i] ? 1 : 0;
    }
    os << fmt_num(r.t) << ',' << fmt_num(sinr / static_cast<double>(k)) << ',' << fmt_num(pu / static_cast<double>(k))
       << ',' << fmt_num(r.p.p_h) << ',' << fmt_num(bat) << ',' << fmt_bool(r.state.harvesting_active) << ',' << off
       << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON reports

inline json power_vector_json(const PowerVector& p) { return {{"p_u_w", p.p_u}, {"p_h_w", p.p_h}}; }

inline json metrics_json(const Metrics& m) {
  return {{"sinr", m.sinr},
          {"rate_bps_hz", m.rate},
          {"ue_total_power_w", m.ue_total_power},
          {"hbs_total_power_w", m.hbs_total_power},
          {"harvested_power_w", m.harvested_power},
          {"aggregate_power_w", m.aggregate_power},
          {"aggregate_throughput_bps_hz", m.aggregate_throughput},
          {"energy_feasible", m.energy_feasible},
          {"outage", m.outage}};
}

inline json feasibility_json(const FeasibilityReport& r) {
  return {{"ue_feasible", r.ue_feasible},
          {"all_feasible", r.all_feasible},
          {"hbs_cap_binding", r.hbs_cap_binding},
          {"required_hbs_power_w", r.required_hbs_power}};
}

inline json fl_report_json(const FLReport& r) {
  return {{"alpha", r.alpha},
          {"grad", r.grad},
          {"active_index", r.active_index},
          {"grad_norm_inf", r.grad_norm_inf},
          {"grad_norm_row", r.grad_norm_row},
          {"grad_nonneg", r.grad_nonneg},
          {"grad_f0_positive", r.grad_f0_positive},
          {"qualifies", r.qualifies}};
}

// ---------------------------------------------------------------------------
// Manifests

struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string placement;
  std::vector<std::string> outputs;
  double wall_clock_s = 0.0;
  json extra = json::object();
};

inline json manifest_json(const RunManifest& m) {
  return {{"subcommand", m.subcommand},   {"config_path", m.config_path}, {"config_hash", m.config_hash},
          {"seed", m.seed},               {"hbs_placement", m.placement}, {"tool_version", kToolVersion},
          {"outputs", m.outputs},         {"wall_clock_s", m.wall_clock_s}, {"parameters", m.extra}};
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return output.string() + ".manifest.json";
}

// Writes one sidecar next to every output file.
inline void write_manifests(const RunManifest& m, const std::filesystem::path& dir) {
  const auto j = manifest_json(m).dump(2);
  for (const auto& out : m.outputs) {
    std::ofstream f(manifest_path_for(dir / out));
    f << j << '\n';
  }
}

}  // namespace ehpc
