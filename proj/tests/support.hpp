#pragma once

// Hand-built scenarios shared by the unit tests.

#include <string>
#include <vector>

#include "ehpc/ehpc.hpp"

namespace ehpc::support {

struct UeSpec {
  double g = 1e-3;
  double mu = 0.5;
  double p_cir = 1e-6;
  double gamma = 0.05;
  double p_bar_u = 1.0;
  double eta = 1.0;
};

// n_antennas = 1 and p_dyn = 0, so p_cir is exactly the static power.
inline UeParams make_ue(const UeSpec& u) {
  UeParams x;
  x.g = x.h = u.g;
  x.mu = u.mu;
  x.n_antennas = 1;
  x.p_sta = u.p_cir;
  x.gamma_target = u.gamma;
  x.p_bar_u = u.p_bar_u;
  x.eta = u.eta;
  return x;
}

inline Scenario make_scenario(const std::vector<UeSpec>& ues, double sigma2 = 1e-14, double delta = 0.0,
                              double epsilon = 0.2, double p_bar_h = 10.0, double hbs_cir = 0.0) {
  ScenarioConfig c;
  c.num_ues = ues.size();
  c.sigma2 = sigma2;
  c.delta = delta;
  c.epsilon = epsilon;
  HbsParams h;
  h.p_bar_h = p_bar_h;
  h.n_antennas = 1;
  h.p_sta = hbs_cir;
  std::vector<UeParams> v;
  for (const auto& u : ues) v.push_back(make_ue(u));
  return validate_scenario(c, h, v);
}

inline std::string config_path(const std::string& name) { return std::string(EHPC_CONFIG_DIR) + "/" + name; }

inline Snapshot fixed_snapshot(const std::string& name) {
  const auto f = load_scenario_file(config_path(name));
  return snapshot_from_distances(f.tpl, *f.snapshot);
}

}  // namespace ehpc::support
