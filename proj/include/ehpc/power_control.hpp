#pragma once

// Per-UE and HBS power update maps and the metrics derived from a power state.
// Everything here is a pure function of (power vector, scenario).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ehpc/units.hpp"

namespace ehpc {

// Joint transmit state: K uplink powers and the HBS energy-signal power.
struct PowerVector {
  std::vector<double> p_u;
  double p_h = 0.0;

  std::size_t size() const noexcept { return p_u.size(); }

  static PowerVector uniform(std::size_t k, double value) { return {std::vector<double>(k, value), value}; }
};

enum class Algorithm { tpceh, opceh, tpc, opc };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::tpceh, Algorithm::opceh, Algorithm::tpc, Algorithm::opc};

inline bool harvests(Algorithm a) { return a == Algorithm::tpceh || a == Algorithm::opceh; }

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::tpceh: return "TPCEH";
    case Algorithm::opceh: return "OPCEH";
    case Algorithm::tpc: return "TPC";
    case Algorithm::opc: return "OPC";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto a : kAllAlgorithms)
    if (up == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

// Sum_{j != i} h_j p_j + delta p_h + sigma^2, i.e. the SINR denominator.
// `self_interference` = false drops the delta term (half-duplex baselines).
inline double interference_plus_noise(const PowerVector& p, const Scenario& s, std::size_t i,
                                      bool self_interference = true) {
  double acc = 0.0;
  for (std::size_t j = 0; j < s.ues.size(); ++j)
    if (j != i) acc += s.ues[j].h * p.p_u[j];
  if (self_interference) acc += s.config.delta * p.p_h;
  return acc + s.config.sigma2;
}

inline std::vector<double> sinr(const PowerVector& p, const Scenario& s) {
  std::vector<double> out(s.ues.size());
  for (std::size_t i = 0; i < s.ues.size(); ++i)
    out[i] = s.ues[i].h * p.p_u[i] / interference_plus_noise(p, s, i);
  return out;
}

inline double rate_from_sinr(double gamma) { return std::log2(1.0 + gamma); }

inline std::vector<double> rate(const PowerVector& p, const Scenario& s) {
  auto g = sinr(p, s);
  for (auto& x : g) x = rate_from_sinr(x);
  return g;
}

// Energy-signal power UE i needs to run its circuit and transmit p_u.
inline double required_hbs_power(double p_u, const UeParams& ue, double epsilon) {
  return p_u / (epsilon * ue.mu * ue.g) + ue.p_min;
}

// max_i (p_u[i] / (eps mu_i g_i) + p_min_i), without the peak-power clip.
inline double optimal_hbs_power(const std::vector<double>& p_u, const Scenario& s) {
  double best = 0.0;
  for (std::size_t i = 0; i < s.ues.size(); ++i)
    best = std::max(best, required_hbs_power(p_u[i], s.ues[i], s.config.epsilon));
  return best;
}

inline double hbs_update(const PowerVector& p, const Scenario& s) {
  return std::min(s.hbs.p_bar_h, optimal_hbs_power(p.p_u, s));
}

inline double tpceh_ue_update(const PowerVector& p, const Scenario& s, std::size_t i) {
  const auto& ue = s.ues[i];
  return std::min(ue.p_bar_u, ue.gamma_target * interference_plus_noise(p, s, i) / ue.h);
}

inline double opceh_ue_update(const PowerVector& p, const Scenario& s, std::size_t i) {
  const auto& ue = s.ues[i];
  return std::min(ue.p_bar_u, ue.eta * ue.h / interference_plus_noise(p, s, i));
}

// Baselines: no energy signal, no self-interference term.
inline double tpc_ue_update(const PowerVector& p, const Scenario& s, std::size_t i) {
  const auto& ue = s.ues[i];
  return std::min(ue.p_bar_u, ue.gamma_target * interference_plus_noise(p, s, i, false) / ue.h);
}

inline double opc_ue_update(const PowerVector& p, const Scenario& s, std::size_t i) {
  const auto& ue = s.ues[i];
  return std::min(ue.p_bar_u, ue.eta * ue.h / interference_plus_noise(p, s, i, false));
}

inline double ue_update(Algorithm a, const PowerVector& p, const Scenario& s, std::size_t i) {
  switch (a) {
    case Algorithm::tpceh: return tpceh_ue_update(p, s, i);
    case Algorithm::opceh: return opceh_ue_update(p, s, i);
    case Algorithm::tpc: return tpc_ue_update(p, s, i);
    case Algorithm::opc: return opc_ue_update(p, s, i);
  }
  return 0.0;
}

// One synchronous step p(t+1) = f(p(t)). Baselines keep p_h at zero.
inline PowerVector joint_update(Algorithm a, const PowerVector& p, const Scenario& s) {
  PowerVector next;
  next.p_u.resize(s.ues.size());
  for (std::size_t i = 0; i < s.ues.size(); ++i) next.p_u[i] = ue_update(a, p, s, i);
  next.p_h = harvests(a) ? hbs_update(p, s) : 0.0;
  return next;
}

inline PowerVector clip_to_caps(PowerVector p, const Scenario& s) {
  for (std::size_t i = 0; i < s.ues.size(); ++i) p.p_u[i] = std::clamp(p.p_u[i], 0.0, s.ues[i].p_bar_u);
  p.p_h = std::clamp(p.p_h, 0.0, s.hbs.p_bar_h);
  return p;
}

inline constexpr double kOutageSlack = 1e-6;
inline constexpr double kFeasibilitySlack = 1e-12;

struct Metrics {
  std::vector<double> sinr;
  std::vector<double> rate;               // bit/s/Hz
  std::vector<double> ue_total_power;     // p_u / eps + p_cir
  double hbs_total_power = 0.0;           // p_h / eps + p_cir_HBS
  std::vector<double> harvested_power;    // mu g p_h
  double aggregate_power = 0.0;
  double aggregate_throughput = 0.0;
  std::vector<bool> energy_feasible;
  std::vector<bool> outage;

  bool all_energy_feasible() const { return std::all_of(energy_feasible.begin(), energy_feasible.end(), [](bool b) { return b; }); }
  bool any_outage() const { return std::any_of(outage.begin(), outage.end(), [](bool b) { return b; }); }
};

inline bool energy_feasible(double p_h, double p_u, const UeParams& ue, double epsilon) {
  const double need = required_hbs_power(p_u, ue, epsilon);
  return p_h >= need - kFeasibilitySlack * need;
}

inline Metrics metrics(const PowerVector& p, const Scenario& s) {
  const auto k = s.ues.size();
  const double eps = s.config.epsilon;
  Metrics m;
  m.sinr = sinr(p, s);
  m.rate.resize(k);
  m.ue_total_power.resize(k);
  m.harvested_power.resize(k);
  m.energy_feasible.resize(k);
  m.outage.resize(k);
  double ue_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& ue = s.ues[i];
    m.rate[i] = rate_from_sinr(m.sinr[i]);
    m.ue_total_power[i] = p.p_u[i] / eps + ue.p_cir;
    m.harvested_power[i] = ue.mu * ue.g * p.p_h;
    m.energy_feasible[i] = energy_feasible(p.p_h, p.p_u[i], ue, eps);
    m.outage[i] = m.sinr[i] < ue.gamma_target * (1.0 - kOutageSlack);
    ue_sum += m.ue_total_power[i];
    m.aggregate_throughput += m.rate[i];
  }
  m.hbs_total_power = p.p_h / eps + s.hbs.p_cir;
  m.aggregate_power = ue_sum + m.hbs_total_power;
  return m;
}

}  // namespace ehpc
