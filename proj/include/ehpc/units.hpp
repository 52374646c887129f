#pragma once

// Unit conversions, scenario parameter types and their validation.
//
// Everything downstream of this header works in linear watts, joules and
// seconds. dB / dBm only appear at the configuration boundary.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ehpc {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class HbsPlacement { center, corner };

inline const char* to_string(HbsPlacement p) {
  return p == HbsPlacement::center ? "center" : "corner";
}

// Global physical and numerical parameters of one cell.
struct ScenarioConfig {
  std::size_t num_ues = 5;
  double epsilon = 0.2;          // power-amplifier efficiency
  double delta = 1e-12;          // effective self-interference coefficient (linear)
  double sigma2 = 0.0;           // AWGN power at the HBS receiver [W]
  double delta_t = 1.0;          // harvesting interval [s]
  double attenuation_k = 0.09;   // path-loss factor in g = k d^-3
  double cell_side = 50.0;       // [m]
  HbsPlacement hbs_placement = HbsPlacement::center;
  std::uint64_t seed = 1;
  double tol = 1e-9;             // relative convergence tolerance
  std::size_t max_iter = 10000;
};

struct HbsParams {
  double p_bar_h = 0.0;          // peak energy-signal power [W]
  int n_antennas = 2;
  double p_dyn = 0.0;            // per-antenna dynamic circuit power [W]
  double p_sta = 0.0;            // static circuit power [W]
  double p_cir = 0.0;            // derived: n_antennas * p_dyn + p_sta
};

// Fully-resolved per-UE state. `position` is empty for snapshots built from a
// fixed distance vector, which bypasses cell geometry.
struct UeParams {
  std::optional<Vec2> position;
  double distance = 0.0;
  double g = 0.0;                // downlink gain HBS -> UE
  double h = 0.0;                // uplink gain UE -> HBS
  double mu = 0.0;               // harvesting efficiency
  int n_antennas = 2;
  double p_dyn = 0.0;
  double p_sta = 0.0;
  double p_cir = 0.0;            // derived
  double gamma_target = 0.0;     // linear
  double eta = 1.0;              // target signal-interference product
  double p_bar_u = 0.0;          // uplink power cap [W]
  std::optional<double> e_bar;   // max harvestable energy per interval [J]
  double p_min = 0.0;            // derived: p_cir / (mu g)
};

// Per-UE parameters that do not depend on placement; used to populate sampled
// snapshots. An empty `mu` means "draw uniformly from (0, 1)".
struct UeTemplate {
  int n_antennas = 2;
  double p_dyn = 0.0;
  double p_sta = 0.0;
  double gamma_target = 0.05;
  double eta = 1.0;
  std::optional<double> p_bar_u;
  std::optional<double> e_bar;
  std::optional<double> mu;
};

inline double circuit_power(int n_antennas, double p_dyn, double p_sta) {
  return static_cast<double>(n_antennas) * p_dyn + p_sta;
}

// Thrown with every violated invariant, each prefixed by its field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::ostringstream os;
    os << "invalid scenario";
    for (const auto& s : issues) os << "\n  " << s;
    return os.str();
  }

  std::vector<std::string> issues_;
};

namespace detail {

inline void require(std::vector<std::string>& out, bool ok, const std::string& path,
                    const std::string& msg) {
  if (!ok) out.push_back(path + ": " + msg);
}

inline bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

inline std::vector<std::string> check_config(const ScenarioConfig& c) {
  std::vector<std::string> e;
  using detail::require;
  require(e, c.num_ues >= 1, "scenario.num_ues", "at least one UE is required");
  require(e, c.epsilon > 0.0 && c.epsilon <= 1.0, "scenario.epsilon", "epsilon out of range (0, 1]");
  require(e, std::isfinite(c.delta) && c.delta >= 0.0, "scenario.delta", "delta must be non-negative");
  require(e, std::isfinite(c.sigma2) && c.sigma2 > 0.0, "scenario.sigma2", "sigma2 must be strictly positive");
  require(e, std::isfinite(c.delta_t) && c.delta_t > 0.0, "scenario.delta_t", "delta_t must be strictly positive");
  require(e, std::isfinite(c.attenuation_k) && c.attenuation_k > 0.0, "scenario.attenuation_k",
          "attenuation factor must be strictly positive");
  require(e, std::isfinite(c.cell_side) && c.cell_side > 0.0, "scenario.cell_side", "cell_side must be strictly positive");
  require(e, std::isfinite(c.tol) && c.tol > 0.0, "scenario.tol", "tol must be strictly positive");
  require(e, c.max_iter >= 1, "scenario.max_iter", "max_iter must be at least 1");
  return e;
}

inline std::vector<std::string> check_hbs(const HbsParams& h) {
  std::vector<std::string> e;
  using detail::require;
  require(e, std::isfinite(h.p_bar_h) && h.p_bar_h > 0.0, "hbs.p_bar_h", "peak power must be strictly positive");
  require(e, h.n_antennas >= 1, "hbs.n_antennas", "at least one antenna is required");
  require(e, detail::finite_all({h.p_dyn, h.p_sta}) && h.p_dyn >= 0.0 && h.p_sta >= 0.0, "hbs.p_dyn/p_sta",
          "circuit powers must be non-negative");
  return e;
}

inline std::vector<std::string> check_template(const UeTemplate& t, const std::string& path = "ue") {
  std::vector<std::string> e;
  using detail::require;
  require(e, t.n_antennas >= 1, path + ".n_antennas", "at least one antenna is required");
  require(e, detail::finite_all({t.p_dyn, t.p_sta}) && t.p_dyn >= 0.0 && t.p_sta >= 0.0, path + ".p_dyn/p_sta",
          "circuit powers must be non-negative");
  require(e, std::isfinite(t.gamma_target) && t.gamma_target >= 0.0, path + ".gamma_target",
          "target SINR must be non-negative");
  require(e, std::isfinite(t.eta) && t.eta >= 0.0, path + ".eta", "eta must be non-negative");
  require(e, t.p_bar_u.has_value() || t.e_bar.has_value(), path + ".p_bar_u",
          "either p_bar_u or e_bar must be given");
  if (t.p_bar_u)
    require(e, std::isfinite(*t.p_bar_u) && *t.p_bar_u > 0.0, path + ".p_bar_u", "power cap must be strictly positive");
  if (t.mu) {
    require(e, *t.mu > 0.0, path + ".mu", "mu must be strictly positive");
    require(e, *t.mu < 1.0, path + ".mu", "mu must be below 1");
  }
  return e;
}

// Fills p_cir, p_min and (when e_bar is set) p_bar_u. Returns the issues found.
inline std::vector<std::string> derive_ue(UeParams& u, const ScenarioConfig& c, const std::string& path) {
  std::vector<std::string> e;
  using detail::require;
  require(e, u.n_antennas >= 1, path + ".n_antennas", "at least one antenna is required");
  require(e, detail::finite_all({u.p_dyn, u.p_sta}) && u.p_dyn >= 0.0 && u.p_sta >= 0.0, path + ".p_dyn/p_sta",
          "circuit powers must be non-negative");
  require(e, std::isfinite(u.mu) && u.mu > 0.0, path + ".mu", "mu must be strictly positive");
  require(e, u.mu < 1.0, path + ".mu", "mu must be below 1");
  require(e, std::isfinite(u.g) && u.g > 0.0, path + ".g", "downlink gain must be strictly positive");
  require(e, std::isfinite(u.h) && u.h > 0.0, path + ".h", "uplink gain must be strictly positive");
  require(e, std::isfinite(u.gamma_target) && u.gamma_target >= 0.0, path + ".gamma_target",
          "target SINR must be non-negative");
  require(e, std::isfinite(u.eta) && u.eta >= 0.0, path + ".eta", "eta must be non-negative");

  u.p_cir = circuit_power(u.n_antennas, u.p_dyn, u.p_sta);
  if (u.e_bar) {
    u.p_bar_u = c.epsilon * (*u.e_bar / c.delta_t - u.p_cir);
    require(e, u.p_bar_u > 0.0, path + ".e_bar", "e_bar too small: derived p_bar_u must be strictly positive");
  } else {
    require(e, std::isfinite(u.p_bar_u) && u.p_bar_u > 0.0, path + ".p_bar_u", "power cap must be strictly positive");
  }
  if (u.mu > 0.0 && u.g > 0.0) u.p_min = u.p_cir / (u.mu * u.g);
  return e;
}

// A validated parameter set: every invariant holds and derived fields are set.
struct Scenario {
  ScenarioConfig config;
  HbsParams hbs;
  std::vector<UeParams> ues;

  std::size_t size() const noexcept { return ues.size(); }
};

inline Scenario validate_scenario(ScenarioConfig cfg, HbsParams hbs, std::vector<UeParams> ues) {
  auto issues = check_config(cfg);
  auto hbs_issues = check_hbs(hbs);
  issues.insert(issues.end(), hbs_issues.begin(), hbs_issues.end());
  if (ues.size() != cfg.num_ues)
    issues.push_back("ues: expected " + std::to_string(cfg.num_ues) + " UEs, got " + std::to_string(ues.size()));
  hbs.p_cir = circuit_power(hbs.n_antennas, hbs.p_dyn, hbs.p_sta);
  for (std::size_t i = 0; i < ues.size(); ++i) {
    auto ue_issues = derive_ue(ues[i], cfg, "ues[" + std::to_string(i) + "]");
    issues.insert(issues.end(), ue_issues.begin(), ue_issues.end());
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return Scenario{cfg, hbs, std::move(ues)};
}

}  // namespace ehpc
