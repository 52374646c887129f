// Command-line front end.
//
//   ehpc snapshot --config FILE [--algorithm TPCEH] [--out DIR]
//   ehpc sweep    --config FILE --axis delta_db --values -130,-120 --algorithm TPC,TPCEH
//   ehpc mobility --config FILE --algorithm TPCEH --duration 10
//   ehpc verify   --config FILE --claims scalability,theorem2 --K 2
//
// Exit codes: 0 ok, 2 configuration or argument error, 3 non-convergence,
// 4 verification failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ehpc/ehpc.hpp"

namespace fs = std::filesystem;
using namespace ehpc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitVerify = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> algorithms{"TPCEH"};
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> snapshots;
  std::optional<double> tol;
  std::optional<long long> max_iter;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario JSON file")->required();
  cmd->add_option("--algorithm", c.algorithms, "TPCEH, OPCEH, TPC or OPC (comma separated where several apply)")
      ->delimiter(',');
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_option("--snapshots", c.snapshots, "Number of random snapshots");
  cmd->add_option("--tol", c.tol, "Relative convergence tolerance");
  cmd->add_option("--max-iter", c.max_iter, "Iteration budget");
  cmd->add_option("--out", c.out, "Output directory");
}

struct Loaded {
  ScenarioFile file;
  std::string hash;
};

Loaded load(const Common& c) {
  Loaded l{load_scenario_file(c.config), {}};
  auto& cfg = l.file.tpl.config;
  if (c.seed) cfg.seed = *c.seed;
  if (c.tol) {
    if (!(*c.tol > 0.0)) throw UsageError("--tol must be strictly positive");
    cfg.tol = *c.tol;
  }
  l.hash = config_hash(l.file);
  return l;
}

std::vector<Algorithm> algorithms(const Common& c) {
  std::vector<Algorithm> out;
  for (const auto& a : c.algorithms) {
    try {
      out.push_back(parse_algorithm(a));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("no algorithm given");
  return out;
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  fn(f);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunManifest manifest_for(const std::string& sub, const Common& c, const Loaded& l) {
  RunManifest m;
  m.subcommand = sub;
  m.config_path = c.config;
  m.config_hash = l.hash;
  m.seed = l.file.tpl.config.seed;
  m.placement = to_string(l.file.tpl.config.hbs_placement);
  return m;
}

// The fixed snapshot from the file when present, otherwise a random one.
Snapshot scenario_snapshot(const ScenarioFile& f, std::uint64_t id) {
  if (f.snapshot) return snapshot_from_distances(f.tpl, *f.snapshot);
  return sample_snapshot(f.tpl, id);
}

// ---------------------------------------------------------------------------

struct SnapshotArgs {
  std::uint64_t snapshot_id = 0;
  std::string replay;
};

int cmd_snapshot(const Common& c, const SnapshotArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto l = load(c);
  const auto algs = algorithms(c);
  const auto out = prepare_out(c.out);

  Snapshot snap;
  if (!a.replay.empty()) {
    std::ifstream in(a.replay);
    if (!in) throw ConfigError({a.replay + ": cannot open snapshot file"});
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError({a.replay + ": malformed JSON: " + e.what()});
    }
    snap = snapshot_from_json(j);
  } else {
    snap = scenario_snapshot(l.file, a.snapshot_id);
  }

  const double tol = snap.config.tol;
  std::size_t max_iter = snap.config.max_iter;
  if (c.max_iter) {
    if (*c.max_iter < 0) throw UsageError("--max-iter must be non-negative");
    max_iter = static_cast<std::size_t>(*c.max_iter);
  }

  auto m = manifest_for("snapshot", c, l);
  m.extra = {{"tol", tol}, {"max_iter", max_iter}, {"snapshot_id", snap.snapshot_id}};
  write_text(out / "snapshot.json", snapshot_to_json(snap).dump(2) + "\n");
  write_file(out / "snapshot.csv", [&](std::ostream& os) { write_snapshot_csv(os, {snap}); });
  m.outputs = {"snapshot.json", "snapshot.csv"};

  bool all_converged = true;
  json algs_json = json::array();
  for (auto alg : algs) {
    const auto tr = run_fixed_point(alg, snap, default_initial_power(snap), tol, max_iter);
    const auto name = lower(to_string(alg));
    const auto trace_file = "trace_" + name + ".csv";
    const auto summary_file = "summary_" + name + ".json";
    write_file(out / trace_file, [&](std::ostream& os) { write_trace_csv(os, tr, snap.size()); });

    const auto met = metrics(tr.fixed_point, snap);
    const auto feas = check_energy_feasibility(tr, snap);
    json warnings = json::array();
    if (!tr.converged) warnings.push_back("did not converge within max_iter");
    if (harvests(alg) && feas.hbs_cap_binding)
      warnings.push_back("energy-infeasible: HBS at peak power and some UE cannot cover its consumption");
    json summary = {{"algorithm", to_string(alg)},
                    {"converged", tr.converged},
                    {"iterations_used", tr.iterations_used},
                    {"last_relative_change", tr.last_relative_change},
                    {"tol", tol},
                    {"max_iter", max_iter},
                    {"hbs_placement", to_string(snap.config.hbs_placement)},
                    {"seed", snap.seed_used},
                    {"snapshot_id", snap.snapshot_id},
                    {"fixed_point", power_vector_json(tr.fixed_point)},
                    {"metrics", metrics_json(met)},
                    {"feasibility", feasibility_json(feas)},
                    {"warnings", warnings},
                    {"manifest", manifest_path_for(summary_file).string()}};
    write_text(out / summary_file, summary.dump(2) + "\n");
    m.outputs.push_back(trace_file);
    m.outputs.push_back(summary_file);
    algs_json.push_back(to_string(alg));

    std::cout << to_string(alg) << ": " << (tr.converged ? "converged" : "NOT converged") << " after "
              << tr.iterations_used << " iterations, aggregate power " << fmt_num(met.aggregate_power)
              << " W, throughput " << fmt_num(met.aggregate_throughput) << " bit/s/Hz\n";
    for (const auto& w : warnings) std::cout << "  warning: " << w.get<std::string>() << '\n';
    all_converged = all_converged && tr.converged;
  }
  m.extra["algorithms"] = algs_json;
  m.wall_clock_s = seconds_since(t0);
  write_manifests(m, out);
  return all_converged ? 0 : kExitNonConvergence;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string axis;
  std::vector<double> values;
  unsigned threads = 0;
  bool exclude_nonconverged = false;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepAxis axis;
  try {
    axis = parse_axis(a.axis);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.values.empty()) throw UsageError("--values needs at least one value");
  auto l = load(c);
  if (c.max_iter) {
    if (*c.max_iter < 1) throw UsageError("--max-iter must be at least 1 for sweeps");
    l.file.tpl.config.max_iter = static_cast<std::size_t>(*c.max_iter);
  }
  const auto algs = algorithms(c);
  for (double v : a.values) (void)apply_axis(l.file.tpl, axis, v);  // rejects bad values up front
  const auto out = prepare_out(c.out);

  MonteCarloOptions opt;
  opt.n_snapshots = c.snapshots.value_or(200);
  if (opt.n_snapshots < 1) throw UsageError("--snapshots must be at least 1");
  opt.threads = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
  opt.exclude_nonconverged = a.exclude_nonconverged;

  auto m = manifest_for("sweep", c, l);
  m.extra = {{"axis", to_string(axis)},
             {"values", a.values},
             {"n_snapshots", opt.n_snapshots},
             {"exclude_nonconverged", opt.exclude_nonconverged}};
  json algs_json = json::array();
  for (auto alg : algs) {
    const auto res = run_monte_carlo(alg, l.file.tpl, axis, a.values, opt);
    const auto file = "sweep_" + std::string(to_string(axis)) + "_" + lower(to_string(alg)) + ".csv";
    write_file(out / file, [&](std::ostream& os) { write_sweep_csv(os, res); });
    m.outputs.push_back(file);
    algs_json.push_back(to_string(alg));
    std::size_t nonconv = 0;
    for (const auto& p : res.points) nonconv += p.nonconverged;
    std::cout << to_string(alg) << ": " << res.points.size() << " points x " << opt.n_snapshots << " snapshots -> "
              << file;
    if (nonconv) std::cout << " (" << nonconv << " non-converged runs)";
    std::cout << '\n';
  }
  m.extra["algorithms"] = algs_json;
  m.wall_clock_s = seconds_since(t0);
  write_manifests(m, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct MobilityArgs {
  double duration = 10.0;
  double step = 1e-3;
  double speed_kmh = 5.0;
  double battery_j = 1e-6;
};

int cmd_mobility(const Common& c, const MobilityArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!std::isfinite(a.duration) || a.duration < 0.0) throw UsageError("--duration must be a non-negative number");
  if (!std::isfinite(a.step) || a.step <= 0.0) throw UsageError("--step must be strictly positive");
  if (!std::isfinite(a.speed_kmh) || a.speed_kmh < 0.0) throw UsageError("--speed-kmh must be non-negative");
  if (!(a.battery_j >= 0.0)) throw UsageError("--battery-j must be non-negative");
  const auto l = load(c);
  const auto algs = algorithms(c);
  const auto out = prepare_out(c.out);

  MobilityOptions opt;
  opt.duration_s = a.duration;
  opt.step_s = a.step;
  opt.speed_mps = a.speed_kmh / 3.6;
  opt.battery_init_j = a.battery_j;

  auto m = manifest_for("mobility", c, l);
  m.extra = {{"duration_s", a.duration}, {"step_s", a.step}, {"speed_kmh", a.speed_kmh}, {"battery_j", a.battery_j}};
  json runs = json::object();
  for (auto alg : algs) {
    const auto run = run_mobility(alg, l.file.tpl, opt);
    const auto file = "mobility_" + lower(to_string(alg)) + ".csv";
    write_file(out / file, [&](std::ostream& os) { write_mobility_csv(os, run); });
    m.outputs.push_back(file);
    auto opt_json = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
    runs[to_string(alg)] = {{"first_shortfall_s", opt_json(run.first_shortfall_time)},
                            {"activation_s", opt_json(run.activation_time)},
                            {"all_depleted_s", opt_json(run.all_depleted_time)}};
    std::cout << to_string(alg) << ": first shortfall "
              << (run.first_shortfall_time ? fmt_num(*run.first_shortfall_time) + " s" : std::string("none"))
              << ", all UEs off " << (run.all_depleted_time ? fmt_num(*run.all_depleted_time) + " s" : std::string("never"))
              << " -> " << file << '\n';
  }
  m.extra["events"] = runs;
  m.wall_clock_s = seconds_since(t0);
  write_manifests(m, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::vector<std::string> claims{"lemma1", "scalability", "uniqueness", "theorem2", "appendix", "fl"};
  std::size_t k = 2;
  std::size_t trials = 10000;
};

const std::vector<std::string> kClaims = {"lemma1", "scalability", "uniqueness", "theorem2", "appendix", "fl"};

int cmd_verify(const Common& c, const VerifyArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& name : a.claims)
    if (std::find(kClaims.begin(), kClaims.end(), name) == kClaims.end())
      throw UsageError("unknown claim '" + name + "' (known: lemma1, scalability, uniqueness, theorem2, appendix, fl)");
  if (a.k < 1 || a.k > 3) throw UsageError("--K must be in 1..3 for the grid oracle");
  if (a.trials < 1) throw UsageError("--trials must be at least 1");
  const auto l = load(c);
  const auto out = prepare_out(c.out);
  const auto& tpl = l.file.tpl;
  const Snapshot snap = scenario_snapshot(l.file, 0);
  const std::uint64_t seed = tpl.config.seed;
  const std::size_t n_scen = c.snapshots.value_or(20);

  json report = json::object();
  std::vector<std::string> failed;
  auto record = [&](const std::string& name, bool asserted, bool passed, json detail) {
    detail["asserted"] = asserted;
    detail["passed"] = passed;
    report[name] = detail;
    if (asserted && !passed) failed.push_back(name);
    std::cout << name << ": " << (passed ? "pass" : "FAIL") << (asserted ? "" : " (informational)") << '\n';
  };

  for (const auto& name : a.claims) {
    if (name == "lemma1") {
      const auto tr = run_fixed_point(Algorithm::tpceh, snap, default_initial_power(snap), 1e-12, 1000000, false);
      const auto r = verify_lemma1_at_fixed_point(tr, snap);
      json d = {{"status", to_string(r.status)}, {"argmax_ue", r.argmax_ue + 1}, {"relative_gap", r.relative_gap}};
      if (r.offending_ue) d["offending_ue"] = *r.offending_ue + 1;
      record(name, true, r.status != Lemma1Status::violated && r.status != Lemma1Status::not_converged, d);
    } else if (name == "scalability") {
      json d = json::object();
      bool ok = true;
      for (auto alg : {Algorithm::tpceh, Algorithm::opceh}) {
        Rng rng(seed);
        const auto r = check_two_sided_scalable(snap, alg, a.trials, rng);
        json x = {{"trials", r.trials}, {"violations", r.violations}};
        if (r.counterexample) {
          const auto& ce = *r.counterexample;
          x["counterexample"] = {{"p", power_vector_json(ce.p)},   {"p_prime", power_vector_json(ce.p_prime)},
                                 {"a", ce.a},                      {"component", ce.component},
                                 {"f_p", ce.f_p},                  {"f_p_prime", ce.f_p_prime}};
        }
        d[to_string(alg)] = x;
        ok = ok && r.passed;
      }
      record(name, true, ok, d);
    } else if (name == "uniqueness") {
      json d = json::object();
      bool ok = true;
      for (auto alg : {Algorithm::tpceh, Algorithm::opceh}) {
        Rng rng(seed);
        const auto r = check_unique_fixed_point(snap, alg, 10, rng, 1e-9, 100000);
        d[to_string(alg)] = {{"all_converged", r.all_converged}, {"max_spread", r.max_spread},
                             {"max_iterations", r.max_iterations}};
        ok = ok && r.all_converged && r.max_spread <= 1e-6;
      }
      record(name, true, ok, d);
    } else if (name == "theorem2") {
      ScenarioTemplate t = tpl;
      t.config.num_ues = a.k;
      json gaps = json::array();
      bool ok = true;
      double worst = 0.0;
      for (std::size_t id = 0; id < n_scen; ++id) {
        const auto s = sample_snapshot(t, id);
        const auto r = verify_theorem2(s, 0.01);
        gaps.push_back({{"snapshot_id", id}, {"gap", r.gap}, {"passed", r.passed}, {"message", r.message}});
        ok = ok && r.passed;
        worst = std::max(worst, std::abs(r.gap));
      }
      std::cout << "theorem2: worst |gap| " << fmt_num(worst) << " over " << n_scen << " scenarios, K=" << a.k << '\n';
      record(name, true, ok, {{"K", a.k}, {"tol", 0.01}, {"worst_abs_gap", worst}, {"scenarios", gaps}});
    } else if (name == "appendix") {
      const auto r = appendix_update_equivalence(tpl, std::min<std::size_t>(a.trials, 1000), seed);
      json d = {{"trials", r.trials},
                {"compared", r.compared},
                {"skipped_ue_cap", r.skipped_ue_cap},
                {"nonconverged", r.nonconverged},
                {"worst_fixed_point_gap", r.worst_fixed_point_gap},
                {"worst_map_gap", r.worst_map_gap}};
      if (r.counterexample_snapshot) d["counterexample"] = {{"snapshot_id", *r.counterexample_snapshot}, {"K", *r.counterexample_k}};
      record(name, true, r.passed, d);
    } else if (name == "fl") {
      record(name, false, fl_condition_check(snap).qualifies, fl_report_json(fl_condition_check(snap)));
    }
  }

  json doc = {{"claims", report}, {"failed", failed}};
  write_text(out / "verify.json", doc.dump(2) + "\n");
  auto m = manifest_for("verify", c, l);
  m.outputs = {"verify.json"};
  m.extra = {{"claims", a.claims}, {"K", a.k}, {"trials", a.trials}, {"scenarios", n_scen}};
  m.wall_clock_s = seconds_since(t0);
  write_manifests(m, out);
  if (!failed.empty()) {
    std::cerr << "verification failed:";
    for (const auto& f : failed) std::cerr << ' ' << f;
    std::cerr << '\n';
    return kExitVerify;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power control simulator for full-duplex energy-harvesting cells"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common snap_c, sweep_c, mob_c, ver_c;
  SnapshotArgs snap_a;
  SweepArgs sweep_a;
  MobilityArgs mob_a;
  VerifyArgs ver_a;

  auto* snap = app.add_subcommand("snapshot", "Run one snapshot to its fixed point and write the iteration trace");
  add_common(snap, snap_c);
  snap->add_option("--snapshot-id", snap_a.snapshot_id, "Random snapshot id when the config has no fixed snapshot");
  snap->add_option("--replay", snap_a.replay, "Replay a snapshot.json written by an earlier run");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over one scenario parameter");
  add_common(sweep, sweep_c);
  sweep->add_option("--axis", sweep_a.axis, "delta_db, cell_side, gamma_target or num_ues")->required();
  sweep->add_option("--values", sweep_a.values, "Comma separated axis values")->delimiter(',')->required();
  sweep->add_option("--threads", sweep_a.threads, "Worker threads (default: all cores)");
  sweep->add_flag("--exclude-nonconverged", sweep_a.exclude_nonconverged, "Drop non-converged runs from averages");

  auto* mob = app.add_subcommand("mobility", "Moving UEs with batteries, one power update per step");
  add_common(mob, mob_c);
  mob->add_option("--duration", mob_a.duration, "Simulated time [s]");
  mob->add_option("--step", mob_a.step, "Update interval [s]");
  mob->add_option("--speed-kmh", mob_a.speed_kmh, "UE speed [km/h]");
  mob->add_option("--battery-j", mob_a.battery_j, "Initial (and maximum) battery energy [J]");

  auto* ver = app.add_subcommand("verify", "Run the convergence and optimality checks");
  add_common(ver, ver_c);
  ver->add_option("--claims", ver_a.claims, "lemma1, scalability, uniqueness, theorem2, appendix, fl")->delimiter(',');
  ver->add_option("--K", ver_a.k, "UE count for the grid-search optimality check (1..3)");
  ver->add_option("--trials", ver_a.trials, "Randomized trials per property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*snap) return cmd_snapshot(snap_c, snap_a);
    if (*sweep) return cmd_sweep(sweep_c, sweep_a);
    if (*mob) return cmd_mobility(mob_c, mob_a);
    if (*ver) return cmd_verify(ver_c, ver_a);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
