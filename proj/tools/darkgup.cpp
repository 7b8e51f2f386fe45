// Command-line front end: simulate, analyze, protocol, sweep, scenario, validate.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
// 4 partial failure, 1 anything else.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "darkgup/config.hpp"
#include "darkgup/errors.hpp"
#include "darkgup/estimation.hpp"
#include "darkgup/io.hpp"
#include "darkgup/modes.hpp"
#include "darkgup/noise.hpp"
#include "darkgup/scenario.hpp"
#include "darkgup/sde.hpp"
#include "darkgup/spectrum.hpp"

namespace fs = std::filesystem;
using namespace darkgup;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitPartial = 4;

struct Options {
  std::string config;
  std::string scale;
  std::string out;
  std::string input;
  std::string scenario;
  long long seed = -1;
  int workers = 0;
  bool csv = false;
};

ScenarioConfig load(const Options& o, const std::string& scenario = "") {
  std::vector<ConfigEntry> entries;
  if (!o.config.empty()) entries = parse_config_file(o.config);
  if (!scenario.empty()) entries.push_back({"scenario", scenario, 0, "<command line>"});
  if (entries.empty()) throw ConfigError("--config is required");
  ScenarioConfig cfg = resolve_config(entries, o.scale);
  if (o.seed >= 0) cfg.master_seed = cfg.protocol.master_seed = static_cast<std::uint64_t>(o.seed);
  if (o.workers > 0) cfg.workers = cfg.protocol.workers = o.workers;
  for (const auto& n : cfg.notes) std::cerr << "note: " << n << "\n";
  return cfg;
}

std::string output_dir(const Options& o, const ScenarioConfig* cfg) {
  if (!o.out.empty()) return o.out;
  if (cfg && !cfg->output_dir.empty()) return cfg->output_dir;
  if (const char* env = std::getenv("DARKGUP_OUT"); env && *env) return env;
  return "darkgup_out";
}

std::string in_dir(const std::string& dir, const std::string& name, Manifest& m) {
  m.files.push_back(name);
  return (fs::path(dir) / name).string();
}

int finish(const Manifest& m, const std::string& dir, std::chrono::steady_clock::time_point t0) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest((fs::path(dir) / "manifest.txt").string(), m, wall);
  std::cout << "wrote " << m.files.size() << " file(s) to " << dir << "\n";
  for (const auto& f : m.failures) std::cerr << "failure: " << f << "\n";
  return m.partial() ? kExitPartial : 0;
}

int cmd_validate(const Options& o) {
  const ScenarioConfig cfg = load(o, o.scenario);
  std::cout << echo_config(cfg);
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig cfg = load(o);
  const std::string dir = output_dir(o, &cfg);
  fs::create_directories(dir);
  Manifest m = make_manifest("simulate", cfg);
  const std::uint64_t seed = derive_seed(cfg.master_seed, 0);
  const Trajectory traj = simulate(cfg.params, cfg.integrator(), make_noise_settings(cfg.params, seed, cfg.protocol.noise));
  const SlowAmplitudeSeries s = extract_slow_amplitudes(traj);
  write_trajectory(in_dir(dir, "trajectory.omg", m), traj);
  write_slow_amplitudes(in_dir(dir, "slow_amplitudes.omg", m), s);
  if (o.csv) {
    write_trajectory_csv(in_dir(dir, "trajectory.csv", m), traj);
    write_slow_amplitudes_csv(in_dir(dir, "slow_amplitudes.csv", m), s);
  }
  m.fields.push_back({"run_seed", std::to_string(seed)});
  m.fields.push_back({"samples", std::to_string(traj.size())});
  return finish(m, dir, t0);
}

int cmd_analyze(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.input.empty()) throw ConfigError("analyze needs --input TRAJECTORY.omg");
  const Trajectory traj = read_trajectory(o.input);
  ScenarioConfig cfg;
  if (!o.config.empty()) {
    cfg = load(o);
  } else {
    cfg.params = traj.params;
    cfg.protocol.base = traj.params;
  }
  const std::string dir = output_dir(o, &cfg);
  fs::create_directories(dir);
  Manifest m = make_manifest("analyze", cfg);
  m.fields.push_back({"input", o.input});
  const SlowAmplitudeSeries s = extract_slow_amplitudes(traj);
  PointData d;
  d.amp_avg = time_avg_amplitude(s.times, s.Ab, s.times.front());
  d.dark = s.Ad;
  d.sample_dt = traj.sample_interval();
  d.frame_offset = traj.params.delta2;
  ProtocolConfig pc = cfg.protocol;
  pc.base = traj.params;
  const ScatterPoint sp = analyze_point(d, pc);
  WelchConfig wc = pc.welch;
  wc.gamma = pc.gamma();
  write_spectrum_csv(in_dir(dir, "spectrum.csv", m), welch_spectrum(s.Ad, d.sample_dt, wc, d.frame_offset));
  if (o.csv) write_slow_amplitudes_csv(in_dir(dir, "slow_amplitudes.csv", m), s);
  std::ostringstream os;
  os.precision(17);
  os << "# amp_sq dimensionless; omega_peak, sigma_omega: units of mean mechanical frequency\n";
  os << "amp_sq,omega_peak,sigma_omega,low_confidence\n";
  os << sp.amp_sq << ',' << sp.omega_peak << ',' << sp.sigma_omega << ',' << (sp.low_confidence ? 1 : 0) << '\n';
  write_text_atomic(in_dir(dir, "analysis.csv", m), os.str());
  std::cout << "amp_sq = " << sp.amp_sq << "\nomega_peak = " << sp.omega_peak << "\n";
  return finish(m, dir, t0);
}

int cmd_protocol(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig cfg = load(o);
  const std::string dir = output_dir(o, &cfg);
  fs::create_directories(dir);
  Manifest m = make_manifest("protocol", cfg);
  const ProtocolResult r = run_protocol(cfg.protocol);
  m.failures = r.failures;
  write_scatter_csv(in_dir(dir, "scatter.csv", m), r.scatter);
  write_fit_csv(in_dir(dir, "fit.csv", m), r.fit);
  std::cout << "beta_nl_est = " << r.fit.beta_nl_est << " [" << r.fit.ci_low << ", " << r.fit.ci_high
            << "]\nr_squared = " << r.fit.r_squared << "\n";
  return finish(m, dir, t0);
}

int cmd_sweep(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig cfg = load(o);
  if (cfg.beta_grid.empty()) throw ConfigError("sweep needs 'beta_grid'");
  const std::string dir = output_dir(o, &cfg);
  fs::create_directories(dir);
  Manifest m = make_manifest("sweep", cfg);
  const SweepResult r = resolution_sweep(cfg.protocol, cfg.beta_grid, cfg.threshold);
  for (const auto& p : r.points)
    if (p.failed) m.failures.push_back("beta " + std::to_string(p.beta_nl) + ": protocol failed");
  write_sweep_csv(in_dir(dir, "sweep.csv", m), r);
  std::cout << "beta_nl_lim = " << r.beta_nl_lim << (r.boundary ? " (grid boundary)" : "") << "\n";
  return finish(m, dir, t0);
}

int cmd_scenario(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig cfg = load(o, o.scenario);
  const std::string dir = output_dir(o, &cfg);
  Manifest m = run_scenario(cfg, dir);
  return finish(m, dir, t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dark-mode GUP optomechanics toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "configuration file (key = value)");
    if (needs_config) c->required();
    sub->add_option("--seed", o.seed, "master seed (overrides the configuration)")->check(CLI::NonNegativeNumber);
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory (default: $DARKGUP_OUT or ./darkgup_out)");
    sub->add_option("--scale", o.scale, "parameter scale")->check(CLI::IsMember({"paper", "desk"}));
  };

  auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
  common(sim, true);
  sim->add_flag("--csv", o.csv, "also write CSV copies of the trajectory and slow amplitudes");
  auto* ana = app.add_subcommand("analyze", "spectrum and peak of a stored trajectory");
  common(ana, false);
  ana->add_option("--input", o.input, "trajectory file written by simulate")->required();
  ana->add_flag("--csv", o.csv, "also write the slow amplitudes as CSV");
  auto* pro = app.add_subcommand("protocol", "power scan, scatter and straight-line fit");
  common(pro, true);
  auto* swp = app.add_subcommand("sweep", "resolution limit over beta_grid");
  common(swp, true);
  auto* scn = app.add_subcommand("scenario", "run a named scenario");
  common(scn, false);
  scn->add_option("name", o.scenario, "scenario name (overrides the configuration)");
  auto* val = app.add_subcommand("validate", "resolve a configuration and echo it");
  common(val, false);
  val->add_option("name", o.scenario, "scenario name (overrides the configuration)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*ana) return cmd_analyze(o);
    if (*pro) return cmd_protocol(o);
    if (*swp) return cmd_sweep(o);
    if (*scn) return cmd_scenario(o);
    if (*val) return cmd_validate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol failure: " << e.what() << "\n";
    return kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
