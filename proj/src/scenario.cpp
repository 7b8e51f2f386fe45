#include "darkgup/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include <fftw3.h>
#include <gsl/gsl_version.h>

#include "darkgup/analytic.hpp"
#include "darkgup/errors.hpp"
#include "darkgup/io.hpp"
#include "darkgup/modes.hpp"
#include "darkgup/noise.hpp"

namespace fs = std::filesystem;

namespace darkgup {
namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Trajectory run_single(const ScenarioConfig& cfg, const SystemParams& p, std::uint64_t seed) {
  return simulate(p, cfg.integrator(), make_noise_settings(p, seed, cfg.protocol.noise));
}

std::string add_file(Manifest& m, const std::string& dir, const std::string& name) {
  m.files.push_back(name);
  return (fs::path(dir) / name).string();
}

cplx complex_mean(const std::vector<cplx>& x) {
  cplx s = 0.0;
  for (const auto& v : x) s += v;
  return x.empty() ? cplx(0.0) : s / static_cast<double>(x.size());
}

void write_amplitude_csv(const std::string& path, const std::vector<AmplitudePoint>& pts) {
  std::ostringstream os;
  os.precision(17);
  os << "# power: W; drive_h, amp_avg, amp_analytic: dimensionless\n";
  os << "power,drive_h,amp_avg,amp_analytic,seed,failed\n";
  for (const auto& p : pts)
    os << p.power << ',' << p.drive_h << ',' << p.amp_avg << ',' << p.amp_analytic << ',' << p.seed << ','
       << (p.failed ? 1 : 0) << '\n';
  write_text_atomic(path, os.str());
}

void write_timeseries_csv(const std::string& path, const SlowAmplitudeSeries& s, std::size_t max_rows) {
  std::ostringstream os;
  os.precision(17);
  os << "# t in units of 1/mean mechanical frequency; |A_b|, |A_d| dimensionless\n";
  os << "t,Ab_abs,Ad_abs\n";
  const std::size_t step = std::max<std::size_t>(1, (s.size() + max_rows - 1) / max_rows);
  for (std::size_t i = 0; i < s.size(); i += step)
    os << s.times[i] << ',' << std::abs(s.Ab[i]) << ',' << std::abs(s.Ad[i]) << '\n';
  write_text_atomic(path, os.str());
}

}  // namespace

Manifest make_manifest(const std::string& command, const ScenarioConfig& cfg) {
  Manifest m;
  m.command = command;
  ScenarioConfig identity = cfg;
  identity.workers = identity.protocol.workers = 1;
  const std::string echo = echo_config(identity);
  m.fields = {{"command", command},
              {"scenario", to_string(cfg.scenario)},
              {"scale", to_string(cfg.scale)},
              {"preset", preset_name(cfg.scenario, cfg.scale)},
              {"seed", std::to_string(cfg.master_seed)},
              {"workers", std::to_string(cfg.workers)},
              {"inputs_hash", hex64(fnv1a64(echo))},
              {"version", kVersion},
              {"fftw_version", fftw_version},
              {"gsl_version", GSL_VERSION}};
  return m;
}

void write_manifest(const std::string& path, const Manifest& m, double wall_seconds) {
  std::ostringstream os;
  os << "# run manifest\n";
  for (const auto& [k, v] : m.fields) os << k << " = " << v << "\n";
  for (const auto& f : m.files) os << "file = " << f << "\n";
  for (const auto& f : m.failures) os << "failure = " << f << "\n";
  os << "status = " << (m.partial() ? "partial" : "ok") << "\n";
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  os << "timestamp = " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " wall_time_s=" << std::fixed
     << std::setprecision(3) << wall_seconds << "\n";
  write_text_atomic(path, os.str());
}

std::vector<AmplitudePoint> amplitude_sweep(const ScenarioConfig& cfg) {
  const auto& powers = cfg.protocol.powers;
  if (powers.empty()) throw ConfigError("amplitude sweep needs a power grid ('powers' or 'drive_grid')");
  std::vector<AmplitudePoint> out(powers.size());
  parallel_for(powers.size(), cfg.workers, [&](std::size_t i) {
    AmplitudePoint& a = out[i];
    SystemParams p = cfg.params;
    a.power = powers[i];
    a.drive_h = p.drive_h = cfg.protocol.drive_scale * std::sqrt(powers[i]);
    a.seed = derive_seed(cfg.master_seed, i);
    try {
      const Trajectory traj = run_single(cfg, p, a.seed);
      const SlowAmplitudeSeries s = extract_slow_amplitudes(traj);
      a.amp_avg = time_avg_amplitude(s.times, s.Ab, s.times.front());
    } catch (const DivergenceError& e) {
      a.failed = true;
      a.failure = "power " + num(a.power) + ": " + e.what();
    }
    try {
      a.amp_analytic = std::abs(steady_bright_amplitude(p));
    } catch (const NumericalError&) {
      a.amp_analytic = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return out;
}

MismatchMeasurement measure_mismatch(const ScenarioConfig& cfg, std::uint64_t seed) {
  const SystemParams& p = cfg.params;
  const Trajectory traj = run_single(cfg, p, seed);
  const SlowAmplitudeSeries s = extract_slow_amplitudes(traj);
  MismatchMeasurement mm;
  mm.seed = seed;
  mm.abs_Ab = std::abs(complex_mean(s.Ab));
  mm.abs_Ad = std::abs(complex_mean(s.Ad));
  mm.ratio = mm.abs_Ab > 0.0 ? mm.abs_Ad / mm.abs_Ab : 0.0;
  const SupermodeParams sm = supermode_rates(p);
  mm.delta = p.delta();
  mm.delta_p = sm.Delta_p;
  mm.ratio_estimate = std::abs(sm.mu / sm.Gamma_d);
  mm.coherent_freq = p.delta2;

  WelchConfig wc = cfg.protocol.welch;
  const double g = p.gamma_mean();
  wc.gamma = g;
  wc.detrend = Detrend::none;  // the coherent line sits at zero baseband frequency
  mm.spectrum = welch_spectrum(s.Ad, s.sample_interval(), wc, p.delta2);
  const Spectrum& sp = mm.spectrum;
  const auto nearest = [&](double f) {
    const auto it = std::lower_bound(sp.freqs.begin(), sp.freqs.end(), f);
    std::size_t i = static_cast<std::size_t>(it - sp.freqs.begin());
    if (i == sp.freqs.size()) --i;
    if (i > 0 && std::abs(sp.freqs[i - 1] - f) < std::abs(sp.freqs[i] - f)) --i;
    return i;
  };
  mm.coherent_height = sp.psd[nearest(p.delta2)];
  const double wbar = p.omega_bar();
  const double exclude[] = {p.delta2};
  mm.noise_peak = find_peak(sp, {wbar + cfg.protocol.band_lo * g, wbar + cfg.protocol.band_hi * g},
                            cfg.protocol.peak_method, exclude, cfg.protocol.exclude_bins);
  std::size_t a = nearest(p.delta2), b = nearest(mm.noise_peak.omega_peak);
  if (a > b) std::swap(a, b);
  mm.valley = std::numeric_limits<double>::infinity();
  for (std::size_t i = a; i <= b; ++i) mm.valley = std::min(mm.valley, sp.psd[i]);
  return mm;
}

std::vector<BetaPeakPoint> peak_vs_beta(const ScenarioConfig& cfg) {
  if (cfg.beta_grid.empty()) throw ConfigError("peak-vs-beta needs 'beta_grid'");
  std::vector<BetaPeakPoint> out(cfg.beta_grid.size());
  const std::uint64_t seed = derive_seed(cfg.master_seed, 0);
  const PointRunner runner = sde_point_runner(cfg.protocol);
  parallel_for(out.size(), cfg.workers, [&](std::size_t i) {
    BetaPeakPoint& b = out[i];
    SystemParams p = cfg.params;
    p.beta_nl = b.beta_nl = cfg.beta_grid[i];
    try {
      ProtocolConfig pc = cfg.protocol;
      pc.base = p;
      const ScatterPoint sp = analyze_point(runner(p, seed), pc);
      b.amp_sq = sp.amp_sq;
      b.omega_peak = sp.omega_peak;
      b.sigma_omega = sp.sigma_omega;
      b.predicted = predicted_shift(p.omega_bar(), p.beta_nl, std::sqrt(sp.amp_sq));
    } catch (const DivergenceError&) {
      b.failed = true;
    }
  });
  return out;
}

Manifest run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Manifest m = make_manifest("scenario", cfg);
  const ProtocolConfig& pc = cfg.protocol;

  switch (cfg.scenario) {
    case ScenarioKind::fig2_amplitude: {
      ScenarioConfig ts = cfg;
      ts.protocol.record = pc.transient + pc.record;
      ts.protocol.transient = 0.0;
      try {
        const Trajectory traj = run_single(ts, cfg.params, derive_seed(cfg.master_seed, 1u << 20));
        const SlowAmplitudeSeries s = extract_slow_amplitudes(traj, DemodulationOptions{0.0, true});
        write_timeseries_csv(add_file(m, out_dir, "fig2_timeseries.csv"), s, 20000);
      } catch (const DivergenceError& e) {
        m.failures.push_back(std::string("time series: ") + e.what());
      }
      const auto pts = amplitude_sweep(cfg);
      for (const auto& p : pts)
        if (p.failed) m.failures.push_back(p.failure);
      if (std::all_of(pts.begin(), pts.end(), [](const AmplitudePoint& p) { return p.failed; }))
        throw DivergenceError("every amplitude sweep point diverged", 0);
      write_amplitude_csv(add_file(m, out_dir, "fig2_sweep.csv"), pts);
      break;
    }
    case ScenarioKind::fig3_spectrum:
    case ScenarioKind::custom: {
      const bool spectra = cfg.scenario == ScenarioKind::fig3_spectrum;
      std::mutex mu;
      std::map<std::size_t, Spectrum> captured;
      const PointRunner base = sde_point_runner(pc);
      PointRunner runner = [&](const SystemParams& p, std::uint64_t seed) {
        PointData d = base(p, seed);
        if (spectra)
          for (std::size_t i = 0; i < pc.powers.size(); ++i)
            if (seed == protocol_seed(pc.master_seed, i, 0, pc.replicates)) {
              WelchConfig wc = pc.welch;
              wc.gamma = pc.gamma();
              Spectrum s = welch_spectrum(d.dark, d.sample_dt, wc, d.frame_offset);
              std::lock_guard lock(mu);
              captured[i] = std::move(s);
            }
        return d;
      };
      const ProtocolResult r = run_protocol(pc, runner);
      for (const auto& f : r.failures) m.failures.push_back(f);
      for (const auto& [i, s] : captured) {
        std::ostringstream name;
        name << "fig3_spectrum_p" << std::setw(2) << std::setfill('0') << i << ".csv";
        write_spectrum_csv(add_file(m, out_dir, name.str()), s);
      }
      write_scatter_csv(add_file(m, out_dir, "scatter.csv"), r.scatter);
      write_fit_csv(add_file(m, out_dir, "fit.csv"), r.fit);
      m.fields.push_back({"beta_nl_est", num(r.fit.beta_nl_est)});
      m.fields.push_back({"r_squared", num(r.fit.r_squared)});
      break;
    }
    case ScenarioKind::fig4_resolution: {
      const std::vector<double> records = cfg.records.empty() ? std::vector<double>{pc.record} : cfg.records;
      if (cfg.beta_grid.empty()) throw ConfigError("fig4_resolution needs 'beta_grid'");
      std::ostringstream summary;
      summary.precision(17);
      summary << "# record: units of 1/gamma; beta_nl_lim dimensionless\n";
      summary << "record,beta_nl_lim,boundary\n";
      for (double rec : records) {
        ProtocolConfig c = pc;
        c.record = rec;
        const SweepResult r = resolution_sweep(c, cfg.beta_grid, cfg.threshold);
        for (const auto& p : r.points)
          if (p.failed) m.failures.push_back("record " + num(rec) + " beta " + num(p.beta_nl) + ": protocol failed");
        std::ostringstream name;
        name << "sweep_record" << rec << ".csv";
        write_sweep_csv(add_file(m, out_dir, name.str()), r);
        summary << rec << ',' << r.beta_nl_lim << ',' << (r.boundary ? 1 : 0) << '\n';
      }
      write_text_atomic(add_file(m, out_dir, "resolution.csv"), summary.str());
      break;
    }
    case ScenarioKind::fig5_mismatch: {
      const MismatchMeasurement mm = measure_mismatch(cfg, derive_seed(cfg.master_seed, 0));
      write_spectrum_csv(add_file(m, out_dir, "fig5_spectrum.csv"), mm.spectrum);
      std::ostringstream os;
      os.precision(17);
      os << "# amplitudes dimensionless; frequencies in units of mean mechanical frequency\n";
      os << "abs_Ab,abs_Ad,ratio,delta,delta_p,delta_over_delta_p,ratio_estimate,coherent_freq,coherent_height,"
            "noise_peak,noise_peak_sigma,noise_peak_height,valley\n";
      os << mm.abs_Ab << ',' << mm.abs_Ad << ',' << mm.ratio << ',' << mm.delta << ',' << mm.delta_p << ','
         << mm.delta / std::abs(mm.delta_p) << ',' << mm.ratio_estimate << ',' << mm.coherent_freq << ','
         << mm.coherent_height << ',' << mm.noise_peak.omega_peak << ',' << mm.noise_peak.uncertainty << ','
         << mm.noise_peak.height << ',' << mm.valley << '\n';
      write_text_atomic(add_file(m, out_dir, "fig5_summary.csv"), os.str());
      break;
    }
    case ScenarioKind::fig6_peak_vs_beta: {
      const auto pts = peak_vs_beta(cfg);
      std::ostringstream os;
      os.precision(17);
      os << "# beta_nl, amp_sq dimensionless; omega_peak, sigma_omega, predicted: units of mean mechanical "
            "frequency\n";
      os << "beta_nl,amp_sq,omega_peak,sigma_omega,predicted,failed\n";
      for (const auto& p : pts) {
        if (p.failed) m.failures.push_back("beta " + num(p.beta_nl) + ": diverged");
        os << p.beta_nl << ',' << p.amp_sq << ',' << p.omega_peak << ',' << p.sigma_omega << ',' << p.predicted
           << ',' << (p.failed ? 1 : 0) << '\n';
      }
      if (std::all_of(pts.begin(), pts.end(), [](const BetaPeakPoint& p) { return p.failed; }))
        throw DivergenceError("every beta point diverged", 0);
      write_text_atomic(add_file(m, out_dir, "fig6_peak_vs_beta.csv"), os.str());
      break;
    }
  }
  return m;
}

}  // namespace darkgup
