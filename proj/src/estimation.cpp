#include "darkgup/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "darkgup/errors.hpp"
#include "darkgup/io.hpp"
#include "darkgup/modes.hpp"
#include "darkgup/noise.hpp"

namespace darkgup {

FitResult linear_fit(const ScatterSet& scatter, double omega_bar, bool weighted) {
  const auto& pts = scatter.points;
  const std::size_t n = pts.size();
  if (n < 3) throw FitError("linear fit needs at least 3 points, got " + std::to_string(n));
  if (!(omega_bar > 0.0)) throw DomainError("omega_bar must be positive");
  for (const auto& p : pts)
    if (!std::isfinite(p.amp_sq) || !std::isfinite(p.omega_peak) || p.amp_sq < 0.0)
      throw FitError("scatter point with non-finite or negative coordinates");

  bool use_weights = weighted;
  if (use_weights)
    for (const auto& p : pts)
      if (!(p.sigma_omega > 0.0) || !std::isfinite(p.sigma_omega)) {
        warn("non-positive peak uncertainty in scatter; using ordinary least squares");
        use_weights = false;
        break;
      }

  std::vector<double> w(n, 1.0);
  if (use_weights)
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (pts[i].sigma_omega * pts[i].sigma_omega);

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * pts[i].amp_sq;
    sy += w[i] * pts[i].omega_peak;
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pts[i].amp_sq - xm;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (pts[i].omega_peak - ym);
  }
  double xscale = 0.0;
  for (const auto& p : pts) xscale = std::max(xscale, std::abs(p.amp_sq));
  if (sxx <= 1e-24 * sw * xscale * xscale) throw FitError("degenerate abscissa: all amp_sq equal");

  FitResult r;
  r.n_points = static_cast<int>(n);
  r.dof = static_cast<int>(n) - 2;
  r.weighted = use_weights;
  r.slope = sxy / sxx;
  r.intercept = ym - r.slope * xm;
  r.beta_nl_est = r.slope / omega_bar;

  double ss_res_w = 0.0, ss_res = 0.0, ss_tot = 0.0, ybar = 0.0;
  for (const auto& p : pts) ybar += p.omega_peak;
  ybar /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double res = pts[i].omega_peak - (r.intercept + r.slope * pts[i].amp_sq);
    ss_res_w += w[i] * res * res;
    ss_res += res * res;
    const double d = pts[i].omega_peak - ybar;
    ss_tot += d * d;
  }
  r.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);

  const double s2 = ss_res_w / r.dof;
  r.slope_stderr = std::sqrt(s2 / sxx);
  boost::math::students_t dist(r.dof);
  const double tq = boost::math::quantile(dist, 0.975);
  const double half = tq * r.slope_stderr / omega_bar;
  r.ci_low = r.beta_nl_est - half;
  r.ci_high = r.beta_nl_est + half;
  return r;
}

double drive_per_sqrt_watt(double kappa_in, const SiContext& si) {
  if (!(kappa_in > 0.0)) throw DomainError("kappa_in must be positive");
  const double w_ref = si.omega_b_angular();
  const double e_si = drive_amplitude_from_power(1.0, kappa_in * w_ref, laser_angular_frequency(si.laser_wavelength));
  return e_si / w_ref;
}

std::uint64_t protocol_seed(std::uint64_t master_seed, std::size_t point, int rep, int replicates) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(point) * static_cast<std::uint64_t>(replicates) +
                                      static_cast<std::uint64_t>(rep));
}

PointRunner sde_point_runner(const ProtocolConfig& cfg) {
  return [cfg](const SystemParams& p, std::uint64_t seed) {
    const double g = p.gamma_mean();
    IntegratorConfig ic;
    ic.dt = cfg.dt;
    ic.t_discard = cfg.transient / g;
    ic.t_total = (cfg.transient + cfg.record) / g;
    ic.scheme = cfg.scheme;
    ic.record_stride = cfg.record_stride;
    const Trajectory traj = simulate(p, ic, make_noise_settings(p, seed, cfg.noise));
    SlowAmplitudeSeries s = extract_slow_amplitudes(traj);
    PointData d;
    d.amp_avg = time_avg_amplitude(s.times, s.Ab, s.times.front());
    d.dark = std::move(s.Ad);
    d.sample_dt = traj.sample_interval();
    d.frame_offset = p.delta2;
    return d;
  };
}

ScatterPoint analyze_point(const PointData& data, const ProtocolConfig& cfg) {
  WelchConfig wc = cfg.welch;
  const double g = cfg.gamma();
  wc.gamma = g;
  const Spectrum spec = welch_spectrum(data.dark, data.sample_dt, wc, data.frame_offset);
  const double wbar = cfg.base.omega_bar();
  const FrequencyBand band{wbar + cfg.band_lo * g, wbar + cfg.band_hi * g};
  std::vector<double> exclude;
  if (cfg.exclude_coherent) exclude.push_back(data.frame_offset);
  const PeakEstimate pk = find_peak(spec, band, cfg.peak_method, exclude, cfg.exclude_bins);
  ScatterPoint sp;
  sp.amp_sq = data.amp_avg * data.amp_avg;
  sp.omega_peak = pk.omega_peak;
  sp.sigma_omega = pk.uncertainty;
  sp.low_confidence = pk.low_confidence;
  return sp;
}

ProtocolResult run_protocol(const ProtocolConfig& cfg, const PointRunner& runner) {
  if (cfg.powers.empty()) throw ConfigError("protocol needs a non-empty power grid");
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(cfg.record > 0.0) || cfg.transient < 0.0) throw ConfigError("record must be > 0 and transient >= 0");
  for (double p : cfg.powers)
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("powers must be finite and non-negative");
  if (cfg.powers.size() < 3) warn("power grid has fewer than 3 values");

  const PointRunner run = runner ? runner : sde_point_runner(cfg);
  const std::size_t K = static_cast<std::size_t>(cfg.replicates);
  const std::size_t total = cfg.powers.size() * K;
  std::vector<ScatterPoint> pts(total);
  std::vector<std::string> errs(total);
  std::vector<char> ok(total, 0);

  parallel_for(total, cfg.workers, [&](std::size_t idx) {
    const std::size_t ip = idx / K;
    const int rep = static_cast<int>(idx % K);
    SystemParams p = cfg.base;
    p.drive_h = cfg.drive_scale * std::sqrt(cfg.powers[ip]);
    const std::uint64_t seed = protocol_seed(cfg.master_seed, ip, rep, cfg.replicates);
    try {
      ScatterPoint sp = analyze_point(run(p, seed), cfg);
      sp.power = cfg.powers[ip];
      sp.seed = seed;
      sp.run_id = static_cast<int>(idx);
      pts[idx] = sp;
      ok[idx] = 1;
    } catch (const DivergenceError& e) {
      errs[idx] = "run " + std::to_string(idx) + " (power " + std::to_string(cfg.powers[ip]) + "): " + e.what();
    }
  });

  ProtocolResult res;
  for (std::size_t i = 0; i < total; ++i) {
    if (ok[i]) {
      res.scatter.points.push_back(pts[i]);
    } else {
      ++res.failed_runs;
      res.failures.push_back(errs[i]);
      warn("excluded divergent " + errs[i]);
    }
  }
  if (res.scatter.points.size() < 3)
    throw ProtocolError("only " + std::to_string(res.scatter.points.size()) + " usable points survived");
  res.fit = linear_fit(res.scatter, cfg.base.omega_bar(), cfg.weighted);
  return res;
}

SweepResult locate_resolution_limit(std::vector<SweepPoint> points, double threshold) {
  std::sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.beta_nl < b.beta_nl; });
  SweepResult out;
  out.threshold = threshold;
  out.points = points;

  std::vector<const SweepPoint*> good;
  for (const auto& p : points)
    if (!p.failed) good.push_back(&p);
  if (good.empty()) throw ProtocolError("every sweep point failed");

  for (std::size_t i = 0; i + 1 < good.size(); ++i) {
    const double r0 = good[i]->fit.r_squared, r1 = good[i + 1]->fit.r_squared;
    if (r1 < r0) {
      std::ostringstream os;
      os << "R^2 decreases from " << r0 << " to " << r1 << " between beta_nl " << good[i]->beta_nl << " and "
         << good[i + 1]->beta_nl << (std::max(r0, r1) < 0.3 ? " (statistical)" : "");
      warn(os.str());
    }
  }

  if (good.back()->fit.r_squared < threshold) {
    warn("R^2 stays below the threshold over the whole grid");
    out.boundary = true;
    out.beta_nl_lim = good.back()->beta_nl;
    return out;
  }
  for (std::size_t k = good.size() - 1; k-- > 0;) {
    const double r0 = good[k]->fit.r_squared, r1 = good[k + 1]->fit.r_squared;
    if (r0 < threshold) {
      const double l0 = std::log(good[k]->beta_nl), l1 = std::log(good[k + 1]->beta_nl);
      const double f = (threshold - r0) / (r1 - r0);
      out.beta_nl_lim = std::exp(l0 + f * (l1 - l0));
      return out;
    }
  }
  warn("R^2 exceeds the threshold over the whole grid");
  out.boundary = true;
  out.beta_nl_lim = good.front()->beta_nl;
  return out;
}

SweepResult resolution_sweep(const ProtocolConfig& cfg, std::span<const double> beta_grid, double threshold,
                             const PointRunner& runner) {
  std::vector<double> betas(beta_grid.begin(), beta_grid.end());
  if (betas.size() < 2) throw ConfigError("beta grid needs at least 2 values");
  std::sort(betas.begin(), betas.end());
  if (!(betas.front() > 0.0)) throw ConfigError("beta grid values must be positive");
  if (betas.back() / betas.front() < 10.0 * (1.0 - 1e-9)) throw ConfigError("beta grid must span at least a decade");
  const double ratio0 = betas[1] / betas[0];
  for (std::size_t i = 1; i + 1 < betas.size(); ++i)
    if (std::abs(std::log(betas[i + 1] / betas[i]) - std::log(ratio0)) > 0.01 * std::abs(std::log(ratio0))) {
      warn("beta grid is not log-spaced");
      break;
    }

  std::vector<SweepPoint> pts;
  for (double b : betas) {
    ProtocolConfig c = cfg;
    c.base.beta_nl = b;
    SweepPoint sp;
    sp.beta_nl = b;
    try {
      const ProtocolResult r = run_protocol(c, runner);
      sp.fit = r.fit;
      sp.n_points = r.fit.n_points;
    } catch (const ProtocolError& e) {
      warn(std::string("sweep point failed: ") + e.what());
      sp.failed = true;
    }
    pts.push_back(sp);
  }
  return locate_resolution_limit(std::move(pts), threshold);
}

void write_scatter_csv(const std::string& path, const ScatterSet& s) {
  std::ostringstream os;
  os.precision(17);
  os << "# amp_sq: |<A_b>|^2 (dimensionless); omega_peak, sigma_omega: units of mean mechanical frequency; "
        "power: drive grid value\n";
  os << "amp_sq,omega_peak,sigma_omega,power,seed,run_id,low_confidence\n";
  for (const auto& p : s.points)
    os << p.amp_sq << ',' << p.omega_peak << ',' << p.sigma_omega << ',' << p.power << ',' << p.seed << ','
       << p.run_id << ',' << (p.low_confidence ? 1 : 0) << '\n';
  write_text_atomic(path, os.str());
}

void write_fit_csv(const std::string& path, const FitResult& f) {
  std::ostringstream os;
  os.precision(17);
  os << "# slope: frequency per unit |A_b|^2; beta_nl_est, ci_low, ci_high: dimensionless; r2: dimensionless\n";
  os << "slope,intercept,beta_nl_est,r2,ci_low,ci_high,n_points,dof\n";
  os << f.slope << ',' << f.intercept << ',' << f.beta_nl_est << ',' << f.r_squared << ',' << f.ci_low << ','
     << f.ci_high << ',' << f.n_points << ',' << f.dof << '\n';
  write_text_atomic(path, os.str());
}

void write_sweep_csv(const std::string& path, const SweepResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "# beta_nl dimensionless; r2 dimensionless; beta_nl_lim = " << r.beta_nl_lim
     << (r.boundary ? " (grid boundary)" : "") << "; threshold = " << r.threshold << "\n";
  os << "beta_nl,r2,slope,beta_nl_est,ci_low,ci_high,n_points,failed\n";
  for (const auto& p : r.points)
    os << p.beta_nl << ',' << p.fit.r_squared << ',' << p.fit.slope << ',' << p.fit.beta_nl_est << ','
       << p.fit.ci_low << ',' << p.fit.ci_high << ',' << p.n_points << ',' << (p.failed ? 1 : 0) << '\n';
  write_text_atomic(path, os.str());
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t nw = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (nw <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < nw; ++k) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace darkgup
