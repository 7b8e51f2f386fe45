#include "darkgup/spectrum.hpp"

#include <fftw3.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "darkgup/errors.hpp"
#include "darkgup/io.hpp"
#include "darkgup/units.hpp"

namespace darkgup {
namespace {

constexpr std::size_t kMinAutocorrSamples = 4096;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place complex transform; sign = FFTW_BACKWARD gives sum x e^{+2 pi i k n / N}.
void fft(std::vector<cplx>& data, int sign) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

// Maps bin k of an N-point transform onto increasing baseband frequencies.
void shifted_grid(std::size_t n, double dt, double offset, const std::vector<double>& raw, Spectrum& out) {
  const double dnu = kTwoPi / (static_cast<double>(n) * dt);
  const auto half = static_cast<long>(n / 2);
  out.freqs.resize(n);
  out.psd.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long k = static_cast<long>(i) - half;  // -N/2 .. N - N/2 - 1
    const auto idx = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
    out.freqs[i] = offset + static_cast<double>(k) * dnu;
    out.psd[i] = raw[idx];
  }
  out.bin_width = dnu;
  out.frame_offset = offset;
}

void remove_mean(std::vector<cplx>& x) {
  cplx m;
  for (const auto& v : x) m += v;
  m /= static_cast<double>(x.size());
  for (auto& v : x) v -= m;
}

struct WhittleData {
  std::vector<double> w;
  std::vector<double> p;
  double scale_w;
  double center_w;
  double record = 0.0;  // record length in inverse bin units; 0: infinite
};

double lorentz_model(const double* q, double w, double record) {
  // q: center, log hwhm, log height, log background (height = amplitude / hwhm^2)
  const double g = std::exp(q[1]);
  if (record > 0.0) {
    // expected periodogram of a finite record: transform of (1 - |tau|/T) C(tau)
    const std::complex<double> z(g, -(w - q[0]));
    const std::complex<double> shape = 1.0 / z - (1.0 - std::exp(-z * record)) / (z * z * record);
    return std::exp(q[2]) * g * shape.real() + std::exp(q[3]);
  }
  const double d = (w - q[0]) / g;
  return std::exp(q[2]) / (1.0 + d * d) + std::exp(q[3]);
}

double whittle(const gsl_vector* v, void* params) {
  const auto* data = static_cast<const WhittleData*>(params);
  const double q[4] = {gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2), gsl_vector_get(v, 3)};
  double total = 0.0;
  for (std::size_t i = 0; i < data->w.size(); ++i) {
    const double s = lorentz_model(q, data->w[i], data->record);
    if (!(s > 0.0) || !std::isfinite(s)) return 1e300;
    total += std::log(s) + data->p[i] / s;
  }
  return total;
}

}  // namespace

const char* to_string(WindowKind w) {
  switch (w) {
    case WindowKind::blackman: return "blackman";
    case WindowKind::hann: return "hann";
    case WindowKind::rect: return "rect";
  }
  return "?";
}

const char* to_string(Detrend d) { return d == Detrend::mean ? "mean" : "none"; }
const char* to_string(PeakMethod m) { return m == PeakMethod::parabolic ? "parabolic" : "argmax"; }

WindowKind window_from_string(const std::string& s) {
  if (s == "blackman") return WindowKind::blackman;
  if (s == "hann") return WindowKind::hann;
  if (s == "rect") return WindowKind::rect;
  throw ConfigError("unknown window '" + s + "' (expected blackman, hann or rect)");
}

Detrend detrend_from_string(const std::string& s) {
  if (s == "mean") return Detrend::mean;
  if (s == "none") return Detrend::none;
  throw ConfigError("unknown detrend '" + s + "' (expected mean or none)");
}

PeakMethod peak_method_from_string(const std::string& s) {
  if (s == "parabolic") return PeakMethod::parabolic;
  if (s == "argmax") return PeakMethod::argmax;
  throw ConfigError("unknown peak method '" + s + "' (expected parabolic or argmax)");
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2 || kind == WindowKind::rect) return w;
  const double m = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = kTwoPi * static_cast<double>(i) / m;
    if (kind == WindowKind::blackman)
      w[i] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
    else
      w[i] = 0.5 - 0.5 * std::cos(x);
  }
  // Exact zeros at the ends.
  w.front() = w.back() = std::max(0.0, w.front());
  return w;
}

std::vector<cplx> autocorrelation(std::span<const cplx> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<cplx> buf(m);
  std::copy(x.begin(), x.end(), buf.begin());
  fft(buf, FFTW_FORWARD);  // X(k) = sum x e^{-i..}
  for (auto& v : buf) v = std::norm(v);
  fft(buf, FFTW_BACKWARD);  // sum_n x*[n] x[n+m] at lag m
  std::vector<cplx> r(n);
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) r[k] = buf[k] * scale;
  return r;
}

Spectrum autocorr_spectrum(std::span<const cplx> series, double dt, double frame_offset, Detrend detrend) {
  if (!(dt > 0.0)) throw DomainError("autocorr spectrum: dt must be > 0");
  const std::size_t n = series.size();
  if (n < kMinAutocorrSamples) throw ConfigError("autocorr spectrum: need at least 4096 samples");
  std::vector<cplx> x(series.begin(), series.end());
  if (detrend == Detrend::mean) remove_mean(x);
  const std::vector<cplx> r = autocorrelation(x);
  // S(nu_k) = dt sum_{|m|<N} r[m] e^{i nu_k m dt}, r[-m] = conj(r[m]); lags folded modulo N.
  std::vector<cplx> folded(n);
  folded[0] = r[0];
  for (std::size_t m = 1; m < n; ++m) folded[m] = r[m] + std::conj(r[n - m]);
  fft(folded, FFTW_BACKWARD);
  std::vector<double> raw(n);
  for (std::size_t k = 0; k < n; ++k) raw[k] = std::max(0.0, dt * folded[k].real());

  Spectrum s;
  shifted_grid(n, dt, frame_offset, raw, s);
  s.welch = false;
  s.n_segments = 1;
  s.window_meta.window = WindowKind::rect;
  s.window_meta.detrend = detrend;
  s.window_meta.segment_length = 0.0;
  s.window_meta.overlap = 0.0;
  return s;
}

int welch_segment_count(std::size_t n, std::size_t segment, std::size_t stride) {
  if (segment == 0 || stride == 0 || n < segment) return 0;
  return static_cast<int>(std::floor(static_cast<double>(n - segment) / static_cast<double>(stride) + 1e-6)) + 1;
}

Spectrum welch_spectrum(std::span<const cplx> series, double dt, const WelchConfig& cfg, double frame_offset) {
  if (!(dt > 0.0)) throw DomainError("welch: dt must be > 0");
  if (!(cfg.gamma > 0.0)) throw ConfigError("welch: reference rate gamma must be > 0");
  if (!(cfg.segment_length > 0.0) || cfg.overlap < 0.0 || !(cfg.overlap < cfg.segment_length))
    throw ConfigError("welch: need 0 <= overlap < segment_length");
  const double unit = 1.0 / cfg.gamma;
  const auto seg = static_cast<std::size_t>(std::llround(cfg.segment_length * unit / dt));
  const auto stride = static_cast<std::size_t>(std::llround((cfg.segment_length - cfg.overlap) * unit / dt));
  if (seg < 8 || stride == 0) throw ConfigError("welch: segment too short for the sampling interval");
  const int n_seg = welch_segment_count(series.size(), seg, stride);
  if (n_seg < std::max(1, cfg.min_segments)) {
    std::ostringstream os;
    os << "welch: record of " << series.size() << " samples holds " << n_seg << " segment(s) of " << seg
       << "; at least " << cfg.min_segments << " required";
    throw ConfigError(os.str());
  }

  const std::vector<double> w = make_window(cfg.window, seg);
  double wsum2 = 0.0;
  for (double v : w) wsum2 += v * v;

  std::vector<double> acc(seg, 0.0);
  std::vector<cplx> buf(seg);
  for (int s = 0; s < n_seg; ++s) {
    const std::size_t start = static_cast<std::size_t>(s) * stride;
    std::copy(series.begin() + static_cast<std::ptrdiff_t>(start),
              series.begin() + static_cast<std::ptrdiff_t>(start + seg), buf.begin());
    if (cfg.detrend == Detrend::mean) remove_mean(buf);
    for (std::size_t i = 0; i < seg; ++i) buf[i] *= w[i];
    fft(buf, FFTW_BACKWARD);
    for (std::size_t k = 0; k < seg; ++k) acc[k] += std::norm(buf[k]);
  }
  const double scale = dt / (wsum2 * n_seg);
  for (auto& v : acc) v *= scale;

  Spectrum out;
  shifted_grid(seg, dt, frame_offset, acc, out);
  out.welch = true;
  out.n_segments = n_seg;
  out.window_meta = cfg;
  return out;
}

Spectrum normalize_peak(const Spectrum& spec) {
  const double m = spec.psd.empty() ? 0.0 : *std::max_element(spec.psd.begin(), spec.psd.end());
  if (!(m > 0.0)) throw DomainError("normalize_peak: spectrum has no positive value");
  Spectrum out = spec;
  for (auto& v : out.psd) v /= m;
  out.normalized = true;
  return out;
}

PeakEstimate find_peak(const Spectrum& spec, FrequencyBand band, PeakMethod method, std::span<const double> exclude,
                       int exclude_bins) {
  if (spec.freqs.empty()) throw DomainError("find_peak: empty spectrum");
  if (!(band.hi > band.lo)) throw DomainError("find_peak: empty band");
  const double dnu = spec.bin_width > 0.0 && spec.freqs.size() > 1 ? spec.bin_width : 0.0;
  auto excluded = [&](double f) {
    for (double c : exclude)
      if (std::abs(f - c) <= (exclude_bins + 0.5) * dnu) return true;
    return false;
  };
  long best = -1;
  double lo_val = INFINITY;
  std::size_t first = spec.freqs.size(), last = 0;
  for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
    const double f = spec.freqs[i];
    if (f < band.lo || f > band.hi || excluded(f)) continue;
    first = std::min(first, i);
    last = std::max(last, i);
    lo_val = std::min(lo_val, spec.psd[i]);
    if (best < 0 || spec.psd[i] > spec.psd[static_cast<std::size_t>(best)]) best = static_cast<long>(i);
  }
  if (best < 0) throw DomainError("find_peak: no spectral bins inside the search band");
  const auto b = static_cast<std::size_t>(best);

  PeakEstimate pe;
  pe.method = method;
  pe.omega_peak = spec.freqs[b];
  pe.height = spec.psd[b];
  pe.uncertainty = 0.5 * dnu;

  const double hi_val = spec.psd[b];
  const bool flat = !(hi_val > 0.0) || (hi_val - lo_val) <= 1e-9 * hi_val;
  const bool at_edge = b == first || b == last;
  if (flat) {
    pe.low_confidence = true;
    pe.omega_peak = 0.5 * (band.lo + band.hi);
    pe.uncertainty = 0.5 * (band.hi - band.lo);
    return pe;
  }
  if (at_edge) pe.low_confidence = true;

  const bool neighbours = b > 0 && b + 1 < spec.psd.size() && !excluded(spec.freqs[b - 1]) &&
                          !excluded(spec.freqs[b + 1]) && spec.psd[b - 1] > 0.0 && spec.psd[b + 1] > 0.0;
  if (method == PeakMethod::parabolic && neighbours && !at_edge) {
    const double ym = std::log(spec.psd[b - 1]);
    const double y0 = std::log(spec.psd[b]);
    const double yp = std::log(spec.psd[b + 1]);
    const double denom = ym - 2.0 * y0 + yp;
    if (denom < 0.0) {
      const double x0 = 0.5 * (ym - yp) / denom;
      pe.omega_peak = spec.freqs[b] + x0 * dnu;
      pe.height = std::exp(y0 - 0.25 * (ym - yp) * x0);
      // Propagated log-PSD scatter of an average of n_segments periodograms.
      const double sigma_y = 1.0 / std::sqrt(static_cast<double>(std::max(1, spec.n_segments)));
      const double d_ym = 0.5 / denom - 0.5 * (ym - yp) / (denom * denom);
      const double d_y0 = (ym - yp) / (denom * denom);
      const double d_yp = -0.5 / denom - 0.5 * (ym - yp) / (denom * denom);
      const double grad = std::sqrt(d_ym * d_ym + d_y0 * d_y0 + d_yp * d_yp);
      pe.uncertainty = std::max(0.05, std::min(sigma_y * grad, 0.5)) * dnu;
    }
  }
  return pe;
}

LorentzianFit fit_lorentzian(const Spectrum& spec, FrequencyBand band, double record_length) {
  WhittleData data;
  for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
    if (spec.freqs[i] < band.lo || spec.freqs[i] > band.hi) continue;
    data.w.push_back(spec.freqs[i]);
    data.p.push_back(spec.psd[i]);
  }
  if (data.w.size() < 8) throw DomainError("fit_lorentzian: fewer than 8 bins in band");
  const auto peak_it = std::max_element(data.p.begin(), data.p.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) throw DomainError("fit_lorentzian: spectrum has no positive value in band");
  const auto ip = static_cast<std::size_t>(peak_it - data.p.begin());

  // Work in bin units around the peak for conditioning.
  const double dnu = data.w.size() > 1 ? data.w[1] - data.w[0] : 1.0;
  data.center_w = data.w[ip];
  data.scale_w = dnu;
  if (record_length < 0.0) throw DomainError("fit_lorentzian: negative record length");
  data.record = record_length * dnu;
  for (auto& w : data.w) w = (w - data.center_w) / dnu;
  const double pscale = peak;
  for (auto& v : data.p) v /= pscale;

  // Initial half width from the half-maximum crossing of a smoothed profile.
  std::size_t r = ip;
  while (r + 1 < data.p.size() && data.p[r] > 0.5) ++r;
  std::size_t l = ip;
  while (l > 0 && data.p[l] > 0.5) --l;
  const double hw0 = std::max(0.5, 0.5 * static_cast<double>(r - l));
  std::vector<double> sorted = data.p;
  std::sort(sorted.begin(), sorted.end());
  const double bg0 = std::max(1e-6, sorted[sorted.size() / 10]);

  gsl_set_error_handler_off();
  gsl_multimin_function fn{&whittle, 4, &data};
  gsl_vector* x = gsl_vector_alloc(4);
  gsl_vector* step = gsl_vector_alloc(4);
  gsl_vector_set(x, 0, 0.0);
  gsl_vector_set(x, 1, std::log(hw0));
  gsl_vector_set(x, 2, std::log(std::max(1e-3, 1.0 - bg0)));
  gsl_vector_set(x, 3, std::log(bg0));
  gsl_vector_set(step, 0, 0.5);
  gsl_vector_set(step, 1, 0.3);
  gsl_vector_set(step, 2, 0.3);
  gsl_vector_set(step, 3, 0.5);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4);
  gsl_multimin_fminimizer_set(m, &fn, x, step);

  LorentzianFit fit;
  // Restarts guard against premature simplex collapse. Converged once a
  // restart no longer improves the likelihood.
  double f_prev = whittle(x, &data);
  for (int round = 0; round < 4; ++round) {
    int status = GSL_CONTINUE;
    for (int it = 0; it < 5000 && status == GSL_CONTINUE; ++it) {
      if (gsl_multimin_fminimizer_iterate(m)) break;  // no further progress possible
      ++fit.iterations;
      status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-7);
    }
    const double f = gsl_multimin_fminimizer_minimum(m);
    gsl_vector_memcpy(x, gsl_multimin_fminimizer_x(m));
    if (round > 0 && std::abs(f_prev - f) <= 1e-9 * (1.0 + std::abs(f))) {
      fit.converged = true;
      break;
    }
    f_prev = f;
    gsl_multimin_fminimizer_set(m, &fn, x, step);
  }
  const double q0 = gsl_vector_get(x, 0);
  const double g = std::exp(gsl_vector_get(x, 1));
  const double h = std::exp(gsl_vector_get(x, 2));
  const double bg = std::exp(gsl_vector_get(x, 3));
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(x);
  gsl_vector_free(step);

  fit.center = data.center_w + q0 * dnu;
  fit.hwhm = g * dnu;
  fit.amplitude = h * pscale * fit.hwhm * fit.hwhm;
  fit.background = bg * pscale;
  return fit;
}

std::vector<cplx> quadrature(std::span<const cplx> x) {
  std::vector<cplx> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].real();
  return out;
}

void write_spectrum_csv(const std::string& path, const Spectrum& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "# freq: absolute angular frequency (units of mean mechanical frequency); psd: "
     << (spec.normalized ? "normalized to peak" : "power per unit angular frequency x 2 pi") << "\n";
  os << "freq,psd,n_segments,window,normalized\n";
  for (std::size_t i = 0; i < spec.freqs.size(); ++i)
    os << spec.freqs[i] << ',' << spec.psd[i] << ',' << spec.n_segments << ','
       << to_string(spec.welch ? spec.window_meta.window : WindowKind::rect) << ',' << (spec.normalized ? 1 : 0)
       << '\n';
  write_text_atomic(path, os.str());
}

}  // namespace darkgup
