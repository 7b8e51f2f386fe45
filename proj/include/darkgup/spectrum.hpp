#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

// Noise-spectrum estimation of complex slow-amplitude series: Wiener-Khinchin
// and Welch estimators, peak normalisation, peak location and Lorentzian fits.
//
// Convention: a component x(t) ~ e^{-i nu t} appears at baseband frequency
// +nu, and is reported at the absolute frequency frame_offset + nu.
// PSD units: dt |sum w x e^{i nu t}|^2 / sum w^2, so white noise of variance
// s^2 gives s^2 dt and sum(psd) dnu / 2 pi equals the mean power.

namespace darkgup {

using cplx = std::complex<double>;

enum class WindowKind { blackman, hann, rect };
enum class Detrend { none, mean };
enum class PeakMethod { argmax, parabolic };

const char* to_string(WindowKind w);
const char* to_string(Detrend d);
const char* to_string(PeakMethod m);
WindowKind window_from_string(const std::string& s);
Detrend detrend_from_string(const std::string& s);
PeakMethod peak_method_from_string(const std::string& s);

struct WelchConfig {
  double segment_length = 5.0;  // units of 1/gamma
  double overlap = 2.0;         // shared duration of consecutive segments, units of 1/gamma
  double gamma = 0.0;           // reference rate defining the time unit; must be > 0
  WindowKind window = WindowKind::blackman;
  Detrend detrend = Detrend::mean;
  int min_segments = 2;
};

struct Spectrum {
  std::vector<double> freqs;  // strictly increasing
  std::vector<double> psd;
  bool normalized = false;
  WelchConfig window_meta;
  bool welch = false;  // false: Wiener-Khinchin estimate of the whole record
  int n_segments = 1;
  double bin_width = 0.0;
  double frame_offset = 0.0;
};

struct PeakEstimate {
  double omega_peak = 0.0;
  double height = 0.0;
  PeakMethod method = PeakMethod::argmax;
  double uncertainty = 0.0;
  bool low_confidence = false;
};

struct FrequencyBand {
  double lo = 0.0;
  double hi = 0.0;
};

/// Window coefficients (symmetric form).
std::vector<double> make_window(WindowKind kind, std::size_t n);

/// Biased autocorrelation (lags 0..N-1) of a complex series, r[m] = (1/N) sum x*[n] x[n+m].
std::vector<cplx> autocorrelation(std::span<const cplx> x);

/// Fourier transform of the biased autocorrelation of the whole record.
/// Requires at least 4096 samples.
Spectrum autocorr_spectrum(std::span<const cplx> series, double dt, double frame_offset = 0.0,
                           Detrend detrend = Detrend::none);

/// Averaged windowed periodograms.
Spectrum welch_spectrum(std::span<const cplx> series, double dt, const WelchConfig& cfg, double frame_offset = 0.0);

/// Number of Welch segments for a record of n samples (segment and stride in samples).
int welch_segment_count(std::size_t n, std::size_t segment, std::size_t stride);

Spectrum normalize_peak(const Spectrum& spec);

/// Peak inside `band`, skipping +-exclude_bins around each frequency in `exclude`.
PeakEstimate find_peak(const Spectrum& spec, FrequencyBand band, PeakMethod method,
                       std::span<const double> exclude = {}, int exclude_bins = 5);

struct LorentzianFit {
  double center = 0.0;
  double hwhm = 0.0;
  double amplitude = 0.0;   // model: amplitude / ((w - center)^2 + hwhm^2) + background
  double background = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Maximum-likelihood (Whittle) Lorentzian-plus-background fit of a periodogram inside `band`.
/// With record_length > 0 the model is the expected periodogram of a record of
/// that duration (Lorentzian smeared by the triangular lag window); hwhm and
/// center still refer to the underlying Lorentzian.
LorentzianFit fit_lorentzian(const Spectrum& spec, FrequencyBand band, double record_length = 0.0);

/// Real quadrature Re x as a complex series (for cross-checks).
std::vector<cplx> quadrature(std::span<const cplx> x);

/// Columns: freq, psd, n_segments, window, normalized.
void write_spectrum_csv(const std::string& path, const Spectrum& spec);

}  // namespace darkgup
