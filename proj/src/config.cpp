#include "darkgup/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "darkgup/errors.hpp"

namespace darkgup {
namespace {

const char* kScenarioNames[] = {"fig2_amplitude", "fig3_spectrum", "fig4_resolution", "fig5_mismatch",
                                "fig6_peak_vs_beta", "custom"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const ConfigEntry& e) { return e.source + ":" + std::to_string(e.line); }

double to_number(const ConfigEntry& e) {
  const char* s = e.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || trim(end) != "" || !std::isfinite(v))
    throw ConfigError(where(e) + ": '" + e.key + "' expects a number, got '" + e.value + "'");
  return v;
}

int to_int(const ConfigEntry& e) {
  const double v = to_number(e);
  if (v != std::floor(v) || std::abs(v) > 2e9)
    throw ConfigError(where(e) + ": '" + e.key + "' expects an integer, got '" + e.value + "'");
  return static_cast<int>(v);
}

std::uint64_t to_u64(const ConfigEntry& e) {
  const char* s = e.value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || trim(end) != "" || e.value.find('-') != std::string::npos)
    throw ConfigError(where(e) + ": '" + e.key + "' expects a non-negative integer, got '" + e.value + "'");
  return v;
}

bool to_bool(const ConfigEntry& e) {
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(where(e) + ": '" + e.key + "' expects true/false, got '" + e.value + "'");
}

std::vector<double> to_list(const ConfigEntry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    ConfigEntry sub = e;
    sub.value = trim(item);
    out.push_back(to_number(sub));
  }
  if (out.empty()) throw ConfigError(where(e) + ": '" + e.key + "' expects a comma-separated list");
  return out;
}

template <typename F>
auto wrap(const ConfigEntry& e, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw ConfigError(where(e) + ": invalid value '" + e.value + "' for '" + e.key + "'");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(5) << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

}  // namespace

const char* to_string(ScenarioKind s) { return kScenarioNames[static_cast<int>(s)]; }

const char* to_string(Scale s) { return s == Scale::paper ? "paper" : "desk"; }

ScenarioKind scenario_from_string(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kScenarioNames[i]) return static_cast<ScenarioKind>(i);
  throw ConfigError("unknown scenario '" + s +
                    "' (fig2_amplitude, fig3_spectrum, fig4_resolution, fig5_mismatch, fig6_peak_vs_beta, custom)");
}

Scale scale_from_string(const std::string& s) {
  if (s == "paper") return Scale::paper;
  if (s == "desk") return Scale::desk;
  throw ConfigError("unknown scale '" + s + "' (paper, desk)");
}

std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& source) {
  std::vector<ConfigEntry> out;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno, source};
    if (e.key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": missing key");
    if (e.value.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": missing value for '" + e.key + "'");
    out.push_back(std::move(e));
  }
  if (out.empty()) throw ConfigError(source + ":" + std::to_string(std::max(lineno, 1)) + ": empty configuration");
  return out;
}

std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      // run
      "scenario", "scale", "seed", "workers", "output_dir",
      // SI context
      "omega_b_si", "mass", "wavelength", "temperature",
      // dimensionless parameters
      "omega_b1", "omega_b2", "gamma1", "gamma2", "gamma", "q_factor", "g1", "g2", "g", "kappa", "kappa_in",
      "delta1", "delta2", "drive_h", "drive_c", "nbar1", "nbar2", "nbar", "beta_nl", "theta", "delta",
      // SI parameters (Hz are ordinary frequencies, powers in W)
      "gamma_si", "g_si", "kappa_si", "kappa_in_si", "delta1_si", "delta2_si", "delta_si", "power_h", "power_c",
      "beta0",
      // integration
      "dt", "scheme", "noise", "record", "transient", "record_stride",
      // spectra and peaks
      "welch_segment", "welch_overlap", "window", "detrend", "min_segments", "peak_method", "band_lo", "band_hi",
      "exclude_coherent", "exclude_bins",
      // protocol and sweeps
      "powers", "drive_grid", "replicates", "weighted", "beta_grid", "threshold", "records"};
  return keys;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = 4;
  for (const auto& k : known_config_keys()) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

IntegratorConfig ScenarioConfig::integrator() const {
  IntegratorConfig ic;
  const double g = params.gamma_mean();
  ic.dt = protocol.dt;
  ic.scheme = protocol.scheme;
  ic.record_stride = protocol.record_stride;
  ic.t_discard = protocol.transient / g;
  ic.t_total = (protocol.transient + protocol.record) / g;
  return ic;
}

ScenarioConfig resolve_config(const std::vector<ConfigEntry>& entries, const std::string& scale_override) {
  for (const auto& e : entries) {
    const auto& keys = known_config_keys();
    if (std::find(keys.begin(), keys.end(), e.key) == keys.end()) {
      std::string msg = where(e) + ": unknown key '" + e.key + "'";
      const std::string s = suggest_key(e.key);
      if (!s.empty()) msg += "; did you mean '" + s + "'?";
      msg += " Valid keys:";
      for (const auto& k : keys) msg += " " + k;
      throw ConfigError(msg);
    }
  }

  ScenarioConfig cfg;
  std::map<std::string, ConfigEntry> user;
  for (const auto& e : entries) {
    if (user.count(e.key)) cfg.notes.push_back(where(e) + ": '" + e.key + "' repeated; last value wins");
    user[e.key] = e;
  }
  if (user.count("scenario")) cfg.scenario = wrap(user["scenario"], [&] { return scenario_from_string(user["scenario"].value); });
  if (!scale_override.empty()) {
    cfg.scale = scale_from_string(scale_override);
  } else if (user.count("scale")) {
    cfg.scale = wrap(user["scale"], [&] { return scale_from_string(user["scale"].value); });
  }

  std::map<std::string, ConfigEntry> m;
  for (auto& e : parse_config_text(preset_text(cfg.scenario, cfg.scale), preset_name(cfg.scenario, cfg.scale)))
    m[e.key] = e;
  for (auto& [k, e] : user) m[k] = e;
  // Keys that set the same quantity: a user choice replaces whatever the preset used.
  static const std::vector<std::vector<std::string>> groups = {
      {"kappa", "kappa_si"},       {"kappa_in", "kappa_in_si"}, {"gamma", "gamma_si", "q_factor"},
      {"g", "g_si"},               {"delta1", "delta1_si"},     {"delta2", "delta2_si"},
      {"delta", "delta_si"},       {"nbar", "temperature"},     {"beta_nl", "beta0"},
      {"drive_h", "power_h"},      {"drive_c", "power_c"},      {"drive_grid", "powers"}};
  for (const auto& grp : groups) {
    const bool any = std::any_of(grp.begin(), grp.end(), [&](const std::string& k) { return user.count(k) > 0; });
    if (!any) continue;
    for (const auto& k : grp)
      if (!user.count(k)) m.erase(k);
  }
  m.erase("scale");
  m.erase("scenario");
  for (auto& [k, e] : m) cfg.entries.push_back(e);

  auto has = [&](const char* k) { return m.count(k) > 0; };
  auto num = [&](const char* k) { return to_number(m.at(k)); };
  auto conflict = [&](const char* dimless, const char* si) {
    if (has(dimless) && has(si))
      cfg.notes.push_back(std::string("'") + dimless + "' overrides '" + si + "'");
  };

  SiContext& si = cfg.si;
  if (has("omega_b_si")) si.omega_b_si = num("omega_b_si");
  if (has("mass")) si.mass = num("mass");
  if (has("wavelength")) si.laser_wavelength = num("wavelength");
  if (has("temperature")) si.temperature = num("temperature");
  if (!(si.omega_b_si > 0.0)) throw ConfigError("omega_b_si must be positive");
  const double f = si.omega_b_si;

  SystemParams& p = cfg.params;
  if (has("kappa_si")) p.kappa = num("kappa_si") / f;
  if (has("kappa_in_si")) p.kappa_in = num("kappa_in_si") / f;
  if (has("gamma_si")) p.gamma1 = p.gamma2 = num("gamma_si") / f;
  if (has("g_si")) p.g1 = p.g2 = num("g_si") / f;
  if (has("delta1_si")) p.delta1 = num("delta1_si") / f;
  if (has("delta2_si")) p.delta2 = num("delta2_si") / f;
  if (has("delta_si")) {
    p.omega_b1 = 1.0 - num("delta_si") / f;
    p.omega_b2 = 1.0 + num("delta_si") / f;
  }
  if (has("temperature")) p.nbar1 = p.nbar2 = thermal_occupancy(si.omega_b_angular(), si.temperature);
  if (has("beta0")) {
    if (!(si.mass > 0.0)) throw ConfigError(where(m.at("beta0")) + ": 'beta0' needs a positive 'mass'");
    p.beta_nl = beta_nl_from_beta0(num("beta0"), si.mass, si.omega_b_angular());
  }

  conflict("kappa", "kappa_si");
  conflict("kappa_in", "kappa_in_si");
  conflict("gamma", "gamma_si");
  conflict("q_factor", "gamma_si");
  conflict("g", "g_si");
  conflict("delta1", "delta1_si");
  conflict("delta2", "delta2_si");
  conflict("delta", "delta_si");
  conflict("nbar", "temperature");
  conflict("beta_nl", "beta0");
  conflict("drive_h", "power_h");
  conflict("drive_c", "power_c");
  conflict("drive_grid", "powers");

  if (has("kappa")) p.kappa = num("kappa");
  if (has("kappa_in")) p.kappa_in = num("kappa_in");
  if (has("q_factor")) p.gamma1 = p.gamma2 = 1.0 / num("q_factor");
  if (has("gamma")) p.gamma1 = p.gamma2 = num("gamma");
  if (has("gamma1")) p.gamma1 = num("gamma1");
  if (has("gamma2")) p.gamma2 = num("gamma2");
  if (has("g")) p.g1 = p.g2 = num("g");
  if (has("g1")) p.g1 = num("g1");
  if (has("g2")) p.g2 = num("g2");
  if (has("delta1")) p.delta1 = num("delta1");
  if (has("delta2")) p.delta2 = num("delta2");
  if (has("delta")) {
    p.omega_b1 = 1.0 - num("delta");
    p.omega_b2 = 1.0 + num("delta");
  }
  if (has("omega_b1")) p.omega_b1 = num("omega_b1");
  if (has("omega_b2")) p.omega_b2 = num("omega_b2");
  if (has("nbar")) p.nbar1 = p.nbar2 = num("nbar");
  if (has("nbar1")) p.nbar1 = num("nbar1");
  if (has("nbar2")) p.nbar2 = num("nbar2");
  if (has("beta_nl")) p.beta_nl = num("beta_nl");
  if (has("theta")) p.theta = num("theta");

  if (!(p.kappa_in > 0.0)) throw ConfigError("kappa_in must be positive");
  const double c = drive_per_sqrt_watt(p.kappa_in, si);
  auto drive_of = [&](const char* key) {
    const double w = num(key);
    if (w < 0.0) throw ConfigError(where(m.at(key)) + ": power must be non-negative");
    return c * std::sqrt(w);
  };
  if (has("power_h")) p.drive_h = drive_of("power_h");
  if (has("power_c")) p.drive_c = drive_of("power_c");
  if (has("drive_h")) p.drive_h = num("drive_h");
  if (has("drive_c")) p.drive_c = num("drive_c");

  ProtocolConfig& pc = cfg.protocol;
  pc.drive_scale = c;
  if (has("powers")) pc.powers = to_list(m.at("powers"));
  if (has("drive_grid")) {
    pc.powers.clear();
    for (double e : to_list(m.at("drive_grid"))) pc.powers.push_back((e / c) * (e / c));
  }
  if (has("dt")) pc.dt = num("dt");
  if (has("scheme")) pc.scheme = wrap(m.at("scheme"), [&] { return scheme_from_string(m.at("scheme").value); });
  if (has("noise")) pc.noise = to_bool(m.at("noise"));
  if (has("record")) pc.record = num("record");
  if (has("transient")) pc.transient = num("transient");
  if (has("record_stride")) pc.record_stride = to_int(m.at("record_stride"));
  if (has("welch_segment")) pc.welch.segment_length = num("welch_segment");
  if (has("welch_overlap")) pc.welch.overlap = num("welch_overlap");
  if (has("window")) pc.welch.window = wrap(m.at("window"), [&] { return window_from_string(m.at("window").value); });
  if (has("detrend"))
    pc.welch.detrend = wrap(m.at("detrend"), [&] { return detrend_from_string(m.at("detrend").value); });
  if (has("min_segments")) pc.welch.min_segments = to_int(m.at("min_segments"));
  if (has("peak_method"))
    pc.peak_method = wrap(m.at("peak_method"), [&] { return peak_method_from_string(m.at("peak_method").value); });
  if (has("band_lo")) pc.band_lo = num("band_lo");
  if (has("band_hi")) pc.band_hi = num("band_hi");
  if (has("exclude_coherent")) pc.exclude_coherent = to_bool(m.at("exclude_coherent"));
  if (has("exclude_bins")) pc.exclude_bins = to_int(m.at("exclude_bins"));
  if (has("replicates")) pc.replicates = to_int(m.at("replicates"));
  if (has("weighted")) pc.weighted = to_bool(m.at("weighted"));
  if (has("beta_grid")) cfg.beta_grid = to_list(m.at("beta_grid"));
  if (has("threshold")) cfg.threshold = num("threshold");
  if (has("records")) cfg.records = to_list(m.at("records"));
  if (has("seed")) cfg.master_seed = to_u64(m.at("seed"));
  if (has("workers")) cfg.workers = to_int(m.at("workers"));
  if (has("output_dir")) cfg.output_dir = m.at("output_dir").value;

  if (pc.band_lo >= pc.band_hi) throw ConfigError("band_lo must be below band_hi");
  if (pc.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(pc.record > 0.0) || pc.transient < 0.0) throw ConfigError("record must be > 0 and transient >= 0");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (!(pc.dt > 0.0)) throw ConfigError("dt must be positive");

  {
    std::vector<std::string> msgs;
    ScopedWarningSink sink([&](const std::string& w) { msgs.push_back(w); });
    try {
      p.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("invalid parameters: ") + e.what());
    }
    if (pc.dt > max_stable_dt(p) * (1.0 + 1e-12))
      msgs.push_back("dt = " + fmt(pc.dt) + " exceeds the stability bound " + fmt(max_stable_dt(p)));
    for (auto& w : msgs) cfg.notes.push_back(w);
  }

  pc.base = p;
  pc.master_seed = cfg.master_seed;
  pc.workers = cfg.workers;
  return cfg;
}

ScenarioConfig load_config(const std::string& path, const std::string& scale_override) {
  return resolve_config(parse_config_file(path), scale_override);
}

std::string echo_config(const ScenarioConfig& cfg) {
  const SystemParams& p = cfg.params;
  const ProtocolConfig& pc = cfg.protocol;
  std::ostringstream os;
  os << "scenario = " << to_string(cfg.scenario) << "\n";
  os << "scale = " << to_string(cfg.scale) << "\n";
  os << "preset = " << preset_name(cfg.scenario, cfg.scale) << "\n";
  os << "seed = " << cfg.master_seed << "\n";
  os << "workers = " << cfg.workers << "\n";
  os << "omega_b_si = " << fmt(cfg.si.omega_b_si) << "\n";
  os << "omega_b1 = " << fmt(p.omega_b1) << "\n";
  os << "omega_b2 = " << fmt(p.omega_b2) << "\n";
  os << "gamma1 = " << fmt(p.gamma1) << "\n";
  os << "gamma2 = " << fmt(p.gamma2) << "\n";
  os << "g1 = " << fmt(p.g1) << "\n";
  os << "g2 = " << fmt(p.g2) << "\n";
  os << "kappa = " << fmt(p.kappa) << "\n";
  os << "kappa_in = " << fmt(p.kappa_in) << "\n";
  os << "delta1 = " << fmt(p.delta1) << "\n";
  os << "delta2 = " << fmt(p.delta2) << "\n";
  os << "drive_h = " << fmt(p.drive_h) << "\n";
  os << "drive_c = " << fmt(p.drive_c) << "\n";
  os << "nbar1 = " << fmt(p.nbar1) << "\n";
  os << "nbar2 = " << fmt(p.nbar2) << "\n";
  os << "beta_nl = " << fmt(p.beta_nl) << "\n";
  os << "theta = " << fmt(p.theta) << "\n";
  os << "drive_per_sqrt_watt = " << fmt(pc.drive_scale) << "\n";
  os << "dt = " << fmt(pc.dt) << "\n";
  os << "scheme = " << to_string(pc.scheme) << "\n";
  os << "noise = " << (pc.noise ? "true" : "false") << "\n";
  os << "record = " << fmt(pc.record) << "\n";
  os << "transient = " << fmt(pc.transient) << "\n";
  os << "welch_segment = " << fmt(pc.welch.segment_length) << "\n";
  os << "welch_overlap = " << fmt(pc.welch.overlap) << "\n";
  os << "window = " << to_string(pc.welch.window) << "\n";
  os << "peak_method = " << to_string(pc.peak_method) << "\n";
  os << "band = " << fmt(pc.band_lo) << ", " << fmt(pc.band_hi) << "\n";
  os << "replicates = " << pc.replicates << "\n";
  if (!pc.powers.empty()) {
    std::vector<double> drives;
    for (double w : pc.powers) drives.push_back(pc.drive_scale * std::sqrt(w));
    os << "powers = " << fmt_list(pc.powers) << "\n";
    os << "drive_grid = " << fmt_list(drives) << "\n";
  }
  if (!cfg.beta_grid.empty()) os << "beta_grid = " << fmt_list(cfg.beta_grid) << "\n";
  if (!cfg.records.empty()) os << "records = " << fmt_list(cfg.records) << "\n";
  os << "threshold = " << fmt(cfg.threshold) << "\n";
  for (const auto& n : cfg.notes) os << "# note: " << n << "\n";
  return os.str();
}

const std::map<std::string, std::string>& preset_table();

std::string preset_name(ScenarioKind scenario, Scale scale) {
  return std::string(to_string(scale)) + "_" + to_string(scenario);
}

std::string preset_text(ScenarioKind scenario, Scale scale) {
  const auto& t = preset_table();
  const auto it = t.find(preset_name(scenario, scale));
  if (it == t.end()) throw ConfigError("no preset named '" + preset_name(scenario, scale) + "'");
  return it->second;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace darkgup
