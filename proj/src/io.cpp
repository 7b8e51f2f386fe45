#include "darkgup/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "darkgup/errors.hpp"

namespace darkgup {
namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("container: unexpected end of file");
  return v;
}

void put_name(std::ostream& os, const std::string& s) {
  if (s.size() > 0xFFFF) throw ConfigError("container: name too long");
  put<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_name(std::istream& is) {
  const auto n = get<std::uint16_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw ConfigError("container: unexpected end of file");
  return s;
}

void rename_into_place(const std::string& tmp, const std::string& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("cannot write " + path + ": " + ec.message());
  }
}

std::string temp_name(const std::string& path) { return path + ".tmp"; }

const char* const kParamNames[] = {"omega_b1", "omega_b2", "gamma1", "gamma2", "g1",    "g2",
                                   "kappa",    "kappa_in", "delta1", "delta2", "drive_h", "drive_c",
                                   "nbar1",    "nbar2",    "beta_nl", "theta"};

std::vector<double*> param_fields(SystemParams& p) {
  return {&p.omega_b1, &p.omega_b2, &p.gamma1, &p.gamma2,  &p.g1,      &p.g2,      &p.kappa, &p.kappa_in,
          &p.delta1,   &p.delta2,   &p.drive_h, &p.drive_c, &p.nbar1, &p.nbar2, &p.beta_nl, &p.theta};
}

void add_params(ColumnarContainer& c, SystemParams p) {
  const auto fields = param_fields(p);
  for (std::size_t i = 0; i < fields.size(); ++i) c.header.emplace_back(kParamNames[i], *fields[i]);
}

SystemParams read_params(const ColumnarContainer& c) {
  SystemParams p;
  const auto fields = param_fields(p);
  for (std::size_t i = 0; i < fields.size(); ++i) *fields[i] = c.header_value(kParamNames[i]);
  return p;
}

void add_complex(ColumnarContainer& c, const std::string& name, const std::vector<cplx>& z) {
  std::vector<double> re(z.size()), im(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    re[i] = z[i].real();
    im[i] = z[i].imag();
  }
  c.column_names.push_back(name + "_re");
  c.columns.push_back(std::move(re));
  c.column_names.push_back(name + "_im");
  c.columns.push_back(std::move(im));
}

std::vector<cplx> get_complex(const ColumnarContainer& c, const std::string& name) {
  const auto& re = c.column(name + "_re");
  const auto& im = c.column(name + "_im");
  std::vector<cplx> z(re.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = {re[i], im[i]};
  return z;
}

}  // namespace

double ColumnarContainer::header_value(const std::string& name) const {
  for (const auto& [k, v] : header)
    if (k == name) return v;
  throw ConfigError("container: missing header entry '" + name + "'");
}

const std::vector<double>& ColumnarContainer::column(const std::string& name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == name) return columns[i];
  throw ConfigError("container: missing column '" + name + "'");
}

void write_container(const std::string& path, const ColumnarContainer& c) {
  if (c.magic.size() != 4) throw ConfigError("container: magic must have 4 bytes");
  if (c.column_names.size() != c.columns.size()) throw ConfigError("container: column name count mismatch");
  const std::uint64_t rows = c.columns.empty() ? 0 : c.columns.front().size();
  for (const auto& col : c.columns)
    if (col.size() != rows) throw ConfigError("container: ragged columns");

  const std::string tmp = temp_name(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open " + tmp + " for writing");
    os.write(c.magic.data(), 4);
    put<std::uint32_t>(os, c.version);
    put<std::uint64_t>(os, c.seed);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(c.header.size()));
    for (const auto& [k, v] : c.header) {
      put_name(os, k);
      put<double>(os, v);
    }
    put<std::uint64_t>(os, rows);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(c.columns.size()));
    for (const auto& n : c.column_names) put_name(os, n);
    for (const auto& col : c.columns)
      os.write(reinterpret_cast<const char*>(col.data()), static_cast<std::streamsize>(col.size() * sizeof(double)));
    if (!os) throw ConfigError("write failed: " + tmp);
  }
  rename_into_place(tmp, path);
}

ColumnarContainer read_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  ColumnarContainer c;
  c.magic.resize(4);
  is.read(c.magic.data(), 4);
  if (!is || (c.magic != "OMG1" && c.magic != "OMG2")) throw ConfigError(path + ": not an OMG container");
  c.version = get<std::uint32_t>(is);
  c.seed = get<std::uint64_t>(is);
  const auto nh = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < nh; ++i) {
    std::string k = get_name(is);
    c.header.emplace_back(std::move(k), get<double>(is));
  }
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < cols; ++i) c.column_names.push_back(get_name(is));
  for (std::uint32_t i = 0; i < cols; ++i) {
    std::vector<double> col(rows);
    is.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(rows * sizeof(double)));
    if (!is) throw ConfigError(path + ": truncated column data");
    c.columns.push_back(std::move(col));
  }
  return c;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
  ColumnarContainer c;
  c.magic = "OMG1";
  c.seed = traj.noise.seed;
  add_params(c, traj.params);
  c.header.emplace_back("dt", traj.dt);
  c.header.emplace_back("record_stride", traj.record_stride);
  c.header.emplace_back("noise_enabled", traj.noise.enabled ? 1.0 : 0.0);
  c.header.emplace_back("noise_nbar1", traj.noise.nbar1);
  c.header.emplace_back("noise_nbar2", traj.noise.nbar2);
  c.column_names.push_back("t");
  c.columns.push_back(traj.times);
  add_complex(c, "a", traj.a);
  add_complex(c, "b1", traj.b1);
  add_complex(c, "b2", traj.b2);
  write_container(path, c);
}

Trajectory read_trajectory(const std::string& path) {
  const ColumnarContainer c = read_container(path);
  if (c.magic != "OMG1") throw ConfigError(path + ": expected an OMG1 trajectory container");
  Trajectory t;
  t.params = read_params(c);
  t.dt = c.header_value("dt");
  t.record_stride = static_cast<int>(c.header_value("record_stride"));
  t.noise.seed = c.seed;
  t.noise.enabled = c.header_value("noise_enabled") != 0.0;
  t.noise.nbar1 = c.header_value("noise_nbar1");
  t.noise.nbar2 = c.header_value("noise_nbar2");
  t.times = c.column("t");
  t.a = get_complex(c, "a");
  t.b1 = get_complex(c, "b1");
  t.b2 = get_complex(c, "b2");
  return t;
}

void write_slow_amplitudes(const std::string& path, const SlowAmplitudeSeries& s) {
  ColumnarContainer c;
  c.magic = "OMG2";
  c.seed = s.seed;
  c.header = {{"frame_freq", s.frame_freq},
              {"beta_offset1_re", s.beta_offset1.real()},
              {"beta_offset1_im", s.beta_offset1.imag()},
              {"beta_offset2_re", s.beta_offset2.real()},
              {"beta_offset2_im", s.beta_offset2.imag()}};
  c.column_names.push_back("t");
  c.columns.push_back(s.times);
  add_complex(c, "A1", s.A1);
  add_complex(c, "A2", s.A2);
  add_complex(c, "Ab", s.Ab);
  add_complex(c, "Ad", s.Ad);
  write_container(path, c);
}

SlowAmplitudeSeries read_slow_amplitudes(const std::string& path) {
  const ColumnarContainer c = read_container(path);
  if (c.magic != "OMG2") throw ConfigError(path + ": expected an OMG2 slow-amplitude container");
  SlowAmplitudeSeries s;
  s.seed = c.seed;
  s.frame_freq = c.header_value("frame_freq");
  s.beta_offset1 = {c.header_value("beta_offset1_re"), c.header_value("beta_offset1_im")};
  s.beta_offset2 = {c.header_value("beta_offset2_re"), c.header_value("beta_offset2_im")};
  s.times = c.column("t");
  s.A1 = get_complex(c, "A1");
  s.A2 = get_complex(c, "A2");
  s.Ab = get_complex(c, "Ab");
  s.Ad = get_complex(c, "Ad");
  return s;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ostringstream os;
  os.precision(17);
  os << "# t in units of 1/mean mechanical frequency; amplitudes dimensionless\n";
  os << "t,a_re,a_im,b1_re,b1_im,b2_re,b2_im\n";
  for (std::size_t i = 0; i < traj.size(); ++i)
    os << traj.times[i] << ',' << traj.a[i].real() << ',' << traj.a[i].imag() << ',' << traj.b1[i].real() << ','
       << traj.b1[i].imag() << ',' << traj.b2[i].real() << ',' << traj.b2[i].imag() << '\n';
  write_text_atomic(path, os.str());
}

void write_slow_amplitudes_csv(const std::string& path, const SlowAmplitudeSeries& s) {
  std::ostringstream os;
  os.precision(17);
  os << "# t in units of 1/mean mechanical frequency; amplitudes dimensionless (frame rotating at delta2)\n";
  os << "t,Ab_re,Ab_im,Ab_abs,Ad_re,Ad_im,Ad_abs\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << s.times[i] << ',' << s.Ab[i].real() << ',' << s.Ab[i].imag() << ',' << std::abs(s.Ab[i]) << ','
       << s.Ad[i].real() << ',' << s.Ad[i].imag() << ',' << std::abs(s.Ad[i]) << '\n';
  write_text_atomic(path, os.str());
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = temp_name(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open " + tmp + " for writing");
    os << content;
    if (!os) throw ConfigError("write failed: " + tmp);
  }
  rename_into_place(tmp, path);
}

}  // namespace darkgup
