#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <catch_amalgamated.hpp>

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

const fs::path& workdir() {
  static const fs::path d = [] {
    fs::path p = fs::temp_directory_path() / "darkgup_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args, const std::string& env = "") {
  const char* bin = std::getenv("DARKGUP_BIN");
  REQUIRE(bin != nullptr);
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = env + " \"" + bin + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path write_cfg(const std::string& name, const std::string& text) {
  const fs::path p = workdir() / name;
  std::ofstream(p) << text;
  return p;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

std::string without_timestamp(const std::string& manifest) {
  std::stringstream in(manifest), out;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("timestamp", 0) != 0) out << line << "\n";
  return out.str();
}

// Q = 1e3 protocol small enough for a unit test.
const char* kSmallProtocol =
    "scenario = custom\n"
    "gamma = 1e-3\n"
    "delta2 = 0.95\n"
    "powers = 3.125e-6, 6.25e-6, 9.375e-6, 1.25e-5, 1.5625e-5, 1.875e-5, 2.1875e-5, 2.5e-5\n"
    "replicates = 1\n"
    "record = 10\n"
    "transient = 3\n";

}  // namespace

TEST_CASE("validate echoes the full-scale dimensionless parameters", "[cli]") {
  const auto cfg = write_cfg("paper2.cfg", "scenario = fig2_amplitude\nscale = paper\n");
  const Result r = run("validate --config " + cfg.string());
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("kappa = 4.1905"));
  CHECK_THAT(r.out, ContainsSubstring("g1 = 1.9048e-06"));
}

TEST_CASE("configuration errors exit with code 2", "[cli]") {
  const auto empty = write_cfg("empty.cfg", "");
  Result r = run("validate --config " + empty.string());
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("empty.cfg:1"));

  const auto typo = write_cfg("typo.cfg", "gama1 = 1e-3\n");
  r = run("validate --config " + typo.string());
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("did you mean 'gamma1'"));

  CHECK(run("frobnicate").code == 2);
  CHECK(run("protocol").code == 2);
  CHECK(run("validate --config " + typo.string() + " --scale lunar").code == 2);
}

TEST_CASE("divergent integration exits with code 3", "[cli]") {
  const auto cfg = write_cfg("diverge.cfg", "gamma = 1e-3\nbeta_nl = 1e3\nrecord = 1\ntransient = 0\n");
  const Result r = run("simulate --config " + cfg.string() + " --out " + (workdir() / "diverge").string());
  CHECK(r.code == 3);
}

TEST_CASE("null nonlinearity protocol gives a slope consistent with zero", "[cli]") {
  const auto cfg = write_cfg("null.cfg", std::string(kSmallProtocol) + "beta_nl = 0\n");
  const fs::path a = workdir() / "null_a", b = workdir() / "null_b";
  const Result r = run("scenario --config " + cfg.string() + " --seed 11 --out " + a.string());
  REQUIRE(r.code == 0);
  const auto fit = read_csv(a / "fit.csv");
  REQUIRE(fit.size() == 1);
  const double beta = fit[0][2], lo = fit[0][4], hi = fit[0][5];
  CHECK(std::abs(beta) < 2.0 * 0.5 * (hi - lo));

  // same configuration and seed: identical outputs apart from the timestamp line
  REQUIRE(run("scenario --config " + cfg.string() + " --seed 11 --workers 2 --out " + b.string()).code == 0);
  CHECK(slurp(a / "scatter.csv") == slurp(b / "scatter.csv"));
  CHECK(slurp(a / "fit.csv") == slurp(b / "fit.csv"));
  std::string ma = without_timestamp(slurp(a / "manifest.txt")), mb = without_timestamp(slurp(b / "manifest.txt"));
  // the worker count is recorded but does not change results
  ma.replace(ma.find("workers = 1"), 11, "workers = 2");
  CHECK(ma == mb);
  CHECK_THAT(ma, ContainsSubstring("inputs_hash = "));
  CHECK_THAT(ma, ContainsSubstring("status = ok"));
}

TEST_CASE("every CSV carries a header row", "[cli]") {
  for (const auto& e : fs::directory_iterator(workdir() / "null_a")) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path());
    std::string first, second;
    std::getline(in, first);
    std::getline(in, second);
    INFO(e.path());
    CHECK(first.rfind("# ", 0) == 0);
    CHECK(second.find(',') != std::string::npos);
    CHECK(std::isalpha(static_cast<unsigned char>(second[0])));
  }
}

TEST_CASE("simulate then analyze; output directory from the environment", "[cli]") {
  const auto cfg = write_cfg("sim.cfg", "gamma = 1e-3\ndelta2 = 0.95\npower_h = 1e-5\nrecord = 10\ntransient = 2\n");
  const fs::path envdir = workdir() / "from_env";
  Result r = run("simulate --config " + cfg.string() + " --csv", "DARKGUP_OUT=\"" + envdir.string() + "\"");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(envdir / "trajectory.omg"));
  CHECK(fs::exists(envdir / "slow_amplitudes.csv"));
  CHECK(fs::exists(envdir / "manifest.txt"));
  r = run("analyze --input " + (envdir / "trajectory.omg").string() + " --out " + (workdir() / "ana").string());
  REQUIRE(r.code == 0);
  const auto rows = read_csv(workdir() / "ana" / "analysis.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][0] > 0.0);
  CHECK(std::abs(rows[0][1] - 1.0) < 0.05);
  CHECK(fs::exists(workdir() / "ana" / "spectrum.csv"));
}

TEST_CASE("desk mismatch scenario shows coherent and noise peaks", "[cli]") {
  const fs::path out = workdir() / "fig5";
  const Result r = run("scenario fig5_mismatch --scale desk --out " + out.string());
  REQUIRE(r.code == 0);
  const auto s = read_csv(out / "fig5_summary.csv");
  REQUIRE(s.size() == 1);
  const double coherent_h = s[0][8], noise_h = s[0][11], valley = s[0][12];
  CHECK(coherent_h > noise_h);
  CHECK(valley < 0.1 * noise_h);
  CHECK(read_csv(out / "fig5_spectrum.csv").size() > 100);
}

TEST_CASE("desk amplitude scenario writes the time series and drive sweep", "[cli]") {
  const fs::path out = workdir() / "fig2";
  const Result r = run("scenario fig2_amplitude --scale desk --out " + out.string());
  REQUIRE(r.code == 0);
  const auto sweep = read_csv(out / "fig2_sweep.csv");
  REQUIRE(sweep.size() == 10);
  for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i][2] > sweep[i - 1][2]);
  CHECK(read_csv(out / "fig2_timeseries.csv").size() > 1000);
}
