#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <catch_amalgamated.hpp>

#include "darkgup/config.hpp"
#include "darkgup/errors.hpp"

using namespace darkgup;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

ScenarioConfig resolve(const std::string& text, const std::string& scale = "") {
  return resolve_config(parse_config_text(text, "test.cfg"), scale);
}

bool has_note(const ScenarioConfig& c, const std::string& s) {
  for (const auto& n : c.notes)
    if (n.find(s) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("parser skips comments and reports line numbers", "[config]") {
  const auto e = parse_config_text("# header\n\nkappa = 4.0  # inline\n  g1=2e-6\n", "x.cfg");
  REQUIRE(e.size() == 2);
  CHECK(e[0].key == "kappa");
  CHECK(e[0].value == "4.0");
  CHECK(e[0].line == 3);
  CHECK(e[1].key == "g1");
  CHECK(e[1].line == 4);
  CHECK_THROWS_WITH(parse_config_text("a = 1\nb = 2\nnot a pair\n", "x.cfg"), ContainsSubstring("x.cfg:3"));
  CHECK_THROWS_WITH(parse_config_text("a =\n", "x.cfg"), ContainsSubstring("x.cfg:1"));
}

TEST_CASE("empty configurations are parse errors", "[config]") {
  CHECK_THROWS_AS(parse_config_text(""), ConfigError);
  CHECK_THROWS_AS(parse_config_text("# only a comment\n\n"), ConfigError);
}

TEST_CASE("unknown keys suggest the closest name", "[config]") {
  CHECK(suggest_key("gama1") == "gamma1");
  CHECK(suggest_key("kapa") == "kappa");
  CHECK(suggest_key("completely_unrelated_key") == "");
  try {
    resolve("gama1 = 1e-3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK_THAT(msg, ContainsSubstring("'gamma1'"));
    CHECK_THAT(msg, ContainsSubstring("test.cfg:1"));
    CHECK_THAT(msg, ContainsSubstring("kappa_in"));
  }
}

TEST_CASE("edit distance", "[config]") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("gamma", "gamma") == 0);
}

TEST_CASE("full-scale configuration echoes the dimensionless parameters", "[config]") {
  const ScenarioConfig c = resolve("scenario = fig2_amplitude\nscale = paper\n");
  const std::string echo = echo_config(c);
  CHECK_THAT(echo, ContainsSubstring("kappa = 4.1905"));
  CHECK_THAT(echo, ContainsSubstring("g1 = 1.9048e-06"));
  CHECK_THAT(echo, ContainsSubstring("delta1 = 1.2857"));
  CHECK_THAT(c.params.gamma1, WithinRel(1e-7, 1e-12));
  // E(100 uW) and E(0.036 uW) in units of the mechanical frequency
  CHECK_THAT(c.params.drive_c, WithinRel(86046601585.659 / (2.0 * M_PI * 525e3), 1e-9));
  CHECK_THAT(c.params.drive_h, WithinRel(86046601585.659 / (2.0 * M_PI * 525e3) * std::sqrt(0.036 / 100.0), 1e-9));
}

TEST_CASE("dimensionless keys win over SI keys", "[config]") {
  const ScenarioConfig c = resolve("kappa_si = 2.2e6\nkappa = 4\n");
  CHECK(c.params.kappa == 4.0);
  CHECK(has_note(c, "'kappa' overrides 'kappa_si'"));
}

TEST_CASE("user SI keys replace preset dimensionless values", "[config]") {
  const ScenarioConfig base = resolve("scenario = fig3_spectrum\n");
  CHECK_THAT(base.params.gamma1, WithinRel(1e-4, 1e-12));
  const ScenarioConfig c = resolve("scenario = fig3_spectrum\ngamma_si = 525\n");
  CHECK_THAT(c.params.gamma1, WithinRel(1e-3, 1e-12));
  CHECK_FALSE(has_note(c, "overrides"));
}

TEST_CASE("temperature and mismatch conversions", "[config]") {
  const ScenarioConfig c = resolve("temperature = 1e-3\ndelta_si = 1\n");
  CHECK_THAT(c.params.nbar1, WithinRel(39.190898001093615, 1e-9));
  CHECK_THAT(c.params.omega_b2 - c.params.omega_b1, WithinRel(2.0 / 525e3, 1e-9));
}

TEST_CASE("drive grids convert to powers", "[config]") {
  const ScenarioConfig c = resolve("drive_grid = 1000, 2000\n");
  REQUIRE(c.protocol.powers.size() == 2);
  CHECK_THAT(c.protocol.drive_scale * std::sqrt(c.protocol.powers[1]), WithinRel(2000.0, 1e-12));
}

TEST_CASE("invalid values carry the location", "[config]") {
  CHECK_THROWS_WITH(resolve("kappa = abc\n"), ContainsSubstring("test.cfg:1"));
  CHECK_THROWS_WITH(resolve("a = 1\nnoise = maybe\n"), ContainsSubstring("unknown key 'a'"));
  CHECK_THROWS_WITH(resolve("noise = maybe\n"), ContainsSubstring("test.cfg:1"));
  CHECK_THROWS_AS(resolve("scenario = fig9\n"), ConfigError);
  CHECK_THROWS_AS(resolve("scale = galactic\n"), ConfigError);
  CHECK_THROWS_AS(resolve("gamma = -1\n"), ConfigError);
}

TEST_CASE("scale override selects the preset", "[config]") {
  const ScenarioConfig desk = resolve("scenario = fig4_resolution\nscale = paper\n", "desk");
  CHECK(desk.scale == Scale::desk);
  CHECK_THAT(desk.params.gamma1, WithinRel(1e-3, 1e-12));
  CHECK(desk.records.size() == 2);
}

TEST_CASE("every preset resolves and matches its file", "[config]") {
  for (auto sc : {ScenarioKind::fig2_amplitude, ScenarioKind::fig3_spectrum, ScenarioKind::fig4_resolution,
                  ScenarioKind::fig5_mismatch, ScenarioKind::fig6_peak_vs_beta, ScenarioKind::custom})
    for (auto scale : {Scale::paper, Scale::desk}) {
      const std::string name = preset_name(sc, scale);
      INFO(name);
      std::ifstream in(std::filesystem::path(DARKGUP_SOURCE_DIR) / "presets" / (name + ".cfg"));
      REQUIRE(in);
      std::stringstream ss;
      ss << in.rdbuf();
      CHECK(ss.str() == preset_text(sc, scale));
      const ScenarioConfig c = resolve_config(parse_config_text(ss.str(), name));
      CHECK(c.scenario == sc);
      CHECK(c.scale == scale);
    }
}

TEST_CASE("FNV-1a reference vectors", "[config]") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
