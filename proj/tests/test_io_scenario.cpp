#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "doctest.h"

#include "qam/io.hpp"
#include "qam/parallel.hpp"
#include "qam/scenario.hpp"

using namespace qam;
namespace fs = std::filesystem;

namespace {

const char* kSmallCoherent = R"(
[scenario]
kind = coherent_oscillator
name = small
seed = 9
analyses = trajectories, density, autocorrelation, psd, fpt, energy, action

[physics]
n_mean = 3

[sde]
dt_sde = 0.002
n_paths = 300
t_end = 4
record_every = 5

[analysis]
max_lag = 1
segment_length = 64
overlap = 32

[gates]
ks_max = 0.2
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qam_test_" + name);
  fs::remove_all(p);
  return p;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

bool mentions(const ConfigError& e, const std::string& needle) {
  return std::any_of(e.problems().begin(), e.problems().end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal coherent config fills defaults") {
  const ScenarioConfig c = parse_config("[scenario]\nkind = coherent_oscillator\n");
  CHECK(c.kind == ScenarioKind::coherent_oscillator);
  CHECK(c.params.hbar == 1.0);
  CHECK(c.params.mass == 1.0);
  CHECK(c.omega == 1.0);
  REQUIRE(c.n_mean.size() == 1);
  CHECK(c.n_mean[0] == 0.0);
  CHECK(c.analyses.empty());
}

TEST_CASE("negative mean quantum number is rejected") {
  try {
    parse_config("[scenario]\nkind = coherent_oscillator\n[physics]\nn_mean = -1\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "n_mean must be >= 0"));
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("unknown key is named in the error") {
  try {
    parse_config("[scenario]\nkind = coherent_oscillator\n[physics]\nomega_typo = 2\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "omega_typo"));
  }
}

TEST_CASE("every problem is reported, not only the first") {
  try {
    parse_config("[scenario]\nkind = coherent_oscillator\n[physics]\nmass = 0\nn_mean = -2\nbogus = 1\n"
                 "[sde]\nn_paths = many\n[nowhere]\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() >= 5);
    CHECK(mentions(e, "mass"));
    CHECK(mentions(e, "n_mean"));
    CHECK(mentions(e, "bogus"));
    CHECK(mentions(e, "n_paths"));
    CHECK(mentions(e, "nowhere"));
  }
}

TEST_CASE("missing scenario section and type mismatch") {
  CHECK_THROWS_AS(parse_config("[physics]\nmass = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scenario]\nkind = coherent_oscillator\nseed = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scenario]\nkind = coherent_oscillator\nanalyses = density, spectra\n"), ConfigError);
}

TEST_CASE("any single-character typo in a key fails parsing") {
  const std::map<std::string, std::vector<std::string>> keys = {
      {"scenario", {"name", "seed", "analyses", "output_dir"}},
      {"physics", {"hbar", "mass", "omega", "n_mean"}},
      {"grid", {"x_min", "x_max", "n_points", "dt_pde"}},
      {"potential", {"type", "omega", "quartic", "quadratic", "height", "width", "center"}},
      {"sde", {"dt_sde", "n_paths", "t_start", "t_end", "record_every", "boundary", "backward"}},
      {"packet", {"position", "sigma", "momentum", "store_every"}},
      {"analysis", {"density_bins", "sample_paths", "max_lag", "segment_length", "overlap", "fields_stride", "region",
                    "region_lo", "region_hi", "senses"}},
      {"stationary", {"e_lo", "e_hi", "verify_paths", "verify_horizon"}},
      {"gates", {"ks_max", "residual_max"}},
  };
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_";
  std::size_t variants = 0;
  for (const auto& [section, names] : keys) {
    for (const auto& key : names) {
      for (std::size_t i = 0; i < key.size(); ++i) {
        for (char ch : alphabet) {
          if (ch == key[i]) continue;
          std::string typo = key;
          typo[i] = ch;
          const std::string text = "[scenario]\nkind = barrier_tunneling\n[" + section + "]\n" + typo + " = 1\n";
          bool failed = false;
          try {
            parse_config(text);
          } catch (const ConfigError& e) {
            failed = mentions(e, "unknown key '" + typo + "'");
          }
          if (!failed) FAIL_CHECK("typo accepted: [" << section << "] " << typo);
          ++variants;
        }
      }
    }
  }
  CHECK(variants > 1000);
}

TEST_CASE("binary ensemble round trip") {
  TrajectoryEnsemble e;
  e.n_paths = 3;
  e.times = {0.0, 0.5, 1.0, 1.5};
  e.positions = {0.1, -0.2, 0.3, 1e-300, -7.25, 3.0, 2.0, 1.0, 0.0, 0.5, std::nextafter(1.0, 2.0), -0.0};
  e.absorbed_at = {-1, 2, -1};
  e.seed = 0xDEADBEEFCAFEull;
  e.direction = Direction::backward;
  e.stationary = true;
  e.dt_sde = 1e-3;
  const std::string bytes = io::ensemble_binary(e);
  CHECK(bytes.substr(0, 8) == "QAMTRAJ1");
  const TrajectoryEnsemble r = io::read_ensemble_binary(bytes);
  CHECK(r.n_paths == e.n_paths);
  CHECK(r.times == e.times);
  CHECK(r.positions == e.positions);
  CHECK(std::signbit(r.positions.back()));
  CHECK(r.absorbed_at == e.absorbed_at);
  CHECK(r.seed == e.seed);
  CHECK(r.direction == Direction::backward);
  CHECK(r.stationary);
  CHECK(r.dt_sde == e.dt_sde);
  CHECK(io::ensemble_binary(r) == bytes);
  CHECK_THROWS_AS(io::read_ensemble_binary(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(io::read_ensemble_binary("NOTATRAJ"), Error);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, -2.5e-17, 1.0 / 3.0, 6.02214076e23, 0.0}) {
    CHECK(std::stod(io::format_number(v)) == v);
  }
}

TEST_CASE("empty analysis list emits only the manifest") {
  ScenarioConfig c = parse_config(kSmallCoherent);
  c.analyses.clear();
  const RunResult r = run_scenario(c);
  CHECK(r.artifacts.empty());
  const fs::path dir = scratch("empty");
  emit_outputs(r, make_manifest(c, r, 0.0, 1), dir);
  CHECK(listing(dir) == std::set<std::string>{"manifest.json"});
  fs::remove_all(dir);
}

TEST_CASE("density and psd emit exactly those files plus the manifest") {
  ScenarioConfig c = parse_config(kSmallCoherent);
  c.analyses = {"density", "psd"};
  const RunResult r = run_scenario(c);
  const fs::path dir = scratch("density_psd");
  emit_outputs(r, make_manifest(c, r, 0.0, 1), dir);
  CHECK(listing(dir) == std::set<std::string>{"manifest.json", "small_density.csv", "small_density.svg",
                                              "small_psd.csv", "small_psd.svg"});
  fs::remove_all(dir);
}

TEST_CASE("unwritable output leaves no partial files") {
  ScenarioConfig c = parse_config(kSmallCoherent);
  c.analyses = {"density", "psd"};
  const RunResult r = run_scenario(c);
  const RunManifest m = make_manifest(c, r, 0.0, 1);

  SUBCASE("directory cannot be created") {
    const fs::path base = scratch("blocked");
    fs::create_directories(base);
    io::write_file_atomic(base / "file", "x");
    try {
      emit_outputs(r, m, base / "file" / "out");
      FAIL("expected an io error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
    CHECK(listing(base) == std::set<std::string>{"file"});
    fs::remove_all(base);
  }
  SUBCASE("failure after some files were written") {
    const fs::path dir = scratch("partial");
    fs::create_directories(dir / "manifest.json" / "occupied");
    try {
      emit_outputs(r, m, dir);
      FAIL("expected an io error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
    CHECK(listing(dir) == std::set<std::string>{"manifest.json"});
    CHECK(fs::is_directory(dir / "manifest.json"));
    fs::remove_all(dir);
  }
}

TEST_CASE("runs are byte-identical across repeats and thread counts") {
  const ScenarioConfig c = parse_config(kSmallCoherent);
  set_threads(1);
  const RunResult a = run_scenario(c);
  set_threads(4);
  const RunResult b = run_scenario(c);
  const RunResult again = run_scenario(c);
  set_threads(1);
  REQUIRE(a.artifacts.size() == b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
    CHECK(a.artifacts[i].file == b.artifacts[i].file);
    CHECK(a.artifacts[i].content == b.artifacts[i].content);
    CHECK(again.artifacts[i].content == b.artifacts[i].content);
  }
  CHECK(a.field_checksum == b.field_checksum);
  CHECK(a.passed());
}

TEST_CASE("manifest round trip through JSON") {
  const ScenarioConfig c = parse_config(kSmallCoherent);
  RunResult r;
  r.artifacts = {{"a.csv", "x,y\n1,2\n"}, {"b.csv", "z\n"}};
  r.gates = {{"g", 0.01, 0.03, true}};
  r.field_checksum = "0123456789abcdef";
  const RunManifest m = make_manifest(c, r, 1.25, 3);
  const RunManifest back = RunManifest::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  CHECK(back.config == c.source);
  CHECK(back.seed == 9);
  REQUIRE(back.outputs.size() == 2);
  CHECK(back.outputs[0].checksum == io::hex64(io::fnv1a64("x,y\n1,2\n")));
  CHECK(back.outputs[1].bytes == 2);
  CHECK(back.gates[0].passed);
}

TEST_CASE("stationary scenario passes its gates") {
  const ScenarioConfig c = parse_config(R"(
[scenario]
kind = stationary_ground
name = ho
analyses = stationary, density
[sde]
n_paths = 500
t_end = 2
[stationary]
e_lo = 0.1
e_hi = 1.2
verify_paths = 2000
verify_horizon = 2
[gates]
ks_max = 0.05
)");
  const RunResult r = run_scenario(c);
  for (const auto& g : r.gates) CHECK_MESSAGE(g.passed, g.name << " = " << g.value);
  const auto it = std::find_if(r.artifacts.begin(), r.artifacts.end(),
                               [](const Artifact& a) { return a.file == "ho_stationary.json"; });
  REQUIRE(it != r.artifacts.end());
  CHECK(it->content.find("\"E\"") != std::string::npos);
}
