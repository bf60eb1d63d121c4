#include "qam/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"

#include "qam/coherent.hpp"
#include "qam/io.hpp"
#include "qam/madelung.hpp"
#include "qam/stationary.hpp"
#include "qam/variational.hpp"
#include "qam/velocity.hpp"
#include "qam/wavefield.hpp"

namespace qam {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::coherent_oscillator: return "coherent_oscillator";
    case ScenarioKind::stationary_ground: return "stationary_ground";
    case ScenarioKind::barrier_tunneling: return "barrier_tunneling";
    case ScenarioKind::custom_potential: return "custom_potential";
  }
  return "coherent_oscillator";
}

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(ErrorKind::config, join(problems, "; ")), problems_(std::move(problems)) {}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct BadValue {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto c = s.find(',');
    const auto item = trim(s.substr(0, c));
    if (!item.empty()) out.push_back(item);
    if (c == std::string_view::npos) break;
    s.remove_prefix(c + 1);
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw BadValue{"expected a number, got '" + std::string(s) + "'"};
  }
  return v;
}

std::uint64_t to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(s) + "'"};
  }
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw BadValue{"expected true or false, got '" + std::string(s) + "'"};
}

const std::set<std::string, std::less<>> kAnalyses = {"fields", "residuals", "trajectories", "density", "autocorrelation",
                                                      "psd",    "fpt",       "energy",       "action",  "stationary"};

// Raw values gathered before building the config; grid, potential and region need
// several keys at once.
struct Raw {
  std::map<std::string, std::map<std::string, std::string>> sections;

  const std::string* get(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  bool has_section(const std::string& section) const { return sections.count(section) != 0; }
};

const std::map<std::string, std::set<std::string>> kSchema = {
    {"scenario", {"kind", "name", "seed", "analyses", "output_dir"}},
    {"physics", {"hbar", "mass", "omega", "n_mean"}},
    {"grid", {"x_min", "x_max", "n_points", "dt_pde"}},
    {"potential", {"type", "omega", "quartic", "quadratic", "height", "width", "center"}},
    {"sde", {"dt_sde", "n_paths", "t_start", "t_end", "record_every", "boundary", "backward"}},
    {"packet", {"position", "sigma", "momentum", "store_every"}},
    {"analysis",
     {"density_bins", "sample_paths", "max_lag", "segment_length", "overlap", "fields_stride", "region",
      "region_lo", "region_hi", "senses"}},
    {"stationary", {"e_lo", "e_hi", "verify_paths", "verify_horizon"}},
    {"gates", {"ks_max", "residual_max"}},
};

Raw read_sections(std::string_view text, std::vector<std::string>& errors) {
  Raw raw;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line_buf;
  while (std::getline(in, line_buf)) {
    ++line_no;
    std::string_view line = trim(line_buf);
    const auto hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(where + "malformed section header");
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!kSchema.count(section)) errors.push_back(where + "unknown section [" + section + "]");
      if (raw.has_section(section)) errors.push_back(where + "duplicate section [" + section + "]");
      raw.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) {
      errors.push_back(where + "key '" + key + "' outside any section");
      continue;
    }
    auto schema = kSchema.find(section);
    if (schema == kSchema.end()) continue;  // already reported
    if (!schema->second.count(key)) {
      errors.push_back(where + "unknown key '" + key + "' in [" + section + "]");
      continue;
    }
    if (value.empty()) {
      errors.push_back(where + "empty value for '" + key + "'");
      continue;
    }
    auto& slot = raw.sections[section];
    if (slot.count(key)) errors.push_back(where + "duplicate key '" + key + "'");
    slot[key] = value;
  }
  return raw;
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  std::vector<std::string> errors;
  const Raw raw = read_sections(text, errors);
  ScenarioConfig cfg;
  cfg.source = std::string(text);

  auto field = [&](const std::string& section, const std::string& key, auto&& apply) {
    const std::string* v = raw.get(section, key);
    if (!v) return false;
    try {
      apply(std::string_view(*v));
    } catch (const BadValue& e) {
      errors.push_back(section + "." + key + ": " + e.message);
    } catch (const Error& e) {
      errors.push_back(section + "." + key + ": " + e.what());
    }
    return true;
  };
  auto num = [&](const std::string& section, const std::string& key, double& out) {
    return field(section, key, [&](std::string_view s) { out = to_double(s); });
  };
  auto count = [&](const std::string& section, const std::string& key, std::size_t& out) {
    return field(section, key, [&](std::string_view s) { out = to_uint(s); });
  };

  if (!raw.has_section("scenario")) errors.push_back("missing section [scenario]");
  if (!raw.get("scenario", "kind")) {
    errors.push_back("scenario.kind is required");
  }
  field("scenario", "kind", [&](std::string_view s) {
    if (s == "coherent_oscillator") cfg.kind = ScenarioKind::coherent_oscillator;
    else if (s == "stationary_ground") cfg.kind = ScenarioKind::stationary_ground;
    else if (s == "barrier_tunneling") cfg.kind = ScenarioKind::barrier_tunneling;
    else if (s == "custom_potential") cfg.kind = ScenarioKind::custom_potential;
    else throw BadValue{"unknown scenario kind '" + std::string(s) + "'"};
  });
  field("scenario", "name", [&](std::string_view s) {
    if (s.find_first_of("/\\ ") != std::string_view::npos) throw BadValue{"name must not contain spaces or slashes"};
    cfg.name = std::string(s);
  });
  field("scenario", "seed", [&](std::string_view s) { cfg.seed = to_uint(s); });
  field("scenario", "output_dir", [&](std::string_view s) { cfg.output_dir = std::string(s); });
  field("scenario", "analyses", [&](std::string_view s) {
    for (auto item : split_list(s)) {
      if (item == "none") continue;
      if (!kAnalyses.count(item)) throw BadValue{"unknown analysis '" + std::string(item) + "'"};
      if (std::find(cfg.analyses.begin(), cfg.analyses.end(), item) == cfg.analyses.end()) {
        cfg.analyses.emplace_back(item);
      }
    }
  });

  // physics
  num("physics", "hbar", cfg.params.hbar);
  num("physics", "mass", cfg.params.mass);
  num("physics", "omega", cfg.omega);
  field("physics", "n_mean", [&](std::string_view s) {
    cfg.n_mean.clear();
    for (auto item : split_list(s)) cfg.n_mean.push_back(to_double(item));
    if (cfg.n_mean.empty()) throw BadValue{"n_mean list is empty"};
  });
  if (!(cfg.params.hbar > 0.0)) errors.push_back("hbar must be > 0");
  if (!(cfg.params.mass > 0.0)) errors.push_back("mass must be > 0");
  if (!(cfg.omega > 0.0)) errors.push_back("omega must be > 0");
  for (double n : cfg.n_mean) {
    if (n < 0.0) errors.push_back("n_mean must be >= 0");
  }

  // grid
  double x_min = cfg.grid.x_min, x_max = cfg.grid.x_max, dt_pde = cfg.grid.dt_pde;
  std::size_t n_points = cfg.grid.n_points;
  const bool g1 = num("grid", "x_min", x_min), g2 = num("grid", "x_max", x_max);
  const bool g3 = count("grid", "n_points", n_points), g4 = num("grid", "dt_pde", dt_pde);
  if (g1 || g2 || g3 || g4) {
    try {
      cfg.grid = build_grid(x_min, x_max, n_points, dt_pde);
    } catch (const Error& e) {
      errors.push_back(std::string("grid: ") + e.what());
    }
  }

  // potential
  const bool needs_potential = cfg.kind == ScenarioKind::custom_potential;
  if (raw.has_section("potential")) {
    cfg.potential_given = true;
    std::string type = "harmonic";
    field("potential", "type", [&](std::string_view s) { type = std::string(s); });
    double omega = cfg.omega, a = 0.25, b = 0.0, height = 1.0, width = 1.0, center = 0.0;
    num("potential", "omega", omega);
    num("potential", "quartic", a);
    num("potential", "quadratic", b);
    num("potential", "height", height);
    num("potential", "width", width);
    num("potential", "center", center);
    if (type == "harmonic") {
      if (!(omega > 0.0)) errors.push_back("potential.omega must be > 0");
      cfg.potential = Potential::harmonic(omega, cfg.params.mass);
    } else if (type == "double_well") {
      if (!(a > 0.0)) errors.push_back("potential.quartic must be > 0");
      cfg.potential = Potential::double_well(a, b);
    } else if (type == "barrier") {
      if (!(width > 0.0)) errors.push_back("potential.width must be > 0");
      cfg.potential = Potential::barrier(height, width, center);
    } else if (type == "free") {
      cfg.potential = Potential::free();
    } else {
      errors.push_back("potential.type: unknown potential '" + type + "'");
    }
  } else if (needs_potential) {
    errors.push_back("missing section [potential] (required by custom_potential)");
  } else if (cfg.kind == ScenarioKind::barrier_tunneling) {
    cfg.potential = Potential::barrier(1.0, 1.0, 0.0);
  } else {
    cfg.potential = Potential::harmonic(cfg.omega, cfg.params.mass);
  }

  // sde
  num("sde", "dt_sde", cfg.dt_sde);
  count("sde", "n_paths", cfg.n_paths);
  num("sde", "t_start", cfg.t_start);
  num("sde", "t_end", cfg.t_end);
  count("sde", "record_every", cfg.record_every);
  if (cfg.kind == ScenarioKind::barrier_tunneling) cfg.boundary = BoundaryPolicy::absorb;
  field("sde", "boundary", [&](std::string_view s) {
    if (s == "reflect") cfg.boundary = BoundaryPolicy::reflect;
    else if (s == "absorb") cfg.boundary = BoundaryPolicy::absorb;
    else throw BadValue{"boundary must be reflect or absorb"};
  });
  field("sde", "backward", [&](std::string_view s) { cfg.backward = to_bool(s); });
  {
    SdeConfig probe;
    probe.dt_sde = cfg.dt_sde;
    probe.n_paths = cfg.n_paths;
    probe.t_start = cfg.t_start;
    probe.t_end = cfg.t_end;
    probe.record_every = cfg.record_every;
    try {
      validate(probe);
    } catch (const Error& e) {
      errors.push_back(std::string("sde: ") + e.what());
    }
  }

  // packet
  const bool time_dependent =
      cfg.kind == ScenarioKind::barrier_tunneling || cfg.kind == ScenarioKind::custom_potential;
  if (raw.has_section("packet") && !time_dependent) {
    errors.push_back("section [packet] only applies to barrier_tunneling and custom_potential");
  }
  num("packet", "position", cfg.packet_x0);
  num("packet", "sigma", cfg.packet_sigma);
  num("packet", "momentum", cfg.packet_k0);
  count("packet", "store_every", cfg.store_every);
  if (!(cfg.packet_sigma > 0.0)) errors.push_back("packet.sigma must be > 0");
  if (cfg.store_every < 1) errors.push_back("packet.store_every must be >= 1");

  // analysis
  count("analysis", "density_bins", cfg.density_bins);
  count("analysis", "sample_paths", cfg.sample_paths);
  num("analysis", "max_lag", cfg.max_lag);
  count("analysis", "segment_length", cfg.segment_length);
  count("analysis", "overlap", cfg.overlap);
  count("analysis", "fields_stride", cfg.fields_stride);
  if (cfg.density_bins < 1) errors.push_back("analysis.density_bins must be >= 1");
  if (cfg.fields_stride < 1) errors.push_back("analysis.fields_stride must be >= 1");
  std::string region_kind = "above";
  double lo = NAN, hi = NAN;
  const bool r0 = field("analysis", "region", [&](std::string_view s) {
    if (s != "interval" && s != "above" && s != "below") throw BadValue{"region must be interval, above or below"};
    region_kind = std::string(s);
  });
  const bool r1 = num("analysis", "region_lo", lo), r2 = num("analysis", "region_hi", hi);
  if (r0 || r1 || r2) {
    cfg.region_given = true;
    if (region_kind == "interval") {
      if (!r1 || !r2) errors.push_back("interval region needs region_lo and region_hi");
      else if (!(hi >= lo)) errors.push_back("analysis.region: inverted bounds");
      cfg.region = Region::interval(lo, hi);
    } else if (region_kind == "above") {
      if (!r1) errors.push_back("region 'above' needs region_lo");
      cfg.region = Region::above(lo);
    } else {
      if (!r2) errors.push_back("region 'below' needs region_hi");
      cfg.region = Region::below(hi);
    }
  } else if (cfg.kind == ScenarioKind::barrier_tunneling && std::holds_alternative<Barrier>(cfg.potential.shape())) {
    const auto& b = std::get<Barrier>(cfg.potential.shape());
    cfg.region = Region::interval(b.center - b.width, b.center + b.width);
    cfg.senses = {PassageSense::enter, PassageSense::exit, PassageSense::traverse};
  } else {
    const double x_zpf = std::sqrt(cfg.params.hbar / (2.0 * cfg.params.mass * cfg.omega));
    cfg.region = Region::above(x_zpf);
  }
  field("analysis", "senses", [&](std::string_view s) {
    cfg.senses.clear();
    for (auto item : split_list(s)) {
      if (item == "enter") cfg.senses.push_back(PassageSense::enter);
      else if (item == "exit") cfg.senses.push_back(PassageSense::exit);
      else if (item == "traverse") cfg.senses.push_back(PassageSense::traverse);
      else throw BadValue{"unknown passage sense '" + std::string(item) + "'"};
    }
  });

  // stationary
  num("stationary", "e_lo", cfg.e_lo);
  num("stationary", "e_hi", cfg.e_hi);
  count("stationary", "verify_paths", cfg.verify_paths);
  num("stationary", "verify_horizon", cfg.verify_horizon);
  if (!(cfg.e_hi > cfg.e_lo)) errors.push_back("stationary: inverted bounds (e_hi must exceed e_lo)");
  if (cfg.verify_paths < 100) errors.push_back("stationary.verify_paths must be >= 100");

  // gates
  num("gates", "ks_max", cfg.ks_max);
  num("gates", "residual_max", cfg.residual_max);

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorKind::io, "cannot read config " + path.string());
  }
  return parse_config(text);
}

// ---------------------------------------------------------------------------
// Running

bool RunResult::passed() const {
  return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.passed; });
}

namespace {

bool wants(const ScenarioConfig& cfg, std::string_view analysis) {
  return std::find(cfg.analyses.begin(), cfg.analyses.end(), analysis) != cfg.analyses.end();
}

bool wants_ensemble(const ScenarioConfig& cfg) {
  for (const char* a : {"trajectories", "density", "autocorrelation", "psd", "fpt", "energy", "action"}) {
    if (wants(cfg, a)) return true;
  }
  return false;
}

SdeConfig sde_config(const ScenarioConfig& cfg, Direction direction, std::size_t n_paths, std::uint64_t seed) {
  SdeConfig s;
  s.dt_sde = cfg.dt_sde;
  s.n_paths = n_paths;
  s.seed = seed;
  s.direction = direction;
  s.boundary = cfg.boundary;
  s.t_start = cfg.t_start;
  s.t_end = cfg.t_end;
  s.record_every = cfg.record_every;
  return s;
}

GateResult below(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, value < threshold};
}

std::string field_checksum(const MadelungFields& f) {
  std::string bytes;
  for (const auto* arr : {&f.rho, &f.action, &f.drift, &f.osmotic}) {
    bytes.append(reinterpret_cast<const char*>(arr->data()), arr->size() * sizeof(double));
  }
  return io::hex64(io::fnv1a64(bytes));
}

std::string sense_name(PassageSense s) {
  switch (s) {
    case PassageSense::enter: return "enter";
    case PassageSense::exit: return "exit";
    case PassageSense::traverse: return "traverse";
  }
  return "enter";
}

std::vector<double> density_of(std::span<const Complex> psi) {
  std::vector<double> rho(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
  return rho;
}

/// Recorded index closest to t.
std::size_t nearest_index(const TrajectoryEnsemble& ens, double t) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < ens.n_times(); ++k) {
    if (std::abs(ens.times[k] - t) < std::abs(ens.times[best] - t)) best = k;
  }
  return best;
}

void add_field_analyses(RunResult& out, const ScenarioConfig& cfg, const std::string& prefix,
                        const TrajectoryEnsemble& ens, const VelocityField& field) {
  for (auto& a : analyze_ensemble(ens, cfg, prefix)) out.artifacts.push_back(std::move(a));
  const double horizon = cfg.t_end - cfg.t_start;
  if (wants(cfg, "energy")) {
    const EnergySeries e = estimate_mean_energy(ens, field, cfg.params, cfg.potential);
    out.artifacts.push_back({prefix + "_energy.csv", io::energy_csv(e)});
    out.artifacts.push_back({prefix + "_energy.svg", io::svg_plot(prefix + " mean energy", "t", "E",
                                                                 {{"E(t)", e.times, e.mean}})});
  }
  if (wants(cfg, "action")) {
    ActionFunctionalSpec spec;
    spec.horizon = horizon;
    const ActionEstimate a = estimate_action_functionals(ens, field, cfg.params, cfg.potential, spec);
    std::vector<io::ActionRow> rows = {
        {"J_R", a.j_r, a.n_paths, cfg.dt_sde, cfg.name},
        {"J_I", a.j_i, a.n_paths, cfg.dt_sde, cfg.name},
        {"J_complex_re", a.j_complex_re, a.n_paths, cfg.dt_sde, cfg.name},
        {"J_complex_im", a.j_complex_im, a.n_paths, cfg.dt_sde, cfg.name},
        {"J_R_per_time", {a.j_r.value / horizon, a.j_r.std_error / horizon}, a.n_paths, cfg.dt_sde, cfg.name},
    };
    out.artifacts.push_back({prefix + "_action.csv", io::action_csv(rows)});
  }
}

void run_coherent(const ScenarioConfig& cfg, RunResult& out) {
  std::string checksums;
  for (double n : cfg.n_mean) {
    CoherentStateSpec spec{cfg.omega, n, cfg.params};
    validate(spec);
    const std::string prefix = cfg.n_mean.size() > 1 ? cfg.name + "_n" + io::format_number(n) : cfg.name;
    const std::string tag = "n=" + io::format_number(n);

    const WaveField psi0 = single_slice(cfg.grid, cfg.t_start, coherent_wavefunction(spec, cfg.t_start, cfg.grid));
    const MadelungFields f0 = madelung_decompose(psi0, cfg.params, recommended_density_floor(psi0));
    checksums += field_checksum(f0);
    if (wants(cfg, "fields")) out.artifacts.push_back({prefix + "_fields.csv", io::fields_csv(f0, cfg.fields_stride)});

    const CoherentVelocityField field(spec, cfg.grid.x_min, cfg.grid.x_max);
    const std::vector<double> rho0 = density_of(psi0.slice(0));
    const TrajectoryEnsemble fwd = sample_forward(field, cfg.params, sde_config(cfg, Direction::forward, cfg.n_paths, cfg.seed),
                                                  cfg.grid, rho0);
    const PhaseSpacePoint end = classical_trajectory(spec, cfg.t_end);
    const double var = spec.x_zpf() * spec.x_zpf();
    const double ks = ks_distance(fwd.marginal(fwd.n_times() - 1),
                                  [&](double x) { return gaussian_cdf(x, end.x, var); });
    out.gates.push_back(below("born_rule_ks[" + tag + "]", ks, cfg.ks_max));

    if (cfg.backward) {
      const std::vector<double> rho_t = density_of(coherent_wavefunction(spec, cfg.t_end, cfg.grid));
      const TrajectoryEnsemble bwd = sample_backward(
          field, cfg.params, sde_config(cfg, Direction::backward, cfg.n_paths, cfg.seed), cfg.grid, rho_t);
      const std::size_t k = nearest_index(fwd, 0.5 * (cfg.t_start + cfg.t_end));
      out.gates.push_back(below("time_reversal_ks[" + tag + "]", ks_two_sample(fwd.marginal(k), bwd.marginal(k)), cfg.ks_max));
    }
    add_field_analyses(out, cfg, prefix, fwd, field);
  }
  out.field_checksum = io::hex64(io::fnv1a64(checksums));
}

void run_stationary(const ScenarioConfig& cfg, RunResult& out) {
  const StationarySolution sol = solve_stationary_ground(cfg.potential, cfg.params, cfg.e_lo, cfg.e_hi, cfg.grid);
  out.gates.push_back({"solver_converged", sol.converged ? 1.0 : 0.0, 1.0, sol.converged});
  out.gates.push_back(below("riccati_residual_sup", sol.residual_sup, cfg.residual_max));
  const bool single_well = std::holds_alternative<Harmonic>(cfg.potential.shape()) ||
                           (std::holds_alternative<DoubleWell>(cfg.potential.shape()) &&
                            std::get<DoubleWell>(cfg.potential.shape()).b <= 0.0);
  if (single_well) {
    const auto zeros = static_cast<double>(count_sign_changes(sol.u_profile));
    out.gates.push_back({"osmotic_zero_count", zeros, 1.0, zeros == 1.0});
  }
  const StationaryCheck check =
      verify_stationary_by_sampling(sol, cfg.params, cfg.verify_paths, cfg.verify_horizon, cfg.dt_sde, cfg.seed, cfg.ks_max);
  out.gates.push_back(below("stationary_sampling_ks", check.ks, cfg.ks_max));

  auto fields = std::make_shared<MadelungFields>(stationary_fields(sol, cfg.params));
  out.field_checksum = field_checksum(*fields);
  if (wants(cfg, "stationary")) {
    out.artifacts.push_back({cfg.name + "_stationary.csv", io::stationary_csv(sol)});
    out.artifacts.push_back({cfg.name + "_stationary.json", io::stationary_json(sol)});
    out.artifacts.push_back({cfg.name + "_stationary.svg",
                             io::svg_plot(cfg.name + " stationary state", "x", "u, rho",
                                          {{"u", sol.grid.nodes(), sol.u_profile}, {"rho", sol.grid.nodes(), sol.rho}})});
  }
  if (wants(cfg, "fields")) out.artifacts.push_back({cfg.name + "_fields.csv", io::fields_csv(*fields, cfg.fields_stride)});
  if (!wants_ensemble(cfg) && !cfg.backward) return;

  const GridVelocityField field(fields);
  const TrajectoryEnsemble fwd =
      sample_forward(field, cfg.params, sde_config(cfg, Direction::forward, cfg.n_paths, cfg.seed), cfg.grid, sol.rho);
  if (cfg.backward) {
    const TrajectoryEnsemble bwd =
        sample_backward(field, cfg.params, sde_config(cfg, Direction::backward, cfg.n_paths, cfg.seed), cfg.grid, sol.rho);
    const std::size_t k = nearest_index(fwd, 0.5 * (cfg.t_start + cfg.t_end));
    out.gates.push_back(below("time_reversal_ks", ks_two_sample(fwd.marginal(k), bwd.marginal(k)), cfg.ks_max));
  }
  add_field_analyses(out, cfg, cfg.name, fwd, field);
}

void run_time_dependent(const ScenarioConfig& cfg, RunResult& out) {
  const std::vector<Complex> psi0 = gaussian_packet(cfg.grid, cfg.packet_x0, cfg.packet_sigma, cfg.packet_k0);
  CrankNicolsonOptions opts;
  const double steps = (cfg.t_end - cfg.t_start) / cfg.grid.dt_pde;
  opts.n_steps = static_cast<std::size_t>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(opts.n_steps)) > 1e-9 * steps) {
    throw ConfigError({"sde: horizon must be an integer number of dt_pde steps"});
  }
  opts.store_every = cfg.store_every;
  const WaveField wave = propagate_crank_nicolson(psi0, cfg.t_start, cfg.potential, cfg.params, cfg.grid, opts);
  double norm_dev = 0.0;
  for (std::size_t k = 0; k < wave.n_times(); ++k) norm_dev = std::max(norm_dev, std::abs(wave.norm(k) - 1.0));
  out.gates.push_back({"norm_deviation", norm_dev, 1e-8, norm_dev <= 1e-8});

  auto fields = std::make_shared<MadelungFields>(madelung_decompose(wave, cfg.params, recommended_density_floor(wave)));
  out.field_checksum = field_checksum(*fields);
  if (wants(cfg, "fields")) out.artifacts.push_back({cfg.name + "_fields.csv", io::fields_csv(*fields, cfg.fields_stride)});
  if (wants(cfg, "residuals")) {
    const ResidualReport r = madelung_residuals(*fields, cfg.potential);
    std::string csv = "residual,sup,l2,points_used\n";
    csv += "continuity," + io::format_number(r.continuity_sup) + "," + io::format_number(r.continuity_l2) + "," +
           std::to_string(r.points_used) + "\n";
    csv += "qhj," + io::format_number(r.qhj_sup) + "," + io::format_number(r.qhj_l2) + "," +
           std::to_string(r.points_used) + "\n";
    out.artifacts.push_back({cfg.name + "_residuals.csv", csv});
  }

  const GridVelocityField field(fields);
  const std::size_t last = fields->n_times() - 1;
  const std::vector<double> rho0(fields->rho.begin(), fields->rho.begin() + static_cast<std::ptrdiff_t>(cfg.grid.n_points));
  const std::vector<double> rho_t(fields->rho.begin() + static_cast<std::ptrdiff_t>(last * cfg.grid.n_points),
                                  fields->rho.end());
  const TrajectoryEnsemble fwd =
      sample_forward(field, cfg.params, sde_config(cfg, Direction::forward, cfg.n_paths, cfg.seed), cfg.grid, rho0);
  const GridCdf cdf_t(cfg.grid, rho_t);
  out.gates.push_back(below("born_rule_ks", ks_distance(fwd.marginal(fwd.n_times() - 1), std::cref(cdf_t)), cfg.ks_max));
  if (cfg.backward) {
    const TrajectoryEnsemble bwd =
        sample_backward(field, cfg.params, sde_config(cfg, Direction::backward, cfg.n_paths, cfg.seed), cfg.grid, rho_t);
    const std::size_t k = nearest_index(fwd, 0.5 * (cfg.t_start + cfg.t_end));
    out.gates.push_back(below("time_reversal_ks", ks_two_sample(fwd.marginal(k), bwd.marginal(k)), cfg.ks_max));
  }
  add_field_analyses(out, cfg, cfg.name, fwd, field);
}

}  // namespace

std::vector<Artifact> analyze_ensemble(const TrajectoryEnsemble& ens, const ScenarioConfig& cfg, const std::string& prefix) {
  std::vector<Artifact> out;
  if (wants(cfg, "trajectories")) {
    out.push_back({prefix + "_trajectories.csv", io::ensemble_csv(ens, cfg.sample_paths)});
    out.push_back({prefix + "_ensemble.bin", io::ensemble_binary(ens)});
    std::vector<io::Series> s;
    for (std::size_t p = 0; p < std::min(cfg.sample_paths, ens.n_paths); ++p) {
      const auto path = ens.path(p);
      s.push_back({"path " + std::to_string(p), ens.times, std::vector<double>(path.begin(), path.end())});
    }
    out.push_back({prefix + "_trajectories.svg", io::svg_plot(prefix + " sample paths", "t", "x", s)});
  }
  if (wants(cfg, "density")) {
    const auto marginal = ens.marginal(ens.n_times() - 1);
    double lo = cfg.grid.x_min, hi = cfg.grid.x_max;
    if (!marginal.empty()) {
      lo = *std::min_element(marginal.begin(), marginal.end());
      hi = *std::max_element(marginal.begin(), marginal.end());
      if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
      }
    }
    const Histogram h = histogram(marginal, uniform_edges(lo, hi, cfg.density_bins));
    out.push_back({prefix + "_density.csv", io::density_csv(h)});
    out.push_back({prefix + "_density.svg", io::svg_plot(prefix + " density at t = " + io::format_number(ens.times.back()),
                                                         "x", "density", {{"histogram", h.centers(), h.density}})});
  }
  if (wants(cfg, "autocorrelation")) {
    const Centering centering = ens.stationary ? Centering::global : Centering::per_time;
    const Autocorrelation c = autocorrelation(ens, cfg.max_lag, centering);
    out.push_back({prefix + "_autocorrelation.csv", io::autocorrelation_csv(c)});
    out.push_back({prefix + "_autocorrelation.svg",
                   io::svg_plot(prefix + " autocorrelation", "tau", "C", {{"C(tau)", c.tau, c.c}})});
  }
  if (wants(cfg, "psd")) {
    const SpectrumEstimate s = power_spectral_density(ens, cfg.segment_length, cfg.overlap);
    out.push_back({prefix + "_psd.csv", io::psd_csv(s)});
    out.push_back({prefix + "_psd.svg", io::svg_plot(prefix + " power spectral density", "f", "S", {{"psd", s.freq, s.psd}})});
  }
  if (wants(cfg, "fpt")) {
    std::string summary = "sense,n_qualified,n_censored,n_never,n_ineligible,mean,median,censored_fraction\n";
    for (PassageSense sense : cfg.senses) {
      const PassageReport r = first_passage_times(ens, cfg.region, sense);
      const std::string name = sense_name(sense);
      out.push_back({prefix + "_fpt_" + name + ".csv", io::fpt_csv(r)});
      summary += name + "," + std::to_string(r.n_qualified) + "," + std::to_string(r.n_censored) + "," +
                 std::to_string(r.n_never) + "," + std::to_string(r.n_ineligible) + "," + io::format_number(r.mean) + "," +
                 io::format_number(r.median) + "," + io::format_number(r.censored_fraction()) + "\n";
    }
    out.push_back({prefix + "_fpt_summary.csv", summary});
  }
  return out;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  RunResult out;
  switch (cfg.kind) {
    case ScenarioKind::coherent_oscillator: run_coherent(cfg, out); break;
    case ScenarioKind::stationary_ground: run_stationary(cfg, out); break;
    case ScenarioKind::barrier_tunneling:
    case ScenarioKind::custom_potential: run_time_dependent(cfg, out); break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest and output

namespace {

using json = nlohmann::ordered_json;

}  // namespace

std::string RunManifest::to_json() const {
  json j;
  j["tool"] = "qam";
  j["version"] = version;
  j["scenario"] = scenario;
  j["kind"] = kind;
  j["seed"] = seed;
  j["config"] = config;
  j["field_checksum"] = field_checksum;
  j["threads"] = threads;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["passed"] = passed;
  j["gates"] = json::array();
  for (const auto& g : gates) {
    j["gates"].push_back({{"name", g.name}, {"value", g.value}, {"threshold", g.threshold}, {"passed", g.passed}});
  }
  j["outputs"] = json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"file", o.file}, {"fnv1a64", o.checksum}, {"bytes", o.bytes}});
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("version").get<std::string>();
    m.scenario = j.at("scenario").get<std::string>();
    m.kind = j.at("kind").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config").get<std::string>();
    m.field_checksum = j.at("field_checksum").get<std::string>();
    m.threads = j.value("threads", 1);
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    m.passed = j.value("passed", false);
    for (const auto& g : j.at("gates")) {
      m.gates.push_back({g.at("name").get<std::string>(), g.at("value").get<double>(), g.at("threshold").get<double>(),
                         g.at("passed").get<bool>()});
    }
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back({o.at("file").get<std::string>(), o.at("fnv1a64").get<std::string>(), o.at("bytes").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest make_manifest(const ScenarioConfig& cfg, const RunResult& result, double wall_clock_seconds, int threads) {
  RunManifest m;
  m.scenario = cfg.name;
  m.kind = to_string(cfg.kind);
  m.seed = cfg.seed;
  m.config = cfg.source;
  m.field_checksum = result.field_checksum;
  m.wall_clock_seconds = wall_clock_seconds;
  m.threads = threads;
  m.gates = result.gates;
  m.passed = result.passed();
  for (const auto& a : result.artifacts) m.outputs.push_back({a.file, io::hex64(io::fnv1a64(a.content)), a.content.size()});
  return m;
}

std::vector<std::filesystem::path> emit_outputs(const RunResult& result, const RunManifest& manifest,
                                                const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string());
  std::vector<fs::path> written;
  try {
    for (const auto& a : result.artifacts) {
      const fs::path p = dir / a.file;
      io::write_file_atomic(p, a.content);
      written.push_back(p);
    }
    const fs::path p = dir / kManifestFile;
    io::write_file_atomic(p, manifest.to_json());
    written.push_back(p);
  } catch (const Error&) {
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return written;
}

}  // namespace qam
