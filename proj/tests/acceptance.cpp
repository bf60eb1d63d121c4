// Acceptance run: one PASS/FAIL line per criterion, natural units hbar = m = omega = 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracle_diag.hpp"
#include "oracles.hpp"
#include "qam/analysis.hpp"
#include "qam/coherent.hpp"
#include "qam/io.hpp"
#include "qam/kinematics.hpp"
#include "qam/madelung.hpp"
#include "qam/parallel.hpp"
#include "qam/scenario.hpp"
#include "qam/stationary.hpp"
#include "qam/variational.hpp"
#include "qam/velocity.hpp"
#include "qam/wavefield.hpp"

using namespace qam;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "[x] ") + what;
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

int g_failures = 0;

template <class Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    fn(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("threw: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++g_failures;
  std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::vector<double> density(std::span<const std::complex<double>> psi) {
  std::vector<double> rho(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
  return rho;
}

SdeConfig sde(std::size_t n_paths, double t_end, double dt, std::size_t record_every, std::uint64_t seed,
              Direction direction = Direction::forward) {
  SdeConfig c;
  c.n_paths = n_paths;
  c.t_end = t_end;
  c.dt_sde = dt;
  c.record_every = record_every;
  c.seed = seed;
  c.direction = direction;
  return c;
}

const GridSpec kGrid = build_grid(-10, 10, 1001, 1e-3);
const CoherentStateSpec kGround{1.0, 0.0, {}};
const CoherentStateSpec kN3{1.0, 3.0, {}};

// Ensembles shared by several criteria.
struct Shared {
  TrajectoryEnsemble coherent;  // n = 3, two periods, 20 checkpoints
  TrajectoryEnsemble ground;    // ground state to T = 10
};

Shared& shared() {
  static Shared s;
  return s;
}

void coherent_kinematics(Outcome& o) {
  const CoherentVelocityField field(kN3, kGrid.x_min, kGrid.x_max);
  const double T = 4.0 * kPi;
  const std::size_t steps = 12560;  // dt = T / 12560 = 1.0005e-3
  auto& ens = shared().coherent;
  ens = sample_forward(field, {}, sde(20000, T, T / static_cast<double>(steps), steps / 20, 101), kGrid,
                       density(coherent_wavefunction(kN3, 0.0, kGrid)));
  std::size_t mean_ok = 0;
  double worst_z = 0.0, worst_var = 0.0;
  for (std::size_t k = 1; k < ens.n_times(); ++k) {
    const auto xs = ens.marginal(k);
    const Estimate m = mean_estimate(xs);
    const double x_cl = classical_trajectory(kN3, ens.times[k]).x;
    const double z = std::abs(m.value - x_cl) / m.std_error;
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++mean_ok;
    double var = 0.0;
    for (double x : xs) var += (x - m.value) * (x - m.value);
    var /= static_cast<double>(xs.size() - 1);
    worst_var = std::max(worst_var, std::abs(var / 0.5 - 1.0));
  }
  o.require(ens.n_times() == 21, "checkpoints " + std::to_string(ens.n_times() - 1));
  o.require(mean_ok == ens.n_times() - 1, "mean within 3 s.e. at " + std::to_string(mean_ok) + "/20 (worst " +
                                               fmt(worst_z, 3) + " s.e.)");
  o.require(worst_var < 0.05, "variance vs 0.5 worst rel. dev " + fmt(worst_var, 3));
}

void born_rule(Outcome& o) {
  const CoherentVelocityField field(kGround, kGrid.x_min, kGrid.x_max);
  auto& ens = shared().ground;
  ens = sample_forward(field, {}, sde(20000, 10.0, 1e-3, 1000, 202), kGrid,
                       density(coherent_wavefunction(kGround, 0.0, kGrid)));
  const double ks = ks_distance(ens.marginal(ens.n_times() - 1), [](double x) { return gaussian_cdf(x, 0.0, 0.5); });
  o.require(ks < 0.02, "KS at T = 10 is " + fmt(ks, 3) + " (< 0.02)");
}

std::map<std::string, RunResult>& bundled_runs() {
  static std::map<std::string, RunResult> runs;
  return runs;
}

std::vector<fs::path> bundled_scenarios() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(QAM_SCENARIOS)) {
    if (e.path().extension() == ".ini") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const RunResult& bundled(const std::string& stem) {
  auto& runs = bundled_runs();
  auto it = runs.find(stem);
  if (it == runs.end()) {
    set_threads(1);
    it = runs.emplace(stem, run_scenario(load_config(fs::path(QAM_SCENARIOS) / (stem + ".ini")))).first;
  }
  return it->second;
}

void time_reversal(Outcome& o) {
  std::size_t seen = 0;
  for (const auto& path : bundled_scenarios()) {
    const ScenarioConfig cfg = load_config(path);
    o.require(cfg.backward, path.stem().string() + " samples backward");
    if (!cfg.backward) continue;
    const RunResult& r = bundled(path.stem().string());
    for (const auto& g : r.gates) {
      if (g.name.rfind("time_reversal_ks", 0) != 0) continue;
      ++seen;
      o.require(g.value < 0.03, path.stem().string() + " KS(t = T/2) " + fmt(g.value, 3));
    }
  }
  o.require(seen >= bundled_scenarios().size(), std::to_string(seen) + " duality checks");
}

void newton_law(Outcome& o) {
  const CoherentVelocityField field(kGround, kGrid.x_min, kGrid.x_max);
  const std::vector<double> rho = density(coherent_wavefunction(kGround, 0.0, kGrid));
  const TrajectoryEnsemble f = sample_forward(field, {}, sde(20000, 2.0, 1e-3, 10, 303), kGrid, rho);
  const TrajectoryEnsemble b = sample_backward(field, {}, sde(20000, 2.0, 1e-3, 10, 303, Direction::backward), kGrid, rho);
  const auto edges = uniform_edges(-2.0, 2.0, 16);
  const NewtonEstimate n = nelson_newton_residual(f, b, field, {}, Potential::harmonic(1, 1), 1.0, 0.02, edges, 50);
  std::size_t used = 0, ok = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < n.centers.size(); ++k) {
    if (!n.trusted[k]) continue;
    ++used;
    const double z = std::abs(n.residual[k]) / n.residual_std_error[k];
    worst = std::max(worst, z);
    if (z <= 3.0) ++ok;
  }
  o.require(used >= 14, std::to_string(used) + " bins with >= 50 paths");
  o.require(ok == used, "acceleration = -x within 3 s.e. in " + std::to_string(ok) + "/" + std::to_string(used) +
                            " (worst " + fmt(worst, 3) + " s.e.)");
}

void stationary_solver(Outcome& o) {
  const GridSpec g = build_grid(-8, 8, 801, 1e-3);
  const StationarySolution ho = solve_stationary_ground(Potential::harmonic(1, 1), {}, 0.1, 1.2, g);
  o.require(std::abs(ho.energy - 0.5) <= 1e-6, "E(harmonic) - 0.5 = " + fmt(ho.energy - 0.5, 3));
  double sup = 0.0;
  for (std::size_t i = 0; i < g.n_points; ++i) {
    if (std::abs(g.x(i)) <= 6.0) sup = std::max(sup, std::abs(ho.u_profile[i] + g.x(i)));
  }
  o.require(sup < 1e-4, "sup |u + x| on |x| <= 6 is " + fmt(sup, 3));
  const GridSpec gq = build_grid(-6, 6, 1201, 1e-3);
  const Potential quartic = Potential::double_well(0.25, 0.0);
  const StationarySolution q = solve_stationary_ground(quartic, {}, 0.1, 1.0, gq);
  const double diag = oracle::fd_ground_state(quartic, gq, {}).energy;
  o.require(std::abs(q.energy - diag) < 1e-5, "quartic E = " + fmt(q.energy, 10) + " vs grid diagonalization " +
                                                  fmt(diag, 10));
  for (const auto& path : bundled_scenarios()) {
    const ScenarioConfig cfg = load_config(path);
    if (cfg.kind != ScenarioKind::stationary_ground) continue;
    const double e = solve_stationary_ground(cfg.potential, cfg.params, cfg.e_lo, cfg.e_hi, cfg.grid).energy;
    const double d = oracle::fd_ground_energy_extrapolated(cfg.potential, cfg.grid, cfg.params);
    o.require(std::abs(e - d) < 1e-5, path.stem().string() + " E - extrapolated diagonalization = " + fmt(e - d, 3));
  }
}

void variational(Outcome& o) {
  const CoherentVelocityField field(kGround, kGrid.x_min, kGrid.x_max);
  const std::vector<double> rho = density(coherent_wavefunction(kGround, 0.0, kGrid));
  const Potential v = Potential::harmonic(1, 1);
  {
    // 1e5 paths in four independently seeded batches to bound memory.
    const double T = 5.0;
    ActionFunctionalSpec spec;
    spec.horizon = T;
    std::vector<double> per_time;
    for (std::uint64_t batch = 0; batch < 4; ++batch) {
      const TrajectoryEnsemble e = sample_forward(field, {}, sde(25000, T, 5e-3, 2, 400 + batch), kGrid, rho);
      const PathActions a = action_per_path(e, field, {}, v, spec);
      for (std::size_t p = 0; p < e.n_paths; ++p) {
        if (a.used[p]) per_time.push_back(a.j_r[p] / T);
      }
    }
    const Estimate jr = mean_estimate(per_time);
    o.require(per_time.size() == 100000, std::to_string(per_time.size()) + " paths");
    o.require(std::abs(jr.value + 0.5) <= 0.02, "J_R/T = " + fmt(jr.value, 5) + " +- " + fmt(jr.std_error, 2));
  }
  // Probes on a horizon long enough for the stationary part to dominate the start transient.
  const double T = 20.0;
  ActionFunctionalSpec spec;
  spec.horizon = T;
  const SdeConfig c = sde(10000, T, 1e-2, 2, 500);
  const Perturbation dv{PerturbationTarget::drift, [](double x) { return x; }, 0.1};
  const Perturbation du{PerturbationTarget::osmotic, [](double x) { return x; }, 0.1};
  const ProbeResult pv = saddle_point_probe(field, {}, v, spec, dv, c, kGrid, rho, 3.0);
  const ProbeResult pu = saddle_point_probe(field, {}, v, spec, du, c, kGrid, rho, 3.0);
  o.require(pv.sign == ProbeSign::positive, "dv = 0.1x: dJ_R = " + fmt(pv.delta.value, 4) + " +- " +
                                                fmt(pv.delta.std_error, 2) + " (" + to_string(pv.sign) +
                                                ", required positive)");
  o.require(pu.sign == ProbeSign::negative, "du = 0.1x: dJ_R = " + fmt(pu.delta.value, 4) + " +- " +
                                                fmt(pu.delta.std_error, 2) + " (" + to_string(pu.sign) +
                                                ", required negative)");
}

void energy(Outcome& o) {
  auto check = [&](const TrajectoryEnsemble& e, const CoherentStateSpec& spec, double level, const std::string& name) {
    const CoherentVelocityField field(spec, kGrid.x_min, kGrid.x_max);
    const EnergySeries s = estimate_mean_energy(e, field, {}, Potential::harmonic(1, 1));
    o.require(std::abs(s.slope.value) <= 3.0 * s.slope.std_error,
              name + " slope " + fmt(s.slope.value, 3) + " +- " + fmt(s.slope.std_error, 2));
    o.require(std::abs(s.level.value / level - 1.0) < 0.02, name + " level " + fmt(s.level.value, 5));
  };
  if (shared().ground.n_paths == 0 || shared().coherent.n_paths == 0) throw Error(ErrorKind::invalid_argument, "needs criteria 1 and 2");
  check(shared().ground, kGround, 0.5, "ground");
  check(shared().coherent, kN3, 3.5, "<n> = 3");
}

void spectral(Outcome& o) {
  const CoherentVelocityField field(kGround, kGrid.x_min, kGrid.x_max);
  const TrajectoryEnsemble e = sample_forward(field, {}, sde(10000, 160.0, 5e-3, 20, 606), kGrid,
                                              density(coherent_wavefunction(kGround, 0.0, kGrid)));
  const Autocorrelation c = autocorrelation(e, 3.0, Centering::global);
  double worst = 0.0;
  for (std::size_t j = 0; j < c.tau.size(); ++j) {
    worst = std::max(worst, std::abs(c.c[j] / oracle::ou_autocorrelation(c.tau[j], 0.5, 1.0) - 1.0));
  }
  o.require(worst < 0.05, "C(tau) worst rel. error on tau <= 3: " + fmt(worst, 3));

  const SpectrumEstimate s = power_spectral_density(e, 512, 256);
  const LorentzianFit fit = fit_lorentzian_corner(s, 5.0);
  o.require(std::abs(fit.corner_omega - 1.0) <= 0.05, "corner " + fmt(fit.corner_omega, 4));

  const Autocorrelation wide = autocorrelation(e, 10.0, Centering::global);
  const std::vector<double> wk = psd_from_autocorrelation(wide, s.freq);
  double wk_worst = 0.0;
  for (std::size_t j = 1; j < s.freq.size() && s.freq[j] <= 1.0; ++j) {
    wk_worst = std::max(wk_worst, std::abs(wk[j] / s.psd[j] - 1.0));
  }
  o.require(wk_worst < 0.10, "Wiener-Khinchin worst rel. dev on f <= 1: " + fmt(wk_worst, 3));
}

std::pair<double, double> cn_residuals(std::vector<Complex> psi0, const Potential& v, double x_max, double dx,
                                       double dt, double T, const std::function<std::vector<Complex>(const GridSpec&)>& init) {
  const auto n = static_cast<std::size_t>(std::llround(2.0 * x_max / dx)) + 1;
  const GridSpec g = build_grid(-x_max, x_max, n, dt);
  psi0 = init(g);
  CrankNicolsonOptions opts;
  opts.n_steps = static_cast<std::size_t>(std::llround(T / dt));
  const WaveField w = propagate_crank_nicolson(psi0, 0.0, v, {}, g, opts);
  const MadelungFields f = madelung_decompose(w, {}, recommended_density_floor(w));
  const ResidualReport r = madelung_residuals(f, v);
  return {r.continuity_sup, r.qhj_sup};
}

void madelung_convergence(Outcome& o) {
  struct Case {
    std::string name;
    Potential v;
    double x_max;
    std::function<std::vector<Complex>(const GridSpec&)> init;
  };
  const std::vector<Case> cases = {
      {"coherent <n> = 3", Potential::harmonic(1, 1), 10.0,
       [](const GridSpec& g) { return coherent_wavefunction(kN3, 0.0, g); }},
      {"packet on barrier", Potential::barrier(1, 1, 0), 20.0,
       [](const GridSpec& g) { return gaussian_packet(g, -4.0, 1.0, 1.5); }},
  };
  for (const auto& c : cases) {
    const auto coarse = cn_residuals({}, c.v, c.x_max, 0.04, 4e-4, 0.2, c.init);
    const auto fine = cn_residuals({}, c.v, c.x_max, 0.02, 2e-4, 0.2, c.init);
    const double rc = coarse.first / fine.first, rq = coarse.second / fine.second;
    o.require(rc >= 3.5 && rq >= 3.5, c.name + " ratios continuity " + fmt(rc, 3) + ", qhj " + fmt(rq, 3));
  }
}

std::map<std::string, std::string> summary_row(const RunResult& r, const std::string& file, const std::string& sense) {
  for (const auto& a : r.artifacts) {
    if (a.file != file) continue;
    std::istringstream in(a.content);
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> cols;
    std::stringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
    while (std::getline(in, line)) {
      std::stringstream ls(line);
      std::map<std::string, std::string> row;
      std::size_t i = 0;
      for (std::string v; std::getline(ls, v, ',') && i < cols.size(); ++i) row[cols[i]] = v;
      if (row["sense"] == sense) return row;
    }
  }
  throw Error(ErrorKind::invalid_argument, "no " + sense + " row in " + file);
}

void tunneling(Outcome& o) {
  const ScenarioConfig base = load_config(fs::path(QAM_SCENARIOS) / "barrier.ini");
  ScenarioConfig half_dt = base;
  half_dt.dt_sde = base.dt_sde / 2;
  ScenarioConfig more = base;
  more.n_paths = base.n_paths * 2;
  set_threads(1);
  const RunResult& r0 = bundled("barrier");
  const RunResult r1 = run_scenario(half_dt);
  const RunResult r2 = run_scenario(more);
  const std::string file = base.name + "_fpt_summary.csv";
  const auto a = summary_row(r0, file, "traverse"), b = summary_row(r1, file, "traverse"),
             c = summary_row(r2, file, "traverse");
  const double m0 = std::stod(a.at("median")), m1 = std::stod(b.at("median")), m2 = std::stod(c.at("median"));
  o.require(std::abs(m1 / m0 - 1.0) < 0.03, "median " + fmt(m0, 5) + " -> " + fmt(m1, 5) + " under dt halving (" +
                                                fmt(100 * (m1 / m0 - 1.0), 3) + "%)");
  o.require(std::abs(m2 / m0 - 1.0) < 0.02, "-> " + fmt(m2, 5) + " under path doubling (" +
                                                fmt(100 * (m2 / m0 - 1.0), 3) + "%)");
  o.require(true, "transmitted " + a.at("n_qualified") + "/" + std::to_string(base.n_paths) +
                      ", censored fraction " + a.at("censored_fraction") + " / " + b.at("censored_fraction") + " / " +
                      c.at("censored_fraction"));
}

void determinism(Outcome& o) {
  for (const auto& path : bundled_scenarios()) {
    const std::string stem = path.stem().string();
    const RunResult& first = bundled(stem);
    const RunManifest m = make_manifest(load_config(path), first, 0.0, 1);
    const RunManifest loaded = RunManifest::from_json(m.to_json());
    ScenarioConfig cfg = parse_config(loaded.config);
    cfg.seed = loaded.seed;
    set_threads(3);
    const RunResult again = run_scenario(cfg);
    set_threads(1);
    const RunManifest m2 = make_manifest(cfg, again, 0.0, 3);
    bool same = m2.outputs.size() == loaded.outputs.size() && m2.field_checksum == loaded.field_checksum;
    for (std::size_t i = 0; same && i < m2.outputs.size(); ++i) {
      same = m2.outputs[i].file == loaded.outputs[i].file && m2.outputs[i].checksum == loaded.outputs[i].checksum &&
             again.artifacts[i].content == first.artifacts[i].content;
    }
    o.require(same, stem + (same ? " identical (" + std::to_string(m2.outputs.size()) + " files)" : " DIFFERS"));
  }
}

}  // namespace

int main() {
  set_threads(1);
  criterion(1, "coherent-state kinematics", coherent_kinematics);
  criterion(2, "Born-rule gate", born_rule);
  criterion(3, "time-reversal duality", time_reversal);
  criterion(4, "Nelson-Newton law", newton_law);
  criterion(5, "stationary solver", stationary_solver);
  criterion(6, "variational saddle", variational);
  criterion(7, "energy conservation in the mean", energy);
  criterion(8, "spectral suite", spectral);
  criterion(9, "Madelung residual convergence", madelung_convergence);
  criterion(10, "tunneling-time suite", tunneling);
  criterion(11, "determinism", determinism);
  std::printf("%d of 11 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
