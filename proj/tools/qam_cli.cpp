// qam: batch front end for the stochastic-mechanics pipeline.
//
// Exit codes: 0 pass, 2 config error, 3 gate failure, 4 I/O error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qam/io.hpp"
#include "qam/parallel.hpp"
#include "qam/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kConfigError = 2;
constexpr int kGateFailure = 3;
constexpr int kIoError = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
};

fs::path output_dir(const CommonOptions& opt, const std::string& from_config) {
  if (!opt.out.empty()) return opt.out;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("QAM_OUT_DIR"); env && *env) return env;
  return "qam_out";
}

void print_gates(const std::vector<qam::GateResult>& gates) {
  for (const auto& g : gates) {
    std::cout << (g.passed ? "  pass " : "  FAIL ") << g.name << " = " << qam::io::format_number(g.value)
              << " (threshold " << qam::io::format_number(g.threshold) << ")\n";
  }
}

int run_config(const CommonOptions& opt, std::optional<qam::ScenarioKind> required) {
  qam::ScenarioConfig cfg = qam::load_config(opt.config);
  if (required && cfg.kind != *required) {
    throw qam::ConfigError({"this subcommand needs kind = " + qam::to_string(*required) + ", config has " +
                            qam::to_string(cfg.kind)});
  }
  if (opt.seed) cfg.seed = *opt.seed;
  const auto start = std::chrono::steady_clock::now();
  const qam::RunResult result = qam::run_scenario(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const qam::RunManifest manifest = qam::make_manifest(cfg, result, seconds, qam::max_threads());
  const fs::path dir = output_dir(opt, cfg.output_dir);
  const auto files = qam::emit_outputs(result, manifest, dir);
  std::cout << cfg.name << " (" << qam::to_string(cfg.kind) << "), seed " << cfg.seed << ", " << files.size()
            << " files in " << dir.string() << "\n";
  print_gates(result.gates);
  return result.passed() ? kPass : kGateFailure;
}

int run_replay(const std::string& manifest_path, const CommonOptions& opt) {
  const qam::RunManifest original = qam::RunManifest::from_json(qam::io::read_file(manifest_path));
  qam::ScenarioConfig cfg = qam::parse_config(original.config);
  cfg.seed = original.seed;
  const auto start = std::chrono::steady_clock::now();
  const qam::RunResult result = qam::run_scenario(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const qam::RunManifest manifest = qam::make_manifest(cfg, result, seconds, qam::max_threads());

  bool identical = manifest.outputs.size() == original.outputs.size() && manifest.field_checksum == original.field_checksum;
  for (std::size_t i = 0; identical && i < manifest.outputs.size(); ++i) {
    identical = manifest.outputs[i].file == original.outputs[i].file &&
                manifest.outputs[i].checksum == original.outputs[i].checksum;
  }
  const fs::path dir = !opt.out.empty() ? fs::path(opt.out) : fs::path(manifest_path).parent_path() / "replay";
  qam::emit_outputs(result, manifest, dir);
  std::cout << "replay of " << original.scenario << " into " << dir.string() << ": "
            << (identical ? "byte-identical" : "DIFFERS") << "\n";
  if (!identical) {
    for (std::size_t i = 0; i < std::min(manifest.outputs.size(), original.outputs.size()); ++i) {
      if (manifest.outputs[i].checksum != original.outputs[i].checksum) {
        std::cout << "  differs: " << manifest.outputs[i].file << "\n";
      }
    }
  }
  print_gates(result.gates);
  return identical && result.passed() ? kPass : kGateFailure;
}

int run_analyze(const std::string& ensemble_path, const std::string& analyses, const CommonOptions& opt) {
  qam::ScenarioConfig cfg;
  if (!opt.config.empty()) cfg = qam::load_config(opt.config);
  if (!analyses.empty()) {
    // Reuse the config parser's checks on the analysis names.
    cfg.analyses = qam::parse_config("[scenario]\nkind = coherent_oscillator\nanalyses = " + analyses + "\n").analyses;
  }
  const qam::TrajectoryEnsemble ens = qam::io::read_ensemble_binary(qam::io::read_file(ensemble_path));
  const std::string prefix = fs::path(ensemble_path).stem().string();
  qam::RunResult result;
  result.artifacts = qam::analyze_ensemble(ens, cfg, prefix);
  const fs::path dir = output_dir(opt, cfg.output_dir);
  qam::emit_outputs(result, qam::make_manifest(cfg, result, 0.0, qam::max_threads()), dir);
  std::cout << result.artifacts.size() << " analysis files in " << dir.string() << "\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qam: stochastic-mechanics simulations from scenario files"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string manifest_path, ensemble_path, analyses;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "scenario file");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (default: $QAM_OUT_DIR, else ./qam_out)");
    sub->add_option("--threads", opt.threads, "worker threads; never changes results")->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { opt.seed = s; }, "override the config seed");
  };

  auto* simulate = app.add_subcommand("simulate", "run any scenario");
  add_common(simulate, true);
  add_seed(simulate);
  auto* stationary = app.add_subcommand("stationary", "run a stationary_ground scenario");
  add_common(stationary, true);
  add_seed(stationary);
  auto* tunnel = app.add_subcommand("tunnel", "run a barrier_tunneling scenario");
  add_common(tunnel, true);
  add_seed(tunnel);
  auto* analyze = app.add_subcommand("analyze", "analyse a saved binary ensemble");
  add_common(analyze, false);
  analyze->add_option("--ensemble", ensemble_path, "QAMTRAJ1 file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--analyses", analyses, "comma list, e.g. density,psd");
  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare outputs byte for byte");
  replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", opt.out, "output directory (default: <manifest dir>/replay)");
  replay->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  if (opt.threads > 0) qam::set_threads(opt.threads);
  try {
    if (simulate->parsed()) return run_config(opt, std::nullopt);
    if (stationary->parsed()) return run_config(opt, qam::ScenarioKind::stationary_ground);
    if (tunnel->parsed()) return run_config(opt, qam::ScenarioKind::barrier_tunneling);
    if (analyze->parsed()) return run_analyze(ensemble_path, analyses, opt);
    if (replay->parsed()) return run_replay(manifest_path, opt);
  } catch (const qam::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
    return kConfigError;
  } catch (const qam::Error& e) {
    std::cerr << e.what() << "\n";
    if (e.kind() == qam::ErrorKind::config) return kConfigError;
    if (e.kind() == qam::ErrorKind::io) return kIoError;
    return kGateFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGateFailure;
  }
  return kConfigError;
}
