#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qam/kinematics.hpp"
#include "qam/stats.hpp"

namespace qam {

/// How field-dependent integrands are evaluated between recorded samples.
enum class IntegrationRule {
  trapezoid,    // (f(x_k, t_k) + f(x_{k+1}, t_{k+1})) / 2
  midpoint,     // f((x_k + x_{k+1}) / 2, (t_k + t_{k+1}) / 2)
  ito_forward,  // f(x_k, t_k)
};

struct ActionFunctionalSpec {
  double horizon = 1.0;
  // Terminal costs; an empty function counts as zero.
  std::function<double(double)> phi_terminal;  // complex principle
  std::function<double(double)> s_terminal;    // action principle
  std::function<double(double)> r_terminal;    // entropy-production principle
  IntegrationRule rule = IntegrationRule::midpoint;
};

/// Per-path functionals, for paired comparisons.
struct PathActions {
  std::vector<double> j_r;           // int (m/2)(v^2 - u^2) - V dt + S_o
  std::vector<double> j_i;           // -m (int v u dt + R_0)
  std::vector<double> j_complex_re;  // Re of int (m/2) v_q^2 - V dt + Phi_T, v_q = v - i u
  std::vector<double> j_complex_im;  // Im of the same
  std::vector<std::uint8_t> used;    // 0 for paths absorbed before the horizon
};

struct ActionEstimate {
  Estimate j_r;
  Estimate j_i;
  Estimate j_complex_re;
  Estimate j_complex_im;
  std::size_t n_paths = 0;
};

PathActions action_per_path(const TrajectoryEnsemble& ensemble, const VelocityField& field,
                            const PhysicalParams& params, const Potential& potential,
                            const ActionFunctionalSpec& spec);

ActionEstimate estimate_action_functionals(const TrajectoryEnsemble& ensemble, const VelocityField& field,
                                           const PhysicalParams& params, const Potential& potential,
                                           const ActionFunctionalSpec& spec);

struct EnergySeries {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> std_error;
  Estimate level;  // time average
  Estimate slope;  // mean of per-path regression slopes
};

/// E(t) = E[(m/2)(v^2 + u^2) + V(x(t))] at every recorded time.
EnergySeries estimate_mean_energy(const TrajectoryEnsemble& ensemble, const VelocityField& field,
                                  const PhysicalParams& params, const Potential& potential);

enum class ProbeSign { positive, negative, zero, inconclusive };

std::string to_string(ProbeSign sign);

struct ProbeResult {
  Estimate delta;  // J_R(perturbed) - J_R(baseline), paired per path
  double baseline = 0.0;
  double perturbed = 0.0;
  ProbeSign sign = ProbeSign::inconclusive;
  std::size_t n_pairs = 0;
};

/// Re-simulates with amplitude * shape(x) added to v or u and compares J_R against the
/// unperturbed run on common random numbers (same seed, same starting points).
ProbeResult saddle_point_probe(const VelocityField& field, const PhysicalParams& params, const Potential& potential,
                               const ActionFunctionalSpec& spec, const Perturbation& perturbation,
                               const SdeConfig& config, const GridSpec& rho_grid, std::span<const double> rho0,
                               double n_std_errors = 3.0);

namespace reference {

PathActions action_per_path(const TrajectoryEnsemble& ensemble, const VelocityField& field,
                            const PhysicalParams& params, const Potential& potential,
                            const ActionFunctionalSpec& spec);

}  // namespace reference

}  // namespace qam
