#pragma once

#include "fabrics/energization.hpp"
#include "fabrics/energy.hpp"
#include "fabrics/fields.hpp"
#include "fabrics/simulation.hpp"
#include "fabrics/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fabrics {

/// The f term added to a fabric. zero_set describes {q | f(q, 0) = 0} for
/// reporting; convergence checks evaluate f(q, 0) directly.
struct NavigationPolicy {
  SecondOrderSystem system;
  std::string zero_set;

  Vector operator()(const State& state) const { return system(state); }
  Vector at_rest(const Vector& q) const {
    return system(State(q, Vector::Zero(q.size())));
  }
};

/// Scalar schedule gamma(L) with declared boundary values.
/// Variant 1: gamma(0) = gamma_max, gamma(L_max) = 0.
/// Variant 2: gamma(0) = 0, gamma(L_max) = 1, range within [0, 1].
struct GateFunction {
  int variant = 1;
  double L_max = 1.0;
  double gamma_max = 1.0;
  std::function<double(double)> gamma;

  double operator()(double L) const { return gamma(L); }
};

GateFunction linear_gate_variant1(double L_max, double gamma_max);
GateFunction linear_gate_variant2(double L_max);
/// Verifies the boundary invariants for the gate's declared variant.
bool check_gate_boundaries(const GateFunction& gate, double tol = 0.0);

/// f_damp = -M_L^{-1} B qd; with a fabric this drives Ldot = -qd' B qd.
Vector damper_matrix(const FinslerEnergy& energy, const State& state,
                     const Matrix& B);

/// -beta qd; preserves the path consistency of geometric fabrics.
Vector damper_scalar(const State& state, double beta);

/// lambda = max{0, qd' M_L f / (qd' B qd + gamma(L))} for the regulated
/// system qdd = h~ + f - lambda M_L^{-1} B qd.
double energy_cap_lambda_1(const FinslerEnergy& energy, const State& state,
                           const Vector& f, const Matrix& B,
                           const GateFunction& gate);

struct CapTwoResult {
  double lambda;
  Vector term;  // lambda qd - beta qd
};

/// alpha_f = -qd' M_L f / Z (guarded), lambda = gamma(L) alpha_f; returns the
/// regulated term for qdd = h~ + f + lambda qd - beta qd. The eta guard's
/// sigma is tiny so the work cancellation at gamma = 1 stays exact away from
/// rest while the term still vanishes at qd = 0.
CapTwoResult energy_cap_2(const FinslerEnergy& energy, const State& state,
                          const Vector& f, const GateFunction& gate, double beta,
                          double eps_z = 1e-12, double sigma = 1e-6);

struct CompatibilityReport {
  int samples = 0;
  int violations = 0;
  std::vector<int> violating_indices;

  bool compatible() const { return violations == 0; }
};

/// Checks at each sample point: grad psi = 0 iff f(q, 0) = 0, and
/// -grad psi . f(q, 0) > 0 wherever f(q, 0) != 0.
CompatibilityReport check_compatible(const Potential& potential,
                                     const NavigationPolicy& policy,
                                     std::span<const Vector> points,
                                     double zero_tol = 1e-9);

/// f(q, qd) = -grad psi / (||grad psi|| + eps) - B qd; compatible with psi by
/// construction, position term bounded below norm 1.
NavigationPolicy default_compatible_policy(const Potential& potential,
                                           double eps, Matrix B);

/// The convergence regulator term (-qd' grad psi / Z - beta) qd, guarded by
/// Z + eps_z and eta_sigma. Added to energize_L[h + f] it reproduces the
/// damped total-energized system, whose total energy decreases at rate
/// -beta qd' M_L qd.
Vector regulator_theorem_main(const FinslerEnergy& energy, const State& state,
                              const Potential& potential, double beta,
                              double eps_z = 1e-12, double sigma = 1e-6);

/// Post-hoc audit of the damped-potential system
///   qdd = h~ - M^{-1}(grad psi + B qd)  (plus optional -beta qd)
/// against the sufficient condition Vdot <= -b ||qd||^2: per step computes
/// alpha_0 = (-qd' M h - 0.5 qd' Mdot qd) / (qd' M qd) with h the fabric's
/// base term, the residual alpha~ = alpha - alpha_0, and the margin
/// lambda_min(B + beta M) - lambda_max(alpha~ M). Mdot is estimated by
/// backward differencing along the trajectory, so step 0 is skipped.
struct LyapunovMonitorReport {
  int evaluated_steps = 0;
  int positive_margin_steps = 0;
  double min_margin = 0.0;
  double fraction_positive = 0.0;
  std::vector<double> margins;
  std::vector<double> alpha0;
  std::vector<double> alpha_residual;
};

using SystemMetricFn = std::function<Matrix(const State&)>;

LyapunovMonitorReport lyapunov_monitor_section4(const EnergizedFabric& fabric,
                                                const SystemMetricFn& metric,
                                                const Matrix& B, double beta,
                                                const Trajectory& window,
                                                double speed_floor = 1e-9);

}  // namespace fabrics
