#include "fabrics/regulation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace fabrics {

GateFunction linear_gate_variant1(double L_max, double gamma_max) {
  GateFunction gate;
  gate.variant = 1;
  gate.L_max = L_max;
  gate.gamma_max = gamma_max;
  gate.gamma = [L_max, gamma_max](double L) {
    return gamma_max * std::max(0.0, 1.0 - L / L_max);
  };
  return gate;
}

GateFunction linear_gate_variant2(double L_max) {
  GateFunction gate;
  gate.variant = 2;
  gate.L_max = L_max;
  gate.gamma_max = 1.0;
  gate.gamma = [L_max](double L) { return std::clamp(L / L_max, 0.0, 1.0); };
  return gate;
}

bool check_gate_boundaries(const GateFunction& gate, double tol) {
  if (gate.variant == 1) {
    return std::abs(gate(0.0) - gate.gamma_max) <= tol &&
           std::abs(gate(gate.L_max)) <= tol;
  }
  if (gate.variant == 2) {
    if (std::abs(gate(0.0)) > tol || std::abs(gate(gate.L_max) - 1.0) > tol) {
      return false;
    }
    for (int i = 0; i <= 16; ++i) {
      const double g = gate(gate.L_max * i / 16.0);
      if (g < -tol || g > 1.0 + tol) return false;
    }
    return true;
  }
  return false;
}

Vector damper_matrix(const FinslerEnergy& energy, const State& state,
                     const Matrix& B) {
  if (!is_strictly_positive_definite(B)) {
    throw SingularMetricError("damper_matrix: B must be SPD");
  }
  const EnergyEval e = evaluate_energy(energy, state);
  return -solve_spd(e.M, B * state.qd);
}

Vector damper_scalar(const State& state, double beta) {
  if (beta < 0.0) {
    throw FabricError("damper_scalar: beta must be nonnegative");
  }
  return -beta * state.qd;
}

double energy_cap_lambda_1(const FinslerEnergy& energy, const State& state,
                           const Vector& f, const Matrix& B,
                           const GateFunction& gate) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double work_rate = state.qd.dot(e.M * f);
  const double denom = state.qd.dot(B * state.qd) + gate(e.value);
  if (denom <= 0.0) {
    throw DegenerateDenominatorError(
        "energy_cap_lambda_1: qd' B qd + gamma(L) <= 0 (bad gate)");
  }
  return std::max(0.0, work_rate / denom);
}

CapTwoResult energy_cap_2(const FinslerEnergy& energy, const State& state,
                          const Vector& f, const GateFunction& gate, double beta,
                          double eps_z, double sigma) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double Z = state.qd.dot(e.M * state.qd);
  const double alpha_f =
      -eta_sigma(state.qd.norm(), sigma) * state.qd.dot(e.M * f) / (Z + eps_z);
  const double lambda = gate(e.value) * alpha_f;
  return CapTwoResult{lambda, (lambda - beta) * state.qd};
}

CompatibilityReport check_compatible(const Potential& potential,
                                     const NavigationPolicy& policy,
                                     std::span<const Vector> points,
                                     double zero_tol) {
  CompatibilityReport report;
  report.samples = static_cast<int>(points.size());
  for (int i = 0; i < report.samples; ++i) {
    const Vector& q = points[i];
    const Vector grad = potential.gradient(q);
    const Vector f0 = policy.at_rest(q);
    const bool grad_zero = grad.norm() <= zero_tol;
    const bool f_zero = f0.norm() <= zero_tol;
    bool ok = (grad_zero == f_zero);
    if (ok && !f_zero) {
      ok = -grad.dot(f0) > 0.0;
    }
    if (!ok) {
      ++report.violations;
      report.violating_indices.push_back(i);
    }
  }
  return report;
}

NavigationPolicy default_compatible_policy(const Potential& potential,
                                           double eps, Matrix B) {
  if (eps <= 0.0) {
    throw FabricError("default_compatible_policy: eps must be positive");
  }
  auto field = potential.field;
  return NavigationPolicy{
      SecondOrderSystem(
          [field, eps, B = std::move(B)](const State& s) -> Vector {
            const Vector grad = field->gradient(s.q);
            return -grad / (grad.norm() + eps) - B * s.qd;
          },
          SystemTag::kForced),
      "minimizers of " + potential.field->name()};
}

Vector regulator_theorem_main(const FinslerEnergy& energy, const State& state,
                              const Potential& potential, double beta,
                              double eps_z, double sigma) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double Z = state.qd.dot(e.M * state.qd);
  const Vector grad = potential.gradient(state.q);
  const double scalar = -eta_sigma(state.qd.norm(), sigma) *
                            state.qd.dot(grad) / (Z + eps_z) -
                        beta;
  return scalar * state.qd;
}

LyapunovMonitorReport lyapunov_monitor_section4(const EnergizedFabric& fabric,
                                                const SystemMetricFn& metric,
                                                const Matrix& B, double beta,
                                                const Trajectory& window,
                                                double speed_floor) {
  LyapunovMonitorReport report;
  if (window.size() < 2) return report;
  report.min_margin = std::numeric_limits<double>::infinity();

  Matrix M_prev = metric(window.states.front());
  for (std::size_t k = 1; k < window.size(); ++k) {
    const State& s = window.states[k];
    const Matrix M = metric(s);
    const Matrix M_dot = (M - M_prev) / window.dt;
    M_prev = M;

    const double Z = s.qd.dot(M * s.qd);
    if (s.qd.norm() < speed_floor || Z <= 0.0) continue;

    const EnergizedFabric::Decomposition d = fabric.decompose(s);
    const double alpha0 =
        (-s.qd.dot(M * d.base) - 0.5 * s.qd.dot(M_dot * s.qd)) / Z;
    const double residual = d.alpha - alpha0;

    const Matrix B_total = B + beta * M;
    Eigen::SelfAdjointEigenSolver<Matrix> es_b(B_total, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> es_m(residual * M, Eigen::EigenvaluesOnly);
    const double margin =
        es_b.eigenvalues().minCoeff() - es_m.eigenvalues().maxCoeff();

    ++report.evaluated_steps;
    if (margin > 0.0) ++report.positive_margin_steps;
    report.min_margin = std::min(report.min_margin, margin);
    report.margins.push_back(margin);
    report.alpha0.push_back(alpha0);
    report.alpha_residual.push_back(residual);
  }
  if (report.evaluated_steps > 0) {
    report.fraction_positive =
        static_cast<double>(report.positive_margin_steps) / report.evaluated_steps;
  } else {
    report.min_margin = 0.0;
  }
  return report;
}

}  // namespace fabrics
