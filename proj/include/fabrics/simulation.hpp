#pragma once

#include "fabrics/energy.hpp"
#include "fabrics/fields.hpp"
#include "fabrics/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace fabrics {

/// Fixed-step rollout record. times[i] = i * dt; sequences share length.
/// energies holds L per step; total_energies holds H = L + psi and is empty
/// when no potential was supplied.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Accel> accels;
  std::vector<double> energies;
  std::vector<double> total_energies;

  std::size_t size() const { return states.size(); }
  int dim() const { return states.empty() ? 0 : states.front().dim(); }
  std::vector<Vector> positions() const;
};

/// Converged when speed and acceleration norms stay below tolerance for
/// hold_steps consecutive steps.
struct ConvergenceCriterion {
  double speed_tol = 1e-4;
  double accel_tol = 1e-4;
  int hold_steps = 100;
};

/// Classical RK4 step on the first-order lift (q, qd) -> (qd, h(q, qd)).
/// Throws NonFiniteStateError when the output is non-finite.
State step_rk4(const SecondOrderSystem& system, const State& state, double dt);

struct RolloutOptions {
  double dt = 1e-3;
  double duration = 10.0;
  const FinslerEnergy* energy = nullptr;
  const Potential* potential = nullptr;
  std::optional<ConvergenceCriterion> criterion;
  std::size_t max_steps = 1000000;
};

struct RolloutResult {
  Trajectory trajectory;
  bool converged = false;
};

/// Integrate until duration, convergence, or the step cap. Records the
/// acceleration at every stored state, L when an energy is supplied, and
/// H = L + psi when a potential is supplied as well.
RolloutResult rollout(const SecondOrderSystem& system, const State& state0,
                      const RolloutOptions& options);

/// K points uniformly spaced in cumulative (piecewise-linear) arc length,
/// endpoints included. Throws DegeneratePathError for near-zero total length.
std::vector<Vector> resample_arclength(std::span<const Vector> points, int K);
std::vector<Vector> resample_arclength(const Trajectory& traj, int K);

/// Prefix of the polyline with the given cumulative arc length; the final
/// point is interpolated. Used to compare equal-length path segments.
std::vector<Vector> truncate_arclength(std::span<const Vector> points,
                                       double target_length);

double total_arclength(std::span<const Vector> points);

/// max_i ||a_i - b_i||; requires equal K.
double path_distance(std::span<const Vector> a, std::span<const Vector> b);

struct DriftReport {
  double max_rel_drift;
  double final_rel_drift;
};

/// max_t |L(t) - L(0)| / L(0); requires recorded energies with L(0) > 1e-12.
DriftReport energy_drift(const Trajectory& traj);

}  // namespace fabrics
