#include "fabrics/simulation.hpp"

#include <algorithm>
#include <cmath>

namespace fabrics {

std::vector<Vector> Trajectory::positions() const {
  std::vector<Vector> p;
  p.reserve(states.size());
  for (const State& s : states) p.push_back(s.q);
  return p;
}

State step_rk4(const SecondOrderSystem& system, const State& state, double dt) {
  if (dt <= 0.0) {
    throw FabricError("step_rk4: dt must be positive");
  }
  const Vector& q = state.q;
  const Vector& v = state.qd;

  try {
    const Vector a1 = system(state);
    const State s2(q + 0.5 * dt * v, v + 0.5 * dt * a1);
    const Vector a2 = system(s2);
    const State s3(q + 0.5 * dt * s2.qd, v + 0.5 * dt * a2);
    const Vector a3 = system(s3);
    const State s4(q + dt * s3.qd, v + dt * a3);
    const Vector a4 = system(s4);

    Vector q_next = q + (dt / 6.0) * (v + 2.0 * s2.qd + 2.0 * s3.qd + s4.qd);
    Vector v_next = v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);

    if (!all_finite(q_next) || !all_finite(v_next)) {
      throw NonFiniteStateError("step_rk4: non-finite state", -1);
    }
    return State(std::move(q_next), std::move(v_next));
  } catch (const EvaluationFailureError& e) {
    throw NonFiniteStateError(std::string("step_rk4: ") + e.what(), -1);
  }
}

RolloutResult rollout(const SecondOrderSystem& system, const State& state0,
                      const RolloutOptions& options) {
  if (options.dt <= 0.0 || options.duration <= 0.0) {
    throw FabricError("rollout: dt and duration must be positive");
  }
  const std::size_t n_steps = std::min(
      options.max_steps,
      static_cast<std::size_t>(std::llround(options.duration / options.dt)));

  RolloutResult result;
  Trajectory& traj = result.trajectory;
  traj.dt = options.dt;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.accels.reserve(n_steps + 1);

  auto record = [&](std::size_t step, const State& s) {
    traj.times.push_back(static_cast<double>(step) * options.dt);
    traj.states.push_back(s);
    traj.accels.push_back(system(s));
    if (options.energy != nullptr) {
      const double L = evaluate_energy(*options.energy, s).value;
      traj.energies.push_back(L);
      if (options.potential != nullptr) {
        traj.total_energies.push_back(L + options.potential->value(s.q));
      }
    }
  };

  State current = state0;
  int held = 0;
  for (std::size_t step = 0;; ++step) {
    try {
      record(step, current);
    } catch (const FabricError& err) {
      throw NonFiniteStateError(
          std::string("rollout: aborted at step ") + std::to_string(step) +
              ": " + err.what(),
          static_cast<long>(step));
    }

    if (options.criterion) {
      const bool quiet = current.qd.norm() < options.criterion->speed_tol &&
                         traj.accels.back().norm() < options.criterion->accel_tol;
      held = quiet ? held + 1 : 0;
      if (held >= options.criterion->hold_steps) {
        result.converged = true;
        break;
      }
    }
    if (step >= n_steps) break;

    try {
      current = step_rk4(system, current, options.dt);
    } catch (const NonFiniteStateError&) {
      throw NonFiniteStateError(
          "rollout: integration produced non-finite state at step " +
              std::to_string(step + 1),
          static_cast<long>(step + 1));
    }
  }
  return result;
}

double total_arclength(std::span<const Vector> points) {
  double length = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    length += (points[i] - points[i - 1]).norm();
  }
  return length;
}

std::vector<Vector> resample_arclength(std::span<const Vector> points, int K) {
  if (K < 2) {
    throw FabricError("resample_arclength: K must be >= 2");
  }
  const std::size_t n = points.size();
  if (n < 2) {
    throw DegeneratePathError("resample_arclength: need at least two points");
  }
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    cum[i] = cum[i - 1] + (points[i] - points[i - 1]).norm();
  }
  const double total = cum.back();
  if (total <= 1e-9) {
    throw DegeneratePathError("resample_arclength: total arc length below threshold");
  }

  std::vector<Vector> out;
  out.reserve(K);
  std::size_t seg = 0;
  for (int k = 0; k < K; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(K - 1);
    while (seg + 1 < n - 1 && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    out.push_back(points[seg] + std::clamp(t, 0.0, 1.0) * (points[seg + 1] - points[seg]));
  }
  return out;
}

std::vector<Vector> resample_arclength(const Trajectory& traj, int K) {
  const std::vector<Vector> pos = traj.positions();
  return resample_arclength(std::span<const Vector>(pos), K);
}

std::vector<Vector> truncate_arclength(std::span<const Vector> points,
                                       double target_length) {
  if (points.size() < 2) {
    throw DegeneratePathError("truncate_arclength: need at least two points");
  }
  std::vector<Vector> out;
  out.push_back(points[0]);
  double acc = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double seg = (points[i] - points[i - 1]).norm();
    if (acc + seg >= target_length) {
      const double t = seg > 0.0 ? (target_length - acc) / seg : 0.0;
      out.push_back(points[i - 1] + t * (points[i] - points[i - 1]));
      return out;
    }
    acc += seg;
    out.push_back(points[i]);
  }
  throw DegeneratePathError("truncate_arclength: path shorter than target length");
}

double path_distance(std::span<const Vector> a, std::span<const Vector> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatchError("path_distance: point counts differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (a[i] - b[i]).norm());
  }
  return worst;
}

DriftReport energy_drift(const Trajectory& traj) {
  if (traj.energies.empty()) {
    throw DegenerateEnergyError("energy_drift: no energies recorded");
  }
  const double initial = traj.energies.front();
  if (initial <= 1e-12) {
    throw DegenerateEnergyError("energy_drift: initial energy below threshold");
  }
  double max_drift = 0.0;
  for (double e : traj.energies) {
    max_drift = std::max(max_drift, std::abs(e - initial) / initial);
  }
  const double final_drift = std::abs(traj.energies.back() - initial) / initial;
  return DriftReport{max_drift, final_drift};
}

}  // namespace fabrics
