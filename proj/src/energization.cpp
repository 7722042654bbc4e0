#include "fabrics/energization.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace fabrics {

double eta_sigma(double speed, double sigma) {
  return 1.0 - std::exp(-speed * speed / (2.0 * sigma * sigma));
}

Energization energize(const SecondOrderSystem& h, const FinslerEnergy& energy,
                      const State& state, double eps_z) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double Z = state.qd.dot(e.M * state.qd);
  if (Z <= eps_z) {
    throw DegenerateVelocityError(
        "energize: qd' M_L qd below threshold; use a vanishing/robust variant");
  }
  const Vector hv = h(state);
  const double alpha = -state.qd.dot(e.M * hv + e.xi) / Z;
  return Energization{hv + alpha * state.qd, alpha};
}

Energization energize_vanishing(const SecondOrderSystem& h,
                                const FinslerEnergy& energy, const State& state,
                                double eps) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double Z = state.qd.dot(e.M * state.qd);
  const Vector hv = h(state);
  const double alpha = -state.qd.dot(e.M * hv + e.xi) / (Z + eps);
  return Energization{hv + alpha * state.qd, alpha};
}

Energization energize_robust(const SecondOrderSystem& h,
                             const FinslerEnergy& energy, const State& state,
                             double eps, double sigma) {
  const Energization vanishing = energize_vanishing(h, energy, state, eps);
  const double eta = eta_sigma(state.qd.norm(), sigma);
  return Energization{eta * vanishing.accel, eta * vanishing.alpha};
}

Energization energize_total(const SecondOrderSystem& h_plus_f,
                            const FinslerEnergy& energy,
                            const Potential& potential, const State& state,
                            double eps_z) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double Z = state.qd.dot(e.M * state.qd);
  if (Z <= eps_z) {
    throw DegenerateVelocityError(
        "energize_total: qd' M_L qd below threshold; use the guarded variant");
  }
  const Vector hf = h_plus_f(state);
  const double alpha =
      -state.qd.dot(e.M * hf + e.xi + potential.gradient(state.q)) / Z;
  return Energization{hf + alpha * state.qd, alpha};
}

Energization energize_total_guarded(const SecondOrderSystem& h_plus_f,
                                    const FinslerEnergy& energy,
                                    const Potential& potential,
                                    const State& state, double eps_z,
                                    double sigma) {
  const EnergyEval e = evaluate_energy(energy, state);
  const double Z = state.qd.dot(e.M * state.qd);
  const Vector hf = h_plus_f(state);
  const double eta = eta_sigma(state.qd.norm(), sigma);
  const double alpha =
      -eta * state.qd.dot(e.M * hf + e.xi + potential.gradient(state.q)) /
      (Z + eps_z);
  return Energization{hf + alpha * state.qd, alpha};
}

EnergizedFabric::EnergizedFabric(Generator generator,
                                 std::shared_ptr<const FinslerEnergy> energy,
                                 EnergizationOptions options)
    : generator_(std::move(generator)), energy_(std::move(energy)),
      options_(options) {}

EnergizedFabric::Decomposition EnergizedFabric::decompose(const State& state) const {
  switch (options_.variant) {
    case EnergizationVariant::kExact: {
      const Energization r = energize(generator_.system, *energy_, state, options_.eps_z);
      return Decomposition{generator_(state), r.alpha};
    }
    case EnergizationVariant::kVanishing: {
      const Energization r = energize_vanishing(generator_.system, *energy_, state, options_.eps);
      return Decomposition{generator_(state), r.alpha};
    }
    case EnergizationVariant::kRobust: {
      const Energization v = energize_vanishing(generator_.system, *energy_, state, options_.eps);
      const double eta = eta_sigma(state.qd.norm(), options_.sigma);
      return Decomposition{eta * generator_(state), eta * v.alpha};
    }
  }
  throw FabricError("EnergizedFabric: unknown variant");
}

Vector EnergizedFabric::evaluate(const State& state) const {
  const Decomposition d = decompose(state);
  return d.base + d.alpha * state.qd;
}

double EnergizedFabric::alpha(const State& state) const {
  return decompose(state).alpha;
}

SecondOrderSystem EnergizedFabric::system() const {
  EnergizedFabric copy = *this;
  return SecondOrderSystem(
      [copy](const State& s) { return copy.evaluate(s); }, SystemTag::kFabric);
}

double steering_exchange_rate(const EnergyEval& e, const State& state,
                              const Vector& f, double eps_z) {
  const double Z = state.qd.dot(e.M * state.qd);
  if (Z <= eps_z) {
    throw DegenerateVelocityError("steering_exchange_rate: degenerate Z");
  }
  return state.qd.dot(e.M * f) / Z;
}

Matrix spd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.info() != Eigen::Success) {
    throw SingularMetricError("spd_sqrt: eigendecomposition failed");
  }
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw SingularMetricError("spd_sqrt: matrix not positive definite");
  }
  return es.operatorSqrt();
}

Matrix motion_orthogonal_projection(const EnergyEval& e, const State& state,
                                    double eps_z) {
  const double Z = state.qd.dot(e.M * state.qd);
  if (Z <= eps_z) {
    throw DegenerateVelocityError("motion_orthogonal_projection: degenerate Z");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(e.M);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw SingularMetricError("motion_orthogonal_projection: M_L not SPD");
  }
  const Matrix sqrt_M = es.operatorSqrt();
  const Matrix inv_sqrt_M = es.operatorInverseSqrt();
  const Vector v = sqrt_M * state.qd;
  const Vector vhat = v / v.norm();
  const int n = state.dim();
  return inv_sqrt_M * (Matrix::Identity(n, n) - vhat * vhat.transpose()) * sqrt_M;
}

}  // namespace fabrics
