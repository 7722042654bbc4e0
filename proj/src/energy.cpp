#include "fabrics/energy.hpp"

#include <cmath>

namespace fabrics {

EnergyEval evaluate_energy(const FinslerEnergy& energy, const State& state) {
  if (energy.dim() != state.dim()) {
    throw DimensionMismatchError("evaluate_energy: energy/state dimension mismatch");
  }
  EnergyEval e = energy.evaluate(state);
  if (!std::isfinite(e.value) || !all_finite(e.M) || !all_finite(e.xi)) {
    throw EvaluationFailureError("evaluate_energy: non-finite output from " +
                                 energy.name());
  }
  return e;
}

double hamiltonian(const FinslerEnergy& energy, const State& state) {
  const EnergyEval e = evaluate_energy(energy, state);
  return state.qd.dot(e.M * state.qd) - e.value;
}

double energy_rate(const FinslerEnergy& energy, const State& state,
                   const Accel& qdd) {
  const EnergyEval e = evaluate_energy(energy, state);
  return state.qd.dot(e.M * qdd + e.xi);
}

namespace {

double rel_err(const Vector& analytic, const Vector& reference) {
  return (analytic - reference).cwiseAbs().maxCoeff() /
         (reference.cwiseAbs().maxCoeff() + 1e-9);
}

double rel_err(const Matrix& analytic, const Matrix& reference) {
  return (analytic - reference).cwiseAbs().maxCoeff() /
         (reference.cwiseAbs().maxCoeff() + 1e-9);
}

}  // namespace

DerivativeCheckReport fd_check_energy_derivatives(const FinslerEnergy& energy,
                                                  const State& state,
                                                  double step) {
  const int n = state.dim();
  const EnergyEval e0 = evaluate_energy(energy, state);

  auto value_at = [&](const Vector& q, const Vector& qd) {
    return evaluate_energy(energy, State(q, qd)).value;
  };
  auto momentum_at = [&](const Vector& q, const Vector& qd) -> Vector {
    const EnergyEval e = evaluate_energy(energy, State(q, qd));
    return e.M * qd;
  };

  const double h1 = step * (1.0 + state.qd.norm() + state.q.norm());
  const double h2 = std::sqrt(step) * (1.0 + state.qd.norm());

  // Momentum dL/dqd vs central difference of the value in qd.
  Vector grad_fd(n);
  for (int i = 0; i < n; ++i) {
    Vector vp = state.qd, vm = state.qd;
    vp[i] += h1;
    vm[i] -= h1;
    grad_fd[i] = (value_at(state.q, vp) - value_at(state.q, vm)) / (2.0 * h1);
  }
  const Vector momentum = e0.M * state.qd;

  // M_L vs second differences of the value in qd.
  Matrix M_fd(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vector vpp = state.qd, vpm = state.qd, vmp = state.qd, vmm = state.qd;
      vpp[i] += h2; vpp[j] += h2;
      vpm[i] += h2; vpm[j] -= h2;
      vmp[i] -= h2; vmp[j] += h2;
      vmm[i] -= h2; vmm[j] -= h2;
      M_fd(i, j) = (value_at(state.q, vpp) - value_at(state.q, vpm) -
                    value_at(state.q, vmp) + value_at(state.q, vmm)) /
                   (4.0 * h2 * h2);
    }
  }

  // xi_L = (d momentum / dq) qd - dL/dq, both by first differences in q.
  Matrix dp_dq(n, n);
  Vector dL_dq(n);
  for (int j = 0; j < n; ++j) {
    Vector qp = state.q, qm = state.q;
    qp[j] += h1;
    qm[j] -= h1;
    dp_dq.col(j) = (momentum_at(qp, state.qd) - momentum_at(qm, state.qd)) / (2.0 * h1);
    dL_dq[j] = (value_at(qp, state.qd) - value_at(qm, state.qd)) / (2.0 * h1);
  }
  const Vector xi_fd = dp_dq * state.qd - dL_dq;

  DerivativeCheckReport report;
  report.max_rel_err_gradient = rel_err(momentum, grad_fd);
  report.max_rel_err_metric = rel_err(e0.M, M_fd);
  report.max_rel_err_curvature = rel_err(e0.xi, xi_fd);
  return report;
}

EnergyEval EuclideanEnergy::evaluate(const State& state) const {
  EnergyEval e;
  e.value = 0.5 * state.qd.squaredNorm();
  e.M = Matrix::Identity(n_, n_);
  e.xi = Vector::Zero(n_);
  return e;
}

ConstantMetricField::ConstantMetricField(Matrix G) : G_(std::move(G)) {
  if (!is_symmetric(G_)) {
    throw FabricError("ConstantMetricField: G must be symmetric");
  }
}

std::vector<Matrix> ConstantMetricField::partials(const Vector&) const {
  return std::vector<Matrix>(dim(), Matrix::Zero(dim(), dim()));
}

ScalarPolyMetricField::ScalarPolyMetricField(int n, double offset, double scale,
                                             Vector weights)
    : n_(n), offset_(offset), scale_(scale), weights_(std::move(weights)) {
  if (weights_.size() != n_) {
    throw DimensionMismatchError("ScalarPolyMetricField: weights must have length n");
  }
  if (offset_ <= 0.0) {
    throw FabricError("ScalarPolyMetricField: offset must be positive for a PD metric");
  }
}

Matrix ScalarPolyMetricField::value(const Vector& q) const {
  const double g = offset_ + scale_ * weights_.dot(q.cwiseProduct(q));
  return g * Matrix::Identity(n_, n_);
}

std::vector<Matrix> ScalarPolyMetricField::partials(const Vector& q) const {
  std::vector<Matrix> p(n_);
  for (int k = 0; k < n_; ++k) {
    p[k] = (2.0 * scale_ * weights_[k] * q[k]) * Matrix::Identity(n_, n_);
  }
  return p;
}

RiemannianEnergy::RiemannianEnergy(std::shared_ptr<const MetricField> metric)
    : metric_(std::move(metric)) {}

EnergyEval RiemannianEnergy::evaluate(const State& state) const {
  const int n = dim();
  const Matrix G = metric_->value(state.q);
  const std::vector<Matrix> dG = metric_->partials(state.q);

  EnergyEval e;
  e.M = G;
  e.value = 0.5 * state.qd.dot(G * state.qd);

  // xi_L,i = sum_j qd_j (dG/dq_j qd)_i  -  0.5 qd' (dG/dq_i) qd
  e.xi = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    e.xi += state.qd[j] * (dG[j] * state.qd);
  }
  for (int i = 0; i < n; ++i) {
    e.xi[i] -= 0.5 * state.qd.dot(dG[i] * state.qd);
  }
  return e;
}

}  // namespace fabrics
