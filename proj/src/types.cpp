#include "fabrics/types.hpp"

#include <Eigen/Eigenvalues>

namespace fabrics {

bool all_finite(const Vector& v) { return v.allFinite(); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * (scale + 1.0);
}

bool is_strictly_positive_definite(const Matrix& m, double ratio) {
  if (!is_symmetric(m)) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return false;
  const double min_eig = es.eigenvalues().minCoeff();
  const double max_eig = es.eigenvalues().maxCoeff();
  return max_eig > 0.0 && min_eig > ratio * max_eig;
}

State::State(Vector position, Vector velocity)
    : q(std::move(position)), qd(std::move(velocity)) {
  if (q.size() != qd.size()) {
    throw DimensionMismatchError("State: dim(q) != dim(qd)");
  }
  if (q.size() < 1) {
    throw DimensionMismatchError("State: dimension must be >= 1");
  }
  if (!all_finite(q) || !all_finite(qd)) {
    throw EvaluationFailureError("State: non-finite entries");
  }
}

Spec::Spec(Matrix metric, Vector curvature_force)
    : M(std::move(metric)), xi(std::move(curvature_force)) {
  if (M.rows() != M.cols() || M.rows() != xi.size()) {
    throw DimensionMismatchError("Spec: M must be n x n matching xi");
  }
  if (!is_symmetric(M)) {
    throw FabricError("Spec: M must be symmetric");
  }
}

Vector solve_spd(const Matrix& M, const Vector& b) {
  if (!is_strictly_positive_definite(M)) {
    throw SingularMetricError("metric is not strictly positive definite");
  }
  Eigen::LDLT<Matrix> ldlt(M);
  if (ldlt.info() != Eigen::Success) {
    throw SingularMetricError("LDLT factorization failed");
  }
  return ldlt.solve(b);
}

Vector spec_to_acceleration(const Spec& spec, const State& state) {
  if (spec.dim() != state.dim()) {
    throw DimensionMismatchError("spec_to_acceleration: spec/state dimension mismatch");
  }
  return solve_spd(spec.M, -spec.xi);
}

Vector force_to_navigation(const Matrix& M, const Vector& tau) {
  if (M.rows() != tau.size()) {
    throw DimensionMismatchError("force_to_navigation: M/tau dimension mismatch");
  }
  return solve_spd(M, tau);
}

Spec sum_specs(const std::vector<Spec>& specs) {
  if (specs.empty()) {
    throw FabricError("sum_specs: empty spec list");
  }
  const int n = specs.front().dim();
  Matrix M = Matrix::Zero(n, n);
  Vector xi = Vector::Zero(n);
  for (const Spec& s : specs) {
    if (s.dim() != n) {
      throw DimensionMismatchError("sum_specs: mixed dimensions");
    }
    M += s.M;
    xi += s.xi;
  }
  return Spec(std::move(M), std::move(xi));
}

}  // namespace fabrics
