#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fabrics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Acceleration in configuration space; dimension must match the owning State.
using Accel = Vector;

class FabricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMetricError : public FabricError {
 public:
  using FabricError::FabricError;
};

class DimensionMismatchError : public FabricError {
 public:
  using FabricError::FabricError;
};

class DegenerateVelocityError : public FabricError {
 public:
  using FabricError::FabricError;
};

class EvaluationFailureError : public FabricError {
 public:
  using FabricError::FabricError;
};

class DegenerateDenominatorError : public FabricError {
 public:
  using FabricError::FabricError;
};

class DegeneratePathError : public FabricError {
 public:
  using FabricError::FabricError;
};

class DegenerateEnergyError : public FabricError {
 public:
  using FabricError::FabricError;
};

class NonFiniteStateError : public FabricError {
 public:
  NonFiniteStateError(const std::string& what, long step)
      : FabricError(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Relative tolerance for symmetry checks on metrics.
inline constexpr double kSymmetryTol = 1e-10;
// A metric is treated as strictly positive definite when
// min eigenvalue > kPdEigenvalueRatio * max eigenvalue (scale-free test).
inline constexpr double kPdEigenvalueRatio = 1e-9;
// Below this value of Z = qd' M_L qd the exact energization formula is
// considered degenerate and a robust variant must be used.
inline constexpr double kEpsZ = 1e-12;

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);
bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTol);
bool is_strictly_positive_definite(const Matrix& m,
                                   double ratio = kPdEigenvalueRatio);

/// Configuration-space position/velocity pair. Immutable value type.
struct State {
  Vector q;
  Vector qd;

  State(Vector position, Vector velocity);

  int dim() const { return static_cast<int>(q.size()); }
};

/// A system in force form: M qdd + xi = tau. Leaf specs may be positive
/// semi-definite; a spec must be strictly positive definite before inversion.
struct Spec {
  Matrix M;
  Vector xi;

  Spec(Matrix metric, Vector curvature_force);

  int dim() const { return static_cast<int>(xi.size()); }
};

enum class SystemTag { kGenerator, kFabric, kForced, kComposite };

/// A composable acceleration field qdd = h(q, qd). Evaluation is pure:
/// the same State always yields the same Accel.
class SecondOrderSystem {
 public:
  using EvalFn = std::function<Vector(const State&)>;

  SecondOrderSystem() = default;
  SecondOrderSystem(EvalFn eval, SystemTag tag) : eval_(std::move(eval)), tag_(tag) {}

  Vector operator()(const State& state) const { return eval_(state); }
  SystemTag tag() const { return tag_; }
  bool valid() const { return static_cast<bool>(eval_); }

 private:
  EvalFn eval_;
  SystemTag tag_ = SystemTag::kComposite;
};

/// qdd = -M^{-1} xi via a symmetric factorization.
/// Throws SingularMetricError when M fails the strict PD test.
Vector spec_to_acceleration(const Spec& spec, const State& state);

/// f = M^{-1} tau: the navigation term matching a forcing policy.
Vector force_to_navigation(const Matrix& M, const Vector& tau);

/// Metric-weighted combination: (sum M_i, sum xi_i).
Spec sum_specs(const std::vector<Spec>& specs);

/// Solve M x = b for symmetric strictly positive definite M (LDLT).
Vector solve_spd(const Matrix& M, const Vector& b);

}  // namespace fabrics
