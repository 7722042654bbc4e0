#pragma once

#include "fabrics/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fabrics {

/// One evaluation of a Finsler energy: the scalar value, the energy tensor
/// M_L = d2L/dqd dqd, and the curvature term xi_L = d2L/dqd dq * qd - dL/dq.
struct EnergyEval {
  double value;
  Matrix M;
  Vector xi;
};

/// A velocity-HD2 energy L(q, qd) >= 0 with L = 0.5 qd' M_L qd.
/// Concrete energies supply analytic M_L and xi_L; finite differences are a
/// test oracle only.
class FinslerEnergy {
 public:
  virtual ~FinslerEnergy() = default;
  virtual int dim() const = 0;
  virtual EnergyEval evaluate(const State& state) const = 0;
  virtual std::string name() const = 0;
};

/// Evaluate with finiteness checks; throws EvaluationFailureError when the
/// energy's parameters produce non-finite output.
EnergyEval evaluate_energy(const FinslerEnergy& energy, const State& state);

/// H_L = qd' dL/dqd - L. For a Finsler energy dL/dqd = M_L qd exactly, so
/// this computes qd' M_L qd - L; equality with L is a test, not an assumption.
double hamiltonian(const FinslerEnergy& energy, const State& state);

/// Ldot = qd' (M_L qdd + xi_L).
double energy_rate(const FinslerEnergy& energy, const State& state,
                   const Accel& qdd);

struct DerivativeCheckReport {
  double max_rel_err_metric;     // analytic M_L vs second differences of L in qd
  double max_rel_err_curvature;  // analytic xi_L vs first differences of momentum/value
  double max_rel_err_gradient;   // analytic momentum M_L qd vs first differences of L in qd
};

/// Finite-difference oracle for the analytic derivatives of an energy.
/// Second differences internally use sqrt(step) to keep rounding error small.
DerivativeCheckReport fd_check_energy_derivatives(const FinslerEnergy& energy,
                                                  const State& state,
                                                  double step = 1e-5);

/// L = 0.5 ||qd||^2; M_L = I, xi_L = 0.
class EuclideanEnergy : public FinslerEnergy {
 public:
  explicit EuclideanEnergy(int n) : n_(n) {}
  int dim() const override { return n_; }
  EnergyEval evaluate(const State& state) const override;
  std::string name() const override { return "euclidean"; }

 private:
  int n_;
};

/// Position-dependent metric generator G(q) with analytic partials dG/dq_k.
class MetricField {
 public:
  virtual ~MetricField() = default;
  virtual int dim() const = 0;
  virtual Matrix value(const Vector& q) const = 0;
  virtual std::vector<Matrix> partials(const Vector& q) const = 0;
  virtual std::string name() const = 0;
};

class ConstantMetricField : public MetricField {
 public:
  explicit ConstantMetricField(Matrix G);
  int dim() const override { return static_cast<int>(G_.rows()); }
  Matrix value(const Vector&) const override { return G_; }
  std::vector<Matrix> partials(const Vector& q) const override;
  std::string name() const override { return "constant"; }

 private:
  Matrix G_;
};

/// G(q) = (offset + scale * sum_i weights_i q_i^2) * I.
/// offset=1, scale=1, weights=e_1 gives G(q) = (1 + q_1^2) I.
class ScalarPolyMetricField : public MetricField {
 public:
  ScalarPolyMetricField(int n, double offset, double scale, Vector weights);
  int dim() const override { return n_; }
  Matrix value(const Vector& q) const override;
  std::vector<Matrix> partials(const Vector& q) const override;
  std::string name() const override { return "scalar_poly"; }

 private:
  int n_;
  double offset_;
  double scale_;
  Vector weights_;
};

/// L = 0.5 qd' G(q) qd with analytic curvature term.
class RiemannianEnergy : public FinslerEnergy {
 public:
  explicit RiemannianEnergy(std::shared_ptr<const MetricField> metric);
  int dim() const override { return metric_->dim(); }
  EnergyEval evaluate(const State& state) const override;
  std::string name() const override { return "riemannian(" + metric_->name() + ")"; }
  const MetricField& metric() const { return *metric_; }

 private:
  std::shared_ptr<const MetricField> metric_;
};

}  // namespace fabrics
