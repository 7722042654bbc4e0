#pragma once

#include "fabrics/fields.hpp"
#include "fabrics/types.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fabrics {

enum class Homogeneity { kHd2, kGeneral };

/// A second-order system with a claimed velocity-homogeneity tag.
struct Generator {
  SecondOrderSystem system;
  Homogeneity homogeneity;
  std::string name;

  Vector operator()(const State& state) const { return system(state); }
};

struct Hd2Report {
  double max_rel_violation;
};

/// Max over samples of ||h(q, l*qd) - l^2 h(q, qd)|| / (||h(q, qd)|| + 1e-12).
Hd2Report check_hd2(const Generator& generator, std::span<const State> states,
                    std::span<const double> lambdas);

/// Differentiable map from configuration space to a task space, with analytic
/// Jacobian and Jacobian time derivative.
class TaskMap {
 public:
  virtual ~TaskMap() = default;
  virtual int domain_dim() const = 0;
  virtual int codomain_dim() const = 0;
  virtual Vector forward(const Vector& q) const = 0;
  virtual Matrix jacobian(const Vector& q) const = 0;
  virtual Matrix jacobian_dot(const Vector& q, const Vector& qd) const = 0;
  virtual std::string name() const = 0;

  State leaf_state(const State& root) const;
};

class IdentityMap : public TaskMap {
 public:
  explicit IdentityMap(int n) : n_(n) {}
  int domain_dim() const override { return n_; }
  int codomain_dim() const override { return n_; }
  Vector forward(const Vector& q) const override { return q; }
  Matrix jacobian(const Vector&) const override { return Matrix::Identity(n_, n_); }
  Matrix jacobian_dot(const Vector&, const Vector&) const override {
    return Matrix::Zero(n_, n_);
  }
  std::string name() const override { return "identity"; }

 private:
  int n_;
};

class LinearMap : public TaskMap {
 public:
  explicit LinearMap(Matrix A) : A_(std::move(A)) {}
  int domain_dim() const override { return static_cast<int>(A_.cols()); }
  int codomain_dim() const override { return static_cast<int>(A_.rows()); }
  Vector forward(const Vector& q) const override { return A_ * q; }
  Matrix jacobian(const Vector&) const override { return A_; }
  Matrix jacobian_dot(const Vector&, const Vector&) const override {
    return Matrix::Zero(A_.rows(), A_.cols());
  }
  std::string name() const override { return "linear"; }
  const Matrix& matrix() const { return A_; }

 private:
  Matrix A_;
};

/// (r, theta) -> (r cos theta, r sin theta). Domain requires r > 0 for a
/// nonsingular Jacobian.
class PolarMap : public TaskMap {
 public:
  int domain_dim() const override { return 2; }
  int codomain_dim() const override { return 2; }
  Vector forward(const Vector& q) const override;
  Matrix jacobian(const Vector& q) const override;
  Matrix jacobian_dot(const Vector& q, const Vector& qd) const override;
  std::string name() const override { return "polar"; }
};

struct TaskMapCheckReport {
  double max_rel_err_jacobian;      // J vs central difference of forward
  double max_rel_err_jacobian_dot;  // Jdot*qd vs central difference of J qd along the flow
};

TaskMapCheckReport fd_check_task_map(const TaskMap& map, const State& state,
                                     double step = 1e-5);

/// Force-consistent pullback of a leaf spec through a task map:
///   M_root = J' M J,  xi_root = J' (M Jdot qd + xi).
Spec pullback_spec(const TaskMap& map, const Spec& leaf, const State& root_state);

/// One populated task space: a map plus the leaf spec as a function of the
/// leaf state.
struct TreeLeaf {
  std::shared_ptr<const TaskMap> map;
  std::function<Spec(const State& leaf_state)> spec_fn;
};

/// Pull every leaf spec back to the root and sum.
Spec pull_tree_spec(std::span<const TreeLeaf> leaves, const State& root_state);

/// h == 0: the straight-line geometry.
Generator make_zero_generator(int n);

/// h(q, qd) = -||qd||^2 * grad phi(q); HD2 by construction.
Generator make_barrier_generator(std::shared_ptr<const ScalarField> phi);

/// h(q, qd) = -||qd||^2 * softnorm(q - goal); HD2 by construction.
Generator make_attractor_generator(Vector goal, double eps_dir = 1e-6);

/// h(q, qd) = -M^{-1} xi for the pulled-back tree spec; HD2 when every leaf
/// metric is HD0 and every leaf xi is HD2.
Generator make_tree_generator(std::vector<TreeLeaf> leaves, Homogeneity tag,
                              std::string name = "tree");

}  // namespace fabrics
