#include "fabrics/geometry.hpp"

#include <cmath>
#include <utility>

namespace fabrics {

Hd2Report check_hd2(const Generator& generator, std::span<const State> states,
                    std::span<const double> lambdas) {
  double worst = 0.0;
  for (const State& s : states) {
    const Vector base = generator(s);
    for (double lambda : lambdas) {
      const State scaled(s.q, lambda * s.qd);
      const Vector lhs = generator(scaled);
      // Relative to the expected magnitude lambda^2 ||h(q, qd)||.
      const double violation = (lhs - lambda * lambda * base).norm() /
                               (lambda * lambda * base.norm() + 1e-12);
      worst = std::max(worst, violation);
    }
  }
  return Hd2Report{worst};
}

State TaskMap::leaf_state(const State& root) const {
  return State(forward(root.q), jacobian(root.q) * root.qd);
}

Vector PolarMap::forward(const Vector& q) const {
  const double r = q[0], th = q[1];
  Vector x(2);
  x << r * std::cos(th), r * std::sin(th);
  return x;
}

Matrix PolarMap::jacobian(const Vector& q) const {
  const double r = q[0], th = q[1];
  Matrix J(2, 2);
  J << std::cos(th), -r * std::sin(th),
       std::sin(th),  r * std::cos(th);
  return J;
}

Matrix PolarMap::jacobian_dot(const Vector& q, const Vector& qd) const {
  const double r = q[0], th = q[1];
  const double rd = qd[0], thd = qd[1];
  const double c = std::cos(th), s = std::sin(th);
  Matrix Jd(2, 2);
  Jd << -s * thd, -rd * s - r * c * thd,
         c * thd,  rd * c - r * s * thd;
  return Jd;
}

TaskMapCheckReport fd_check_task_map(const TaskMap& map, const State& state,
                                     double step) {
  const int n = map.domain_dim();
  const int m = map.codomain_dim();
  const double h = step * (1.0 + state.q.norm());

  Matrix J_fd(m, n);
  for (int j = 0; j < n; ++j) {
    Vector qp = state.q, qm = state.q;
    qp[j] += h;
    qm[j] -= h;
    J_fd.col(j) = (map.forward(qp) - map.forward(qm)) / (2.0 * h);
  }
  const Matrix J = map.jacobian(state.q);

  // Jdot qd vs d/dt (J qd) along q(t) = q + t qd.
  const double ht = step / (1.0 + state.qd.norm());
  const Vector jqd_p = map.jacobian(state.q + ht * state.qd) * state.qd;
  const Vector jqd_m = map.jacobian(state.q - ht * state.qd) * state.qd;
  const Vector jdqd_fd = (jqd_p - jqd_m) / (2.0 * ht);
  const Vector jdqd = map.jacobian_dot(state.q, state.qd) * state.qd;

  TaskMapCheckReport report;
  report.max_rel_err_jacobian =
      (J - J_fd).cwiseAbs().maxCoeff() / (J_fd.cwiseAbs().maxCoeff() + 1e-9);
  report.max_rel_err_jacobian_dot =
      (jdqd - jdqd_fd).cwiseAbs().maxCoeff() / (jdqd_fd.cwiseAbs().maxCoeff() + 1e-9);
  return report;
}

Spec pullback_spec(const TaskMap& map, const Spec& leaf, const State& root_state) {
  if (leaf.dim() != map.codomain_dim()) {
    throw DimensionMismatchError("pullback_spec: leaf spec does not match map codomain");
  }
  if (root_state.dim() != map.domain_dim()) {
    throw DimensionMismatchError("pullback_spec: root state does not match map domain");
  }
  const Matrix J = map.jacobian(root_state.q);
  const Matrix Jd = map.jacobian_dot(root_state.q, root_state.qd);
  Matrix M_root = J.transpose() * leaf.M * J;
  // Symmetrize to keep the PSD-by-construction property under rounding.
  M_root = 0.5 * (M_root + M_root.transpose());
  Vector xi_root = J.transpose() * (leaf.M * (Jd * root_state.qd) + leaf.xi);
  return Spec(std::move(M_root), std::move(xi_root));
}

Spec pull_tree_spec(std::span<const TreeLeaf> leaves, const State& root_state) {
  if (leaves.empty()) {
    throw FabricError("pull_tree_spec: no leaves");
  }
  std::vector<Spec> pulled;
  pulled.reserve(leaves.size());
  for (const TreeLeaf& leaf : leaves) {
    const State xs = leaf.map->leaf_state(root_state);
    pulled.push_back(pullback_spec(*leaf.map, leaf.spec_fn(xs), root_state));
  }
  return sum_specs(pulled);
}

Generator make_zero_generator(int n) {
  return Generator{
      SecondOrderSystem([n](const State&) { return Vector::Zero(n); },
                        SystemTag::kGenerator),
      Homogeneity::kHd2, "zero"};
}

Generator make_barrier_generator(std::shared_ptr<const ScalarField> phi) {
  return Generator{
      SecondOrderSystem(
          [phi](const State& s) -> Vector {
            return -s.qd.squaredNorm() * phi->gradient(s.q);
          },
          SystemTag::kGenerator),
      Homogeneity::kHd2, "barrier(" + phi->name() + ")"};
}

Generator make_attractor_generator(Vector goal, double eps_dir) {
  return Generator{
      SecondOrderSystem(
          [goal = std::move(goal), eps_dir](const State& s) -> Vector {
            return -s.qd.squaredNorm() * softnorm(s.q - goal, eps_dir);
          },
          SystemTag::kGenerator),
      Homogeneity::kHd2, "attractor"};
}

Generator make_tree_generator(std::vector<TreeLeaf> leaves, Homogeneity tag,
                              std::string name) {
  auto shared = std::make_shared<std::vector<TreeLeaf>>(std::move(leaves));
  return Generator{
      SecondOrderSystem(
          [shared](const State& s) -> Vector {
            const Spec root = pull_tree_spec(*shared, s);
            return spec_to_acceleration(root, s);
          },
          SystemTag::kGenerator),
      tag, std::move(name)};
}

}  // namespace fabrics
