#include "fabrics/geometry.hpp"

#include "fabrics/energy.hpp"
#include "fabrics/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace fabrics;

namespace {

std::vector<State> seeded_states(int n, int count, std::uint64_t seed) {
  testing::Rng rng(seed);
  std::vector<State> states;
  for (int i = 0; i < count; ++i) states.push_back(rng.state(n));
  return states;
}

const std::vector<double> kLambdas{0.0, 0.5, 2.0, 10.0};

}  // namespace

TEST_CASE("check_hd2") {
  const std::vector<State> states = seeded_states(2, 20, 7);

  SUBCASE("zero generator has no violation") {
    const Hd2Report r = check_hd2(make_zero_generator(2), states, kLambdas);
    CHECK(r.max_rel_violation == 0.0);
  }

  SUBCASE("||qd||^2 c is exactly HD2") {
    Vector c(2);
    c << 0.3, -0.7;
    Generator g{SecondOrderSystem(
                    [c](const State& s) -> Vector { return s.qd.squaredNorm() * c; },
                    SystemTag::kGenerator),
                Homogeneity::kHd2, "quadratic"};
    const double lambda2[] = {2.0};
    const Hd2Report r = check_hd2(g, states, lambda2);
    CHECK(r.max_rel_violation < 1e-15);
  }

  SUBCASE("an HD1 system reports 0.5 at lambda = 2") {
    Generator g{SecondOrderSystem([](const State& s) -> Vector { return s.qd; },
                                  SystemTag::kGenerator),
                Homogeneity::kGeneral, "hd1"};
    const double lambda2[] = {2.0};
    const Hd2Report r = check_hd2(g, states, lambda2);
    // ||2qd - 4qd|| / ||4qd|| = 0.5
    CHECK(r.max_rel_violation == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("built-in generators pass check_hd2") {
  const std::vector<State> states = seeded_states(2, 100, 99);

  Vector center(2), goal(2);
  center << 0.0, 1.0;
  goal << 1.5, -0.5;
  std::vector<Generator> gens;
  gens.push_back(make_zero_generator(2));
  gens.push_back(make_barrier_generator(
      std::make_shared<GaussianBumpField>(center, 1.0, 0.5)));
  gens.push_back(make_attractor_generator(goal));

  for (const Generator& g : gens) {
    CAPTURE(g.name);
    const Hd2Report r = check_hd2(g, states, kLambdas);
    CHECK(r.max_rel_violation < 1e-9);
  }
}

TEST_CASE("task map derivative checks") {
  testing::Rng rng(17);

  SUBCASE("linear map is exact") {
    Matrix A(2, 2);
    A << 2.0, 0.0, 0.0, 1.0;
    LinearMap map(A);
    const TaskMapCheckReport r = fd_check_task_map(map, rng.state(2));
    CHECK(r.max_rel_err_jacobian < 1e-10);
    CHECK(r.max_rel_err_jacobian_dot < 1e-10);
  }

  SUBCASE("polar map matches finite differences") {
    PolarMap map;
    for (int i = 0; i < 20; ++i) {
      Vector q(2);
      q << rng.uniform(0.5, 2.0), rng.uniform(-3.0, 3.0);
      const State s(q, rng.velocity(2));
      const TaskMapCheckReport r = fd_check_task_map(map, s);
      CHECK(r.max_rel_err_jacobian < 1e-5);
      CHECK(r.max_rel_err_jacobian_dot < 1e-4);
    }
  }
}

TEST_CASE("pullback_spec") {
  SUBCASE("identity map returns the leaf spec") {
    testing::Rng rng(23);
    IdentityMap map(2);
    const Spec leaf(rng.spd(2), rng.vector(2));
    const Spec root = pullback_spec(map, leaf, rng.state(2));
    CHECK((root.M - leaf.M).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((root.xi - leaf.xi).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("constant diagonal scaling") {
    Matrix A(2, 2);
    A << 2.0, 0.0, 0.0, 1.0;
    LinearMap map(A);
    const Spec leaf(Matrix::Identity(2, 2), Vector::Zero(2));
    const Spec root = pullback_spec(map, leaf, State(Vector::Zero(2), Vector::Zero(2)));
    CHECK(root.M(0, 0) == doctest::Approx(4.0));
    CHECK(root.M(1, 1) == doctest::Approx(1.0));
    CHECK(root.xi.isZero(0.0));
  }

  SUBCASE("dimension mismatch") {
    IdentityMap map(2);
    const Spec leaf(Matrix::Identity(3, 3), Vector::Zero(3));
    CHECK_THROWS_AS(pullback_spec(map, leaf, State(Vector::Zero(2), Vector::Zero(2))),
                    DimensionMismatchError);
  }

  SUBCASE("preserves symmetry and positive semidefiniteness") {
    testing::Rng rng(29);
    for (int i = 0; i < 30; ++i) {
      Matrix A(2, 2);
      A << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2);
      LinearMap map(A);
      const Spec leaf(rng.spd(2), rng.vector(2));
      const Spec root = pullback_spec(map, leaf, rng.state(2));
      CHECK(is_symmetric(root.M));
      Eigen::SelfAdjointEigenSolver<Matrix> es(root.M, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
  }

  SUBCASE("composition of linear maps") {
    testing::Rng rng(31);
    Matrix A(2, 2), B(2, 2);
    A << 1.0, 0.5, 0.0, 2.0;
    B << 0.5, -1.0, 1.0, 1.0;
    LinearMap first(A), second(B), composed(B * A);
    for (int i = 0; i < 20; ++i) {
      const State root_state = rng.state(2);
      const Spec leaf(rng.spd(2), rng.vector(2));
      // Pull back through B at the intermediate state, then through A.
      const State mid = first.leaf_state(root_state);
      const Spec through_b = pullback_spec(second, leaf, mid);
      const Spec stepwise = pullback_spec(first, through_b, root_state);
      const Spec direct = pullback_spec(composed, leaf, root_state);
      CHECK((stepwise.M - direct.M).cwiseAbs().maxCoeff() /
                (direct.M.cwiseAbs().maxCoeff() + 1e-12) <
            1e-8);
      CHECK((stepwise.xi - direct.xi).cwiseAbs().maxCoeff() /
                (direct.xi.cwiseAbs().maxCoeff() + 1e-12) <
            1e-8);
    }
  }
}

TEST_CASE("pullback energy-rate chain rule through the polar map") {
  // Leaf: geodesic spec of a position-dependent metric in Cartesian space.
  // Root: polar coordinates. The pulled-back system's leaf-space energy rate
  // must match a finite difference of the leaf energy along the rollout.
  auto map = std::make_shared<PolarMap>();
  Vector w(2);
  w << 1.0, 1.0;
  auto leaf_metric = std::make_shared<ScalarPolyMetricField>(2, 1.0, 0.3, w);
  auto leaf_energy = std::make_shared<RiemannianEnergy>(leaf_metric);

  TreeLeaf leaf;
  leaf.map = map;
  leaf.spec_fn = [leaf_energy](const State& xs) {
    const EnergyEval e = leaf_energy->evaluate(xs);
    return Spec(e.M, e.xi);
  };
  std::vector<TreeLeaf> leaves{leaf};

  SecondOrderSystem system(
      [leaves](const State& s) {
        return spec_to_acceleration(pull_tree_spec(leaves, s), s);
      },
      SystemTag::kGenerator);

  Vector q0(2), qd0(2);
  q0 << 1.2, 0.4;
  qd0 << 0.3, 0.8;

  RolloutOptions opts;
  opts.dt = 1e-3;
  opts.duration = 0.5;
  const RolloutResult rr = rollout(system, State(q0, qd0), opts);

  // Leaf energy along the rollout.
  std::vector<double> leaf_L(rr.trajectory.size());
  for (std::size_t k = 0; k < rr.trajectory.size(); ++k) {
    leaf_L[k] = leaf_energy->evaluate(map->leaf_state(rr.trajectory.states[k])).value;
  }
  for (std::size_t k = 1; k + 1 < rr.trajectory.size(); k += 25) {
    const State& s = rr.trajectory.states[k];
    const Vector qdd = rr.trajectory.accels[k];
    const State xs = map->leaf_state(s);
    const Vector xdd =
        map->jacobian_dot(s.q, s.qd) * s.qd + map->jacobian(s.q) * qdd;
    const double analytic = energy_rate(*leaf_energy, xs, xdd);
    const double fd = (leaf_L[k + 1] - leaf_L[k - 1]) / (2.0 * opts.dt);
    CHECK(analytic == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("barrier generator") {
  Vector center(2);
  center << 0.0, 1.0;
  auto phi = std::make_shared<GaussianBumpField>(center, 1.0, 0.5);
  const Generator barrier = make_barrier_generator(phi);

  SUBCASE("zero-gradient region gives zero output") {
    Vector far(2);
    far << 100.0, 100.0;
    const Vector h = barrier(State(far, Vector::Ones(2)));
    CHECK(h.norm() < 1e-12);
  }

  SUBCASE("doubling velocity quadruples output") {
    Vector q(2), qd(2);
    q << 0.2, 0.6;
    qd << 0.5, -0.3;
    const Vector h1 = barrier(State(q, qd));
    const Vector h2 = barrier(State(q, 2.0 * qd));
    CHECK((h2 - 4.0 * h1).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("rollout bends away from the obstacle") {
    Vector q0(2), qd0(2);
    q0 << -2.0, 0.9;  // heading roughly at the bump
    qd0 << 1.0, 0.0;
    RolloutOptions opts;
    opts.dt = 1e-3;
    opts.duration = 4.0;
    const RolloutResult with_barrier = rollout(barrier.system, State(q0, qd0), opts);
    const RolloutResult straight =
        rollout(make_zero_generator(2).system, State(q0, qd0), opts);

    auto min_distance = [&center](const Trajectory& t) {
      double best = std::numeric_limits<double>::infinity();
      for (const State& s : t.states) best = std::min(best, (s.q - center).norm());
      return best;
    };
    CHECK(min_distance(with_barrier.trajectory) > min_distance(straight.trajectory));
  }
}

TEST_CASE("attractor generator") {
  Vector goal(2);
  goal << 1.0, 1.0;
  const Generator attractor = make_attractor_generator(goal);

  SUBCASE("zero at the goal and at rest") {
    CHECK(attractor(State(goal, Vector::Ones(2))).norm() < 1e-5);
    CHECK(attractor(State(Vector::Zero(2), Vector::Zero(2))).norm() == 0.0);
  }

  SUBCASE("doubling velocity quadruples output") {
    Vector q(2), qd(2);
    q << -0.5, 0.3;
    qd << 0.4, 0.4;
    const Vector h1 = attractor(State(q, qd));
    const Vector h2 = attractor(State(q, 2.0 * qd));
    CHECK((h2 - 4.0 * h1).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("pulls toward the goal") {
    Vector q(2);
    q << -1.0, 1.0;
    const Vector h = attractor(State(q, Vector::Ones(2)));
    CHECK(h.dot(goal - q) > 0.0);
  }
}

TEST_CASE("softnorm") {
  Vector v(2);
  v << 3.0, 4.0;
  CHECK(softnorm(v).norm() == doctest::Approx(5.0 / (5.0 + 1e-6)));
  CHECK(softnorm(Vector::Zero(2)).norm() == 0.0);
}
