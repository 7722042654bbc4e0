#include "fabrics/energization.hpp"

#include "fabrics/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace fabrics;

namespace {

Generator biased_constant_generator(Vector bias) {
  return Generator{
      SecondOrderSystem([bias = std::move(bias)](const State&) { return bias; },
                        SystemTag::kGenerator),
      Homogeneity::kGeneral, "biased"};
}

SecondOrderSystem constant_system(Vector value) {
  return SecondOrderSystem(
      [value = std::move(value)](const State&) { return value; },
      SystemTag::kGenerator);
}

std::shared_ptr<const FinslerEnergy> riemannian_2d() {
  Vector w(2);
  w << 1.0, 0.5;
  return std::make_shared<RiemannianEnergy>(
      std::make_shared<ScalarPolyMetricField>(2, 1.0, 0.5, w));
}

Generator test_barrier() {
  Vector center(2);
  center << 0.0, 1.0;
  return make_barrier_generator(
      std::make_shared<GaussianBumpField>(center, 1.0, 0.5));
}

}  // namespace

TEST_CASE("energize on the Euclidean energy") {
  EuclideanEnergy energy(2);
  Vector q = Vector::Zero(2);

  SUBCASE("force orthogonal to motion is untouched") {
    Vector qd(2), h(2);
    qd << 1.0, 0.0;
    h << 0.0, 1.0;
    const Energization r = energize(constant_system(h), energy, State(q, qd));
    CHECK(r.alpha == doctest::Approx(0.0));
    CHECK((r.accel - h).norm() == doctest::Approx(0.0));
  }

  SUBCASE("collinear component is fully removed") {
    Vector qd(2), h(2);
    qd << 1.0, 0.0;
    h << 2.0, 0.0;
    const Energization r = energize(constant_system(h), energy, State(q, qd));
    CHECK(r.alpha == doctest::Approx(-2.0));
    CHECK(r.accel.norm() == doctest::Approx(0.0));
  }

  SUBCASE("output is orthogonal to motion under M_L") {
    Vector qd(2), h(2);
    qd << 1.0, 1.0;
    h << 1.0, 0.0;
    const Energization r = energize(constant_system(h), energy, State(q, qd));
    CHECK(r.alpha == doctest::Approx(-0.5));
    CHECK(r.accel[0] == doctest::Approx(0.5));
    CHECK(r.accel[1] == doctest::Approx(-0.5));
    CHECK(qd.dot(r.accel) == doctest::Approx(0.0));
  }

  SUBCASE("degenerate velocity is rejected") {
    CHECK_THROWS_AS(
        energize(constant_system(Vector::Ones(2)), energy, State(q, Vector::Zero(2))),
        DegenerateVelocityError);
  }
}

TEST_CASE("energized systems have zero energy rate") {
  // Cross-module conservation oracle: energy_rate of the energized output
  // vanishes pointwise for every generator/energy pair.
  testing::Rng rng(55);
  std::vector<std::shared_ptr<const FinslerEnergy>> energies{
      std::make_shared<EuclideanEnergy>(2), riemannian_2d()};
  Vector goal(2);
  goal << 1.0, -1.0;
  std::vector<Generator> gens{test_barrier(), make_attractor_generator(goal),
                              make_zero_generator(2)};

  for (const auto& energy : energies) {
    for (const Generator& gen : gens) {
      for (int i = 0; i < 50; ++i) {
        const State s = rng.state(2);
        const Energization r = energize(gen.system, *energy, s);
        const double rate = energy_rate(*energy, s, r.accel);
        const double scale = evaluate_energy(*energy, s).value + 1.0;
        CHECK(std::abs(rate) / scale < 1e-9);
      }
    }
  }
}

TEST_CASE("energize_vanishing") {
  EuclideanEnergy energy(2);

  SUBCASE("zero velocity gives alpha = 0 and passes h through") {
    Vector h(2);
    h << 3.0, -1.0;
    const Energization r = energize_vanishing(constant_system(h), energy,
                                              State(Vector::Zero(2), Vector::Zero(2)));
    CHECK(r.alpha == 0.0);
    CHECK((r.accel - h).norm() == 0.0);
  }

  SUBCASE("matches the exact transform away from rest") {
    testing::Rng rng(66);
    const Generator gen = test_barrier();
    for (int i = 0; i < 30; ++i) {
      State s = rng.state(2);
      s = State(s.q, s.qd / s.qd.norm());  // speed exactly 1
      const Energization exact = energize(gen.system, energy, s);
      const Energization vanishing = energize_vanishing(gen.system, energy, s, 1e-8);
      CHECK((exact.accel - vanishing.accel).norm() /
                (exact.accel.norm() + 1e-12) <
            1e-6);
    }
  }

  SUBCASE("rollout drift scales down with eps") {
    const Generator gen = test_barrier();
    auto energy_ptr = std::make_shared<EuclideanEnergy>(2);
    Vector q0(2), qd0(2);
    q0 << -2.0, 0.85;
    qd0 << 1.0, 0.0;

    auto drift_at = [&](double eps) {
      EnergizationOptions opts;
      opts.variant = EnergizationVariant::kVanishing;
      opts.eps = eps;
      EnergizedFabric fabric(gen, energy_ptr, opts);
      RolloutOptions ro;
      ro.dt = 1e-3;
      ro.duration = 10.0;
      ro.energy = energy_ptr.get();
      return energy_drift(rollout(fabric.system(), State(q0, qd0), ro).trajectory)
          .max_rel_drift;
    };

    const double coarse = drift_at(1e-4);
    const double fine = drift_at(1e-6);
    CHECK(fine < coarse / 10.0);  // O(eps) scaling
    CHECK(coarse < 1e-2);
  }
}

TEST_CASE("energize_robust") {
  EuclideanEnergy energy(2);
  Vector bias(2);
  bias << 5.0, 5.0;
  const Generator biased = biased_constant_generator(bias);

  SUBCASE("exactly zero at rest even for a biased generator") {
    const Energization r = energize_robust(biased.system, energy,
                                           State(Vector::Zero(2), Vector::Zero(2)));
    CHECK(r.accel[0] == 0.0);
    CHECK(r.accel[1] == 0.0);
    CHECK(r.alpha == 0.0);
  }

  SUBCASE("far field matches the vanishing variant") {
    const double sigma = 0.1;
    Vector qd(2);
    qd << 10.0 * sigma, 0.0;
    const State s(Vector::Zero(2), qd);
    CHECK(std::abs(eta_sigma(qd.norm(), sigma) - 1.0) < 1e-9);
    const Energization robust = energize_robust(biased.system, energy, s, 1e-8, sigma);
    const Energization vanishing = energize_vanishing(biased.system, energy, s, 1e-8);
    CHECK((robust.accel - vanishing.accel).norm() < 1e-9 * vanishing.accel.norm());
  }

  SUBCASE("a biased generator at rest stays at rest") {
    Vector small_bias(2);
    small_bias << 1.0, 0.0;
    EnergizedFabric fabric(biased_constant_generator(small_bias),
                           std::make_shared<EuclideanEnergy>(2), {});
    RolloutOptions ro;
    ro.dt = 1e-3;
    ro.duration = 1.0;
    const Vector q0 = Vector::Zero(2);
    const RolloutResult rr = rollout(fabric.system(), State(q0, Vector::Zero(2)), ro);
    CHECK((rr.trajectory.states.back().q - q0).norm() < 1e-12);
  }
}

TEST_CASE("energize_total") {
  auto energy = std::make_shared<EuclideanEnergy>(2);
  Potential psi{std::make_shared<QuadraticField>(Vector::Zero(2), 1.0)};

  SUBCASE("reduces to plain energization for flat potentials") {
    Potential flat{std::make_shared<QuadraticField>(Vector::Zero(2), 0.0)};
    testing::Rng rng(77);
    const Generator gen = test_barrier();
    for (int i = 0; i < 20; ++i) {
      const State s = rng.state(2);
      const Energization plain = energize(gen.system, *energy, s);
      const Energization total = energize_total(gen.system, *energy, flat, s);
      CHECK((plain.accel - total.accel).norm() < 1e-12);
    }
  }

  SUBCASE("velocity orthogonal to the gradient leaves alpha zero") {
    Vector q(2), qd(2);
    q << 1.0, 0.0;
    qd << 0.0, 1.0;
    const Energization r =
        energize_total(constant_system(Vector::Zero(2)), *energy, psi, State(q, qd));
    CHECK(r.alpha == doctest::Approx(0.0));
  }

  SUBCASE("velocity along the gradient") {
    Vector q(2), qd(2);
    q << 1.0, 0.0;
    qd << 1.0, 0.0;
    const Energization r =
        energize_total(constant_system(Vector::Zero(2)), *energy, psi, State(q, qd));
    CHECK(r.alpha == doctest::Approx(-1.0));
  }

  SUBCASE("guarded rollout conserves the total energy") {
    // h = f = 0 with a quadratic potential: the energized motion along the
    // gradient is harmonic and passes through turning points.
    SecondOrderSystem zero = constant_system(Vector::Zero(2));
    auto pot = psi;
    auto en = energy;
    SecondOrderSystem system(
        [zero, en, pot](const State& s) {
          return energize_total_guarded(zero, *en, pot, s).accel;
        },
        SystemTag::kComposite);

    Vector q0(2), qd0(2);
    q0 << 1.0, 0.0;
    qd0 << 1.0, 0.0;
    RolloutOptions ro;
    ro.dt = 1e-3;
    ro.duration = 10.0;
    ro.energy = en.get();
    ro.potential = &pot;
    const RolloutResult rr = rollout(system, State(q0, qd0), ro);
    const double H0 = rr.trajectory.total_energies.front();
    double worst = 0.0;
    for (double H : rr.trajectory.total_energies) {
      worst = std::max(worst, std::abs(H - H0) / H0);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("EnergizedFabric decomposition is exact for every variant") {
  testing::Rng rng(88);
  const Generator gen = test_barrier();
  auto energy = riemannian_2d();
  for (EnergizationVariant variant :
       {EnergizationVariant::kExact, EnergizationVariant::kVanishing,
        EnergizationVariant::kRobust}) {
    EnergizationOptions opts;
    opts.variant = variant;
    EnergizedFabric fabric(gen, energy, opts);
    for (int i = 0; i < 20; ++i) {
      const State s = rng.state(2);
      const auto d = fabric.decompose(s);
      CHECK((fabric.evaluate(s) - (d.base + d.alpha * s.qd)).norm() == 0.0);
    }
  }
}

TEST_CASE("steered fabric identity") {
  // energize[h] + f == energize[h+f] + gamma qd with gamma = qd' M_L f / Z.
  testing::Rng rng(111);
  std::vector<std::shared_ptr<const FinslerEnergy>> energies{
      std::make_shared<EuclideanEnergy>(2), riemannian_2d()};
  const Generator gen = test_barrier();

  for (const auto& energy : energies) {
    for (int i = 0; i < 100; ++i) {
      const State s = rng.state(2);
      const Vector f = rng.vector(2, -2.0, 2.0);
      const EnergyEval e = evaluate_energy(*energy, s);

      const Vector lhs = energize(gen.system, *energy, s).accel + f;

      SecondOrderSystem steered(
          [&gen, &f](const State& state) -> Vector { return gen(state) + f; },
          SystemTag::kComposite);
      const double gamma = steering_exchange_rate(e, s, f);
      const Vector rhs = energize(steered, *energy, s).accel + gamma * s.qd;

      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("zero-work projection identity") {
  // energize[h] + f == (energize[h] + gamma qd) + P_perp f, and the projected
  // term does no work: qd' M_L (P_perp f) == 0.
  testing::Rng rng(222);
  std::vector<std::shared_ptr<const FinslerEnergy>> energies{
      std::make_shared<EuclideanEnergy>(2), riemannian_2d()};
  const Generator gen = test_barrier();

  for (const auto& energy : energies) {
    for (int i = 0; i < 100; ++i) {
      const State s = rng.state(2);
      const Vector f = rng.vector(2, -2.0, 2.0);
      const EnergyEval e = evaluate_energy(*energy, s);

      const Matrix P = motion_orthogonal_projection(e, s);
      const double gamma = steering_exchange_rate(e, s, f);

      // P_perp f + gamma qd must reassemble f exactly.
      CHECK((P * f + gamma * s.qd - f).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(std::abs(s.qd.dot(e.M * (P * f))) < 1e-10);
    }
  }
}

TEST_CASE("energized HD2 generators stay HD2") {
  testing::Rng rng(333);
  std::vector<State> states;
  for (int i = 0; i < 50; ++i) states.push_back(rng.state(2));
  const double lambdas[] = {0.5, 2.0};

  std::vector<std::shared_ptr<const FinslerEnergy>> energies{
      std::make_shared<EuclideanEnergy>(2), riemannian_2d()};
  Vector goal(2);
  goal << 1.0, -1.0;
  std::vector<Generator> gens{test_barrier(), make_attractor_generator(goal)};

  for (const auto& energy : energies) {
    for (const Generator& gen : gens) {
      EnergizationOptions opts;
      opts.variant = EnergizationVariant::kExact;
      EnergizedFabric fabric(gen, energy, opts);
      Generator energized{fabric.system(), Homogeneity::kHd2, "energized"};
      const Hd2Report r = check_hd2(energized, states, lambdas);
      CHECK(r.max_rel_violation < 1e-8);
    }
  }
}

TEST_CASE("speed-scaled rollouts trace the same path") {
  const Generator gen = test_barrier();
  auto energy = std::make_shared<EuclideanEnergy>(2);
  EnergizationOptions opts;
  opts.variant = EnergizationVariant::kExact;
  EnergizedFabric fabric(gen, energy, opts);

  Vector q0(2), qd0(2);
  q0 << -2.0, 0.85;
  qd0 << 1.0, 0.0;

  RolloutOptions ro;
  ro.dt = 1e-3;
  ro.duration = 2.0;
  const RolloutResult slow = rollout(fabric.system(), State(q0, qd0), ro);
  const RolloutResult fast = rollout(fabric.system(), State(q0, 2.0 * qd0), ro);

  const auto slow_pos = slow.trajectory.positions();
  const auto fast_pos = fast.trajectory.positions();
  const auto slow_cut = truncate_arclength(slow_pos, 1.0);
  const auto fast_cut = truncate_arclength(fast_pos, 1.0);
  const double dist =
      path_distance(resample_arclength(std::span<const Vector>(slow_cut), 200),
                    resample_arclength(std::span<const Vector>(fast_cut), 200));
  CHECK(dist < 1e-3);
}
