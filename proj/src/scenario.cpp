#include "fabrics/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace fabrics {

using nlohmann::json;

bool InvariantReport::all_pass() const {
  if (!complete) return false;
  return std::all_of(entries.begin(), entries.end(),
                     [](const CheckEntry& e) { return e.pass; });
}

int InvariantReport::failures() const {
  int n = complete ? 0 : 1;
  for (const CheckEntry& e : entries) {
    if (!e.pass) ++n;
  }
  return n;
}

namespace {

[[noreturn]] void fail_validation(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    fail_validation(path + "." + key, "missing required field");
  }
  return j.at(key);
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail_validation(path, "expected a number");
  return j.get<double>();
}

double get_number(const json& j, const std::string& key, const std::string& path,
                  double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_number(j.at(key), path + "." + key);
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail_validation(path, "expected a string");
  return j.get<std::string>();
}

Vector parse_vector(const json& j, const std::string& path, int expected = -1) {
  if (!j.is_array()) fail_validation(path, "expected an array of numbers");
  Vector v(j.size());
  Eigen::Index i = 0;
  for (const auto& x : j) {
    if (!x.is_number()) fail_validation(path, "expected an array of numbers");
    v[i++] = x.get<double>();
  }
  if (expected >= 0 && v.size() != expected) {
    fail_validation(path, "expected length " + std::to_string(expected) +
                              " to match top-level dimension, got " +
                              std::to_string(v.size()));
  }
  return v;
}

// Accepts a full matrix [[..]], a diagonal [..], or a scalar (scaled identity).
Matrix parse_matrix(const json& j, const std::string& path, int n) {
  if (j.is_number()) {
    return j.get<double>() * Matrix::Identity(n, n);
  }
  if (j.is_array() && !j.empty() && j.front().is_number()) {
    const Vector d = parse_vector(j, path, n);
    return d.asDiagonal();
  }
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != n) {
      fail_validation(path, "expected " + std::to_string(n) + " rows");
    }
    Matrix m(n, n);
    int r = 0;
    for (const auto& row : j) {
      m.row(r++) = parse_vector(row, path, n).transpose();
    }
    return m;
  }
  fail_validation(path, "expected a matrix, diagonal, or scalar");
}

std::shared_ptr<const ScalarField> parse_scalar_field(const json& j,
                                                      const std::string& path,
                                                      int n) {
  const std::string type = get_string(require(j, "type", path), path + ".type");
  if (type == "quadratic") {
    Vector center = parse_vector(require(j, "center", path), path + ".center", n);
    const double k = get_number(j, "stiffness", path, 1.0);
    return std::make_shared<QuadraticField>(std::move(center), k);
  }
  if (type == "gaussian_bump") {
    Vector center = parse_vector(require(j, "center", path), path + ".center", n);
    const double amplitude = get_number(require(j, "amplitude", path), path + ".amplitude");
    const double width = get_number(require(j, "width", path), path + ".width");
    return std::make_shared<GaussianBumpField>(std::move(center), amplitude, width);
  }
  throw UnknownComponentError(path + ".type: unknown scalar field '" + type + "'");
}

std::shared_ptr<const MetricField> parse_metric_field(const json& j,
                                                      const std::string& path,
                                                      int n) {
  const std::string type = get_string(require(j, "type", path), path + ".type");
  if (type == "constant") {
    return std::make_shared<ConstantMetricField>(
        parse_matrix(require(j, "matrix", path), path + ".matrix", n));
  }
  if (type == "scalar_poly") {
    const double offset = get_number(j, "offset", path, 1.0);
    const double scale = get_number(j, "scale", path, 1.0);
    Vector weights = parse_vector(require(j, "weights", path), path + ".weights", n);
    return std::make_shared<ScalarPolyMetricField>(n, offset, scale, std::move(weights));
  }
  throw UnknownComponentError(path + ".type: unknown metric field '" + type + "'");
}

std::shared_ptr<const TaskMap> parse_task_map(const json& j, const std::string& path,
                                              int n) {
  const std::string type = get_string(require(j, "type", path), path + ".type");
  if (type == "identity") return std::make_shared<IdentityMap>(n);
  if (type == "linear") {
    Matrix A = parse_matrix(require(j, "matrix", path), path + ".matrix", n);
    return std::make_shared<LinearMap>(std::move(A));
  }
  if (type == "polar") {
    if (n != 2) fail_validation(path, "polar map requires dimension 2");
    return std::make_shared<PolarMap>();
  }
  throw UnknownComponentError(path + ".type: unknown task map '" + type + "'");
}

TreeLeaf parse_tree_leaf(const json& j, const std::string& path, int n) {
  TreeLeaf leaf;
  leaf.map = parse_task_map(require(j, "map", path), path + ".map", n);
  const json& spec = require(j, "spec", path);
  const std::string spec_path = path + ".spec";
  const std::string type = get_string(require(spec, "type", spec_path), spec_path + ".type");
  const int m = leaf.map->codomain_dim();
  if (type == "constant") {
    Matrix M = parse_matrix(require(spec, "M", spec_path), spec_path + ".M", m);
    Vector xi = parse_vector(require(spec, "xi", spec_path), spec_path + ".xi", m);
    Spec fixed(std::move(M), std::move(xi));
    leaf.spec_fn = [fixed](const State&) { return fixed; };
    return leaf;
  }
  if (type == "geodesic") {
    auto metric = parse_metric_field(require(spec, "metric", spec_path),
                                     spec_path + ".metric", m);
    auto energy = std::make_shared<RiemannianEnergy>(metric);
    leaf.spec_fn = [energy](const State& s) {
      const EnergyEval e = energy->evaluate(s);
      return Spec(e.M, e.xi);
    };
    return leaf;
  }
  throw UnknownComponentError(spec_path + ".type: unknown leaf spec '" + type + "'");
}

Generator parse_generator(const json& j, const std::string& path, int n) {
  const std::string type = get_string(require(j, "type", path), path + ".type");
  if (type == "zero") return make_zero_generator(n);
  if (type == "barrier") {
    return make_barrier_generator(
        parse_scalar_field(require(j, "field", path), path + ".field", n));
  }
  if (type == "attractor") {
    Vector goal = parse_vector(require(j, "goal", path), path + ".goal", n);
    const double eps_dir = get_number(j, "eps_dir", path, 1e-6);
    return make_attractor_generator(std::move(goal), eps_dir);
  }
  if (type == "tree") {
    const json& leaves = require(j, "leaves", path);
    if (!leaves.is_array() || leaves.empty()) {
      fail_validation(path + ".leaves", "expected a non-empty array");
    }
    std::vector<TreeLeaf> parsed;
    int i = 0;
    for (const auto& leaf : leaves) {
      parsed.push_back(
          parse_tree_leaf(leaf, path + ".leaves[" + std::to_string(i) + "]", n));
      ++i;
    }
    return make_tree_generator(std::move(parsed), Homogeneity::kHd2, "tree");
  }
  throw UnknownComponentError(path + ".type: unknown generator '" + type + "'");
}

std::shared_ptr<const FinslerEnergy> parse_energy(const json& j,
                                                  const std::string& path, int n) {
  const std::string type = get_string(require(j, "type", path), path + ".type");
  if (type == "euclidean") return std::make_shared<EuclideanEnergy>(n);
  if (type == "riemannian") {
    return std::make_shared<RiemannianEnergy>(
        parse_metric_field(require(j, "metric", path), path + ".metric", n));
  }
  throw UnknownComponentError(path + ".type: unknown energy '" + type + "'");
}

EnergizationOptions parse_energization(const json& j, const std::string& path) {
  EnergizationOptions opts;
  if (j.is_null()) return opts;
  const std::string variant =
      get_string(require(j, "variant", path), path + ".variant");
  if (variant == "exact") opts.variant = EnergizationVariant::kExact;
  else if (variant == "vanishing") opts.variant = EnergizationVariant::kVanishing;
  else if (variant == "robust") opts.variant = EnergizationVariant::kRobust;
  else throw UnknownComponentError(path + ".variant: unknown variant '" + variant + "'");
  opts.eps = get_number(j, "eps", path, opts.eps);
  opts.sigma = get_number(j, "sigma", path, opts.sigma);
  if (opts.eps <= 0.0) fail_validation(path + ".eps", "must be positive");
  if (opts.sigma <= 0.0) fail_validation(path + ".sigma", "must be positive");
  return opts;
}

SystemMetricFn parse_system_metric(const json& j, const std::string& path, int n,
                                   std::shared_ptr<const FinslerEnergy> energy) {
  if (j.is_null()) {
    return [n](const State&) { return Matrix::Identity(n, n); };
  }
  const std::string type = get_string(require(j, "type", path), path + ".type");
  if (type == "identity") {
    return [n](const State&) { return Matrix::Identity(n, n); };
  }
  if (type == "energy_tensor") {
    return [energy](const State& s) { return evaluate_energy(*energy, s).M; };
  }
  if (type == "constant") {
    Matrix M = parse_matrix(require(j, "matrix", path), path + ".matrix", n);
    if (!is_strictly_positive_definite(M)) {
      fail_validation(path + ".matrix", "system metric must be SPD");
    }
    return [M](const State&) { return M; };
  }
  throw UnknownComponentError(path + ".type: unknown system metric '" + type + "'");
}

}  // namespace

std::vector<State> sample_states(int n, std::uint64_t seed, int count,
                                 const Vector& q_center, double q_radius,
                                 double speed_max) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  };
  std::vector<State> states;
  states.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vector q(n), qd(n);
    for (int i = 0; i < n; ++i) q[i] = q_center[i] + q_radius * (2.0 * uniform() - 1.0);
    double norm = 0.0;
    while (norm < 1e-3) {
      for (int i = 0; i < n; ++i) qd[i] = 2.0 * uniform() - 1.0;
      norm = qd.norm();
    }
    const double speed = 0.1 + (speed_max - 0.1) * uniform();
    qd *= speed / norm;
    states.emplace_back(std::move(q), std::move(qd));
  }
  return states;
}

Scenario parse_scenario(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(origin + ": top level must be an object");

  const int version =
      static_cast<int>(get_number(require(j, "schema_version", "$"), "schema_version"));
  if (version != 1) {
    fail_validation("schema_version", "unsupported version " + std::to_string(version));
  }

  Scenario sc;
  sc.name = get_string(require(j, "name", "$"), "name");
  const double dim = get_number(require(j, "dimension", "$"), "dimension");
  if (dim < 1 || dim != std::floor(dim)) {
    fail_validation("dimension", "must be a positive integer");
  }
  const int n = static_cast<int>(dim);
  sc.dimension = n;

  sc.seed = j.contains("seed")
                ? static_cast<std::uint64_t>(get_number(j.at("seed"), "seed"))
                : 0;
  if (const char* env_seed = std::getenv("FABRIC_SEED")) {
    sc.seed = std::strtoull(env_seed, nullptr, 10);
  }

  sc.generator = parse_generator(require(j, "generator", "$"), "generator", n);
  sc.energy = parse_energy(require(j, "energy", "$"), "energy", n);
  sc.energization = parse_energization(
      j.contains("energization") ? j.at("energization") : json(), "energization");

  if (j.contains("potential")) {
    sc.potential = Potential{parse_scalar_field(j.at("potential"), "potential", n)};
  }

  // Policy (may reference the potential).
  const json policy_json = j.contains("policy") ? j.at("policy") : json{{"type", "none"}};
  const std::string policy_type =
      get_string(require(policy_json, "type", "policy"), "policy.type");
  if (policy_type == "none") {
    sc.policy_kind = PolicyKind::kNone;
  } else if (policy_type == "default_compatible") {
    if (!sc.potential) fail_validation("policy", "default_compatible requires a potential");
    sc.policy_kind = PolicyKind::kDefaultCompatible;
    const double eps = get_number(policy_json, "eps", "policy", 1e-6);
    sc.policy_damping = policy_json.contains("damping")
                            ? parse_matrix(policy_json.at("damping"), "policy.damping", n)
                            : Matrix::Identity(n, n);
    sc.policy = default_compatible_policy(*sc.potential, eps, sc.policy_damping);
  } else if (policy_type == "damped_potential") {
    if (!sc.potential) fail_validation("policy", "damped_potential requires a potential");
    sc.policy_kind = PolicyKind::kDampedPotential;
    sc.policy_damping = policy_json.contains("damping")
                            ? parse_matrix(policy_json.at("damping"), "policy.damping", n)
                            : Matrix::Identity(n, n);
    sc.system_metric = parse_system_metric(
        policy_json.contains("metric") ? policy_json.at("metric") : json(),
        "policy.metric", n, sc.energy);
    auto field = sc.potential->field;
    auto metric = sc.system_metric;
    Matrix B = sc.policy_damping;
    sc.policy = NavigationPolicy{
        SecondOrderSystem(
            [field, metric, B](const State& s) -> Vector {
              return -solve_spd(metric(s), field->gradient(s.q) + B * s.qd);
            },
            SystemTag::kForced),
        "minimizers of " + field->name()};
  } else if (policy_type == "constant") {
    sc.policy_kind = PolicyKind::kConstant;
    Vector accel = parse_vector(require(policy_json, "accel", "policy"), "policy.accel", n);
    sc.policy = NavigationPolicy{
        SecondOrderSystem([accel](const State&) { return accel; }, SystemTag::kForced),
        "empty (persistent drive)"};
  } else {
    throw UnknownComponentError("policy.type: unknown policy '" + policy_type + "'");
  }

  // Regulator.
  const json reg_json = j.contains("regulator") ? j.at("regulator") : json{{"type", "none"}};
  const std::string reg_type =
      get_string(require(reg_json, "type", "regulator"), "regulator.type");
  RegulatorConfig& reg = sc.regulator;
  if (reg_type == "none") {
    reg.kind = RegulatorKind::kNone;
  } else if (reg_type == "damper_matrix") {
    reg.kind = RegulatorKind::kDamperMatrix;
    reg.B = reg_json.contains("damping")
                ? parse_matrix(reg_json.at("damping"), "regulator.damping", n)
                : Matrix::Identity(n, n);
  } else if (reg_type == "damper_scalar") {
    reg.kind = RegulatorKind::kDamperScalar;
    reg.beta = get_number(reg_json, "beta", "regulator", 1.0);
    if (reg.beta < 0.0) fail_validation("regulator.beta", "must be nonnegative");
  } else if (reg_type == "capping_1") {
    reg.kind = RegulatorKind::kCapping1;
    reg.L_max = get_number(reg_json, "L_max", "regulator", 1.0);
    reg.gamma_max = get_number(reg_json, "gamma_max", "regulator", 1.0);
    reg.B = reg_json.contains("damping")
                ? parse_matrix(reg_json.at("damping"), "regulator.damping", n)
                : Matrix::Identity(n, n);
    if (reg.L_max <= 0.0) fail_validation("regulator.L_max", "must be positive");
    if (reg.gamma_max <= 0.0) fail_validation("regulator.gamma_max", "must be positive");
  } else if (reg_type == "capping_2") {
    reg.kind = RegulatorKind::kCapping2;
    reg.L_max = get_number(reg_json, "L_max", "regulator", 1.0);
    reg.beta = get_number(reg_json, "beta", "regulator", 1.0);
    reg.sigma = get_number(reg_json, "sigma", "regulator", 1e-6);
    if (reg.L_max <= 0.0) fail_validation("regulator.L_max", "must be positive");
    if (reg.beta < 0.0) fail_validation("regulator.beta", "must be nonnegative");
  } else if (reg_type == "theorem_main") {
    reg.kind = RegulatorKind::kTheoremMain;
    reg.beta = get_number(reg_json, "beta", "regulator", 1.0);
    reg.sigma = get_number(reg_json, "sigma", "regulator", 1e-6);
    if (!sc.potential) fail_validation("regulator", "theorem_main requires a potential");
    if (reg.beta < 0.0) fail_validation("regulator.beta", "must be nonnegative");
  } else {
    throw UnknownComponentError("regulator.type: unknown regulator '" + reg_type + "'");
  }

  const json& init = require(j, "initial_state", "$");
  sc.q0 = parse_vector(require(init, "q", "initial_state"), "initial_state.q", n);
  sc.qd0 = parse_vector(require(init, "qd", "initial_state"), "initial_state.qd", n);

  sc.dt = get_number(j, "dt", "$", 1e-3);
  sc.duration = get_number(j, "duration", "$", 10.0);
  if (sc.dt <= 0.0) fail_validation("dt", "must be positive");
  if (sc.duration <= 0.0) fail_validation("duration", "must be positive");

  if (j.contains("convergence")) {
    const json& c = j.at("convergence");
    ConvergenceCriterion crit;
    crit.speed_tol = get_number(c, "speed_tol", "convergence", 1e-4);
    crit.accel_tol = get_number(c, "accel_tol", "convergence", 1e-4);
    crit.hold_steps = static_cast<int>(get_number(c, "hold_steps", "convergence", 100));
    if (crit.speed_tol <= 0.0 || crit.accel_tol <= 0.0 || crit.hold_steps <= 0) {
      fail_validation("convergence", "tolerances and hold_steps must be positive");
    }
    sc.criterion = crit;
  }

  if (j.contains("audits")) {
    const json& a = j.at("audits");
    if (a.contains("path_consistency_twin")) {
      const json& t = a.at("path_consistency_twin");
      TwinAuditConfig twin;
      twin.speed_scale = get_number(t, "speed_scale", "audits.path_consistency_twin", 2.0);
      twin.arc_length = get_number(t, "arc_length", "audits.path_consistency_twin", 1.0);
      twin.samples =
          static_cast<int>(get_number(t, "samples", "audits.path_consistency_twin", 200));
      if (twin.speed_scale <= 0.0 || twin.arc_length <= 0.0 || twin.samples < 2) {
        fail_validation("audits.path_consistency_twin", "invalid twin parameters");
      }
      sc.twin = twin;
    }
  }

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_scenario(buf.str(), path);
}

SecondOrderSystem assemble_system(const Scenario& sc) {
  auto fabric = std::make_shared<EnergizedFabric>(sc.generator, sc.energy,
                                                  sc.energization);
  auto energy = sc.energy;
  const auto policy = sc.policy;
  auto f_of = [policy](const State& s) -> Vector {
    return policy ? (*policy)(s) : Vector(Vector::Zero(s.dim()));
  };
  const RegulatorConfig reg = sc.regulator;

  switch (reg.kind) {
    case RegulatorKind::kNone:
      return SecondOrderSystem(
          [fabric, f_of](const State& s) -> Vector {
            return fabric->evaluate(s) + f_of(s);
          },
          sc.policy ? SystemTag::kForced : SystemTag::kFabric);

    case RegulatorKind::kDamperMatrix: {
      Matrix B = reg.B;
      return SecondOrderSystem(
          [fabric, f_of, energy, B](const State& s) -> Vector {
            return fabric->evaluate(s) + f_of(s) + damper_matrix(*energy, s, B);
          },
          SystemTag::kForced);
    }

    case RegulatorKind::kDamperScalar: {
      const double beta = reg.beta;
      return SecondOrderSystem(
          [fabric, f_of, beta](const State& s) -> Vector {
            return fabric->evaluate(s) + f_of(s) - beta * s.qd;
          },
          SystemTag::kForced);
    }

    case RegulatorKind::kCapping1: {
      const GateFunction gate = linear_gate_variant1(reg.L_max, reg.gamma_max);
      Matrix B = reg.B;
      return SecondOrderSystem(
          [fabric, f_of, energy, gate, B](const State& s) {
            const Vector f = f_of(s);
            const double lambda = energy_cap_lambda_1(*energy, s, f, B, gate);
            const EnergyEval e = evaluate_energy(*energy, s);
            return Vector(fabric->evaluate(s) + f -
                          lambda * solve_spd(e.M, B * s.qd));
          },
          SystemTag::kForced);
    }

    case RegulatorKind::kCapping2: {
      const GateFunction gate = linear_gate_variant2(reg.L_max);
      const double beta = reg.beta;
      const double sigma = reg.sigma;
      return SecondOrderSystem(
          [fabric, f_of, energy, gate, beta, sigma](const State& s) {
            const Vector f = f_of(s);
            const CapTwoResult cap =
                energy_cap_2(*energy, s, f, gate, beta, 1e-12, sigma);
            return Vector(fabric->evaluate(s) + f + cap.term);
          },
          SystemTag::kForced);
    }

    case RegulatorKind::kTheoremMain: {
      // The damped total-energized system of the convergence theorem:
      // qdd = h + f + alpha qd - beta qd with alpha from the total energy.
      const Generator gen = sc.generator;
      const Potential pot = *sc.potential;
      const double beta = reg.beta;
      const double sigma = reg.sigma;
      return SecondOrderSystem(
          [gen, f_of, energy, pot, beta, sigma](const State& s) {
            const EnergyEval e = evaluate_energy(*energy, s);
            const Vector hf = gen(s) + f_of(s);
            const double Z = s.qd.dot(e.M * s.qd);
            const double eta = eta_sigma(s.qd.norm(), sigma);
            const double alpha =
                -eta * s.qd.dot(e.M * hf + e.xi + pot.gradient(s.q)) / (Z + 1e-12);
            return Vector(hf + (alpha - beta) * s.qd);
          },
          SystemTag::kForced);
    }
  }
  throw FabricError("assemble_system: unknown regulator kind");
}

namespace {

void add_entry(InvariantReport& report, std::string name, double measured,
               double threshold, bool pass, std::string note = "") {
  report.entries.push_back(
      CheckEntry{std::move(name), measured, threshold, pass, std::move(note)});
}

double max_step_increase(const std::vector<double>& series) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < series.size(); ++k) {
    worst = std::max(worst, series[k] - series[k - 1]);
  }
  return series.size() > 1 ? worst : 0.0;
}

}  // namespace

ScenarioResult run_scenario(const Scenario& sc) {
  const SecondOrderSystem system = assemble_system(sc);

  RolloutOptions opts;
  opts.dt = sc.dt;
  opts.duration = sc.duration;
  opts.energy = sc.energy.get();
  opts.potential = sc.potential ? &*sc.potential : nullptr;
  opts.criterion = sc.criterion;

  ScenarioResult result;
  const RolloutResult rr = rollout(system, State(sc.q0, sc.qd0), opts);
  result.trajectory = rr.trajectory;
  result.converged = rr.converged;
  InvariantReport& report = result.report;

  const Trajectory& traj = result.trajectory;
  const bool pure_fabric =
      sc.policy_kind == PolicyKind::kNone && sc.regulator.kind == RegulatorKind::kNone;

  if (pure_fabric) {
    const DriftReport drift = energy_drift(traj);
    add_entry(report, "conservation.max_rel_drift", drift.max_rel_drift, 1e-6,
              drift.max_rel_drift < 1e-6);
    if (sc.generator.homogeneity == Homogeneity::kHd2) {
      const std::vector<State> samples =
          sample_states(sc.dimension, sc.seed, 100, sc.q0);
      const double lambdas[] = {0.0, 0.5, 2.0, 10.0};
      const Hd2Report hd2 = check_hd2(sc.generator, samples, lambdas);
      add_entry(report, "generator.hd2_violation", hd2.max_rel_violation, 1e-9,
                hd2.max_rel_violation < 1e-9);
    }
  }

  if (sc.regulator.kind == RegulatorKind::kCapping1 ||
      sc.regulator.kind == RegulatorKind::kCapping2) {
    const double max_L =
        *std::max_element(traj.energies.begin(), traj.energies.end());
    add_entry(report, "capping.max_energy", max_L, sc.regulator.L_max + 1e-6,
              max_L <= sc.regulator.L_max + 1e-6);
  }

  if (sc.regulator.kind == RegulatorKind::kTheoremMain) {
    const double worst_rise = max_step_increase(traj.total_energies);
    std::string note = sc.regulator.beta == 0.0
                           ? "no damping (conserved, not descending)"
                           : "";
    add_entry(report, "theorem_main.max_H_step_increase", worst_rise, 1e-8,
              worst_rise <= 1e-8, std::move(note));

    const Vector q_final = traj.states.back().q;
    const double f_rest =
        sc.policy ? sc.policy->at_rest(q_final).norm() : 0.0;
    add_entry(report, "theorem_main.zero_set_proximity", f_rest, 1e-3,
              !result.converged || f_rest < 1e-3,
              result.converged ? "" : "not converged; implication holds vacuously");

    if (sc.policy_kind == PolicyKind::kDefaultCompatible) {
      std::vector<State> samples = sample_states(sc.dimension, sc.seed, 50, sc.q0, 2.0);
      std::vector<Vector> points;
      points.reserve(samples.size());
      for (const State& s : samples) points.push_back(s.q);
      const CompatibilityReport comp =
          check_compatible(*sc.potential, *sc.policy, points);
      add_entry(report, "theorem_main.compatibility_violations",
                static_cast<double>(comp.violations), 0.0, comp.violations == 0);
    }
  }

  if (sc.policy_kind == PolicyKind::kDampedPotential) {
    const EnergizedFabric fabric(sc.generator, sc.energy, sc.energization);
    const double beta =
        sc.regulator.kind == RegulatorKind::kDamperScalar ? sc.regulator.beta : 0.0;
    const LyapunovMonitorReport monitor = lyapunov_monitor_section4(
        fabric, sc.system_metric, sc.policy_damping, beta, traj);
    add_entry(report, "section4.monitor_fraction_positive", monitor.fraction_positive,
              0.99, monitor.fraction_positive >= 0.99,
              "min margin " + std::to_string(monitor.min_margin));
    add_entry(report, "section4.converged", result.converged ? 1.0 : 0.0, 1.0,
              result.converged);
    const double grad_rest = sc.potential->gradient(traj.states.back().q).norm();
    add_entry(report, "section4.rest_gradient_norm", grad_rest, 1e-3,
              !result.converged || grad_rest < 1e-3,
              result.converged ? "" : "not converged");
  }

  if ((sc.regulator.kind == RegulatorKind::kDamperMatrix ||
       sc.regulator.kind == RegulatorKind::kDamperScalar) &&
      sc.policy_kind == PolicyKind::kNone) {
    const double worst_rise = max_step_increase(traj.energies);
    const double tol = 1e-9 * (1.0 + traj.energies.front());
    add_entry(report, "damping.max_L_step_increase", worst_rise, tol,
              worst_rise <= tol);
    add_entry(report, "damping.converged", result.converged ? 1.0 : 0.0, 1.0,
              result.converged);
  }

  if (sc.twin) {
    try {
      const State twin0(sc.q0, sc.twin->speed_scale * sc.qd0);
      const RolloutResult twin_rr = rollout(system, twin0, opts);
      const std::vector<Vector> base_pos = traj.positions();
      const std::vector<Vector> twin_pos = twin_rr.trajectory.positions();
      const std::vector<Vector> base_cut =
          truncate_arclength(base_pos, sc.twin->arc_length);
      const std::vector<Vector> twin_cut =
          truncate_arclength(twin_pos, sc.twin->arc_length);
      const double dist =
          path_distance(resample_arclength(std::span<const Vector>(base_cut), sc.twin->samples),
                        resample_arclength(std::span<const Vector>(twin_cut), sc.twin->samples));
      add_entry(report, "path_consistency.twin_distance", dist, 1e-3, dist < 1e-3);
    } catch (const FabricError& e) {
      report.complete = false;
      add_entry(report, "path_consistency.twin_distance", 0.0, 1e-3, false,
                std::string("audit aborted: ") + e.what());
    }
  }

  return result;
}

std::string format_report(const std::string& scenario_name,
                          const InvariantReport& report) {
  std::ostringstream out;
  for (const CheckEntry& e : report.entries) {
    out << (e.pass ? "PASS" : "FAIL") << "  " << scenario_name << "." << e.name
        << "  measured=" << e.measured << "  threshold=" << e.threshold;
    if (!e.note.empty()) out << "  (" << e.note << ")";
    out << "\n";
  }
  if (!report.complete) {
    out << "FAIL  " << scenario_name << ".report_incomplete\n";
  }
  return out.str();
}

}  // namespace fabrics
