#pragma once

#include "fabrics/energization.hpp"
#include "fabrics/energy.hpp"
#include "fabrics/fields.hpp"
#include "fabrics/geometry.hpp"
#include "fabrics/regulation.hpp"
#include "fabrics/simulation.hpp"
#include "fabrics/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fabrics {

class ParseError : public FabricError {
 public:
  using FabricError::FabricError;
};

/// Schema violation; the message names the offending field path.
class ValidationError : public FabricError {
 public:
  using FabricError::FabricError;
};

class UnknownComponentError : public FabricError {
 public:
  using FabricError::FabricError;
};

enum class PolicyKind { kNone, kDefaultCompatible, kDampedPotential, kConstant };
enum class RegulatorKind {
  kNone,
  kDamperMatrix,
  kDamperScalar,
  kCapping1,
  kCapping2,
  kTheoremMain
};

struct RegulatorConfig {
  RegulatorKind kind = RegulatorKind::kNone;
  double L_max = 1.0;
  double gamma_max = 1.0;
  double beta = 1.0;
  double sigma = 1e-6;  // eta guard length scale for theorem_main / capping_2
  Matrix B;             // damper matrix where applicable
};

struct TwinAuditConfig {
  double speed_scale = 2.0;
  double arc_length = 1.0;
  int samples = 200;
};

/// A fully validated scenario: configuration plus the instantiated components.
struct Scenario {
  std::string name;
  int dimension = 0;
  std::uint64_t seed = 0;

  Generator generator;
  std::shared_ptr<const FinslerEnergy> energy;
  EnergizationOptions energization;

  PolicyKind policy_kind = PolicyKind::kNone;
  std::optional<NavigationPolicy> policy;
  Matrix policy_damping;           // B inside the policy, when it has one
  SystemMetricFn system_metric;    // set for damped_potential policies

  RegulatorConfig regulator;
  std::optional<Potential> potential;

  Vector q0;
  Vector qd0;
  double dt = 1e-3;
  double duration = 10.0;
  std::optional<ConvergenceCriterion> criterion;
  std::optional<TwinAuditConfig> twin;
};

struct CheckEntry {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct InvariantReport {
  std::vector<CheckEntry> entries;
  bool complete = true;

  bool all_pass() const;
  int failures() const;
};

struct ScenarioResult {
  Trajectory trajectory;
  bool converged = false;
  InvariantReport report;
};

/// Parse and validate a scenario file. The FABRIC_SEED environment variable,
/// when set, overrides the scenario seed.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& origin);

/// The assembled acceleration field for the scenario's full system.
SecondOrderSystem assemble_system(const Scenario& scenario);

/// Roll out the scenario and run the audit set applicable to its
/// configuration. Aborts from the primary rollout propagate; audit-internal
/// aborts mark the report incomplete.
ScenarioResult run_scenario(const Scenario& scenario);

std::string format_report(const std::string& scenario_name,
                          const InvariantReport& report);

/// Deterministic sample states for audits: positions in a box around q0,
/// velocities with norms in [0.1, speed_max].
std::vector<State> sample_states(int n, std::uint64_t seed, int count,
                                 const Vector& q_center, double q_radius = 1.0,
                                 double speed_max = 2.0);

}  // namespace fabrics
