#pragma once

#include "fabrics/energy.hpp"
#include "fabrics/fields.hpp"
#include "fabrics/geometry.hpp"
#include "fabrics/types.hpp"

#include <memory>

namespace fabrics {

struct Energization {
  Accel accel;
  double alpha;
};

/// Exact energization: alpha = -qd'(M_L h + xi_L) / (qd' M_L qd), output
/// h + alpha qd. Throws DegenerateVelocityError when Z <= eps_z; callers must
/// switch to a vanishing/robust variant near rest.
Energization energize(const SecondOrderSystem& h, const FinslerEnergy& energy,
                      const State& state, double eps_z = kEpsZ);

/// Vanishing variant: alpha = -qd'(M_L h + xi_L) / (Z + eps); continuous at
/// qd = 0 with alpha -> 0.
Energization energize_vanishing(const SecondOrderSystem& h,
                                const FinslerEnergy& energy, const State& state,
                                double eps = 1e-8);

/// Robust variant: eta_sigma(||qd||) * energize_vanishing(...), with
/// eta_sigma(s) = 1 - exp(-s^2 / (2 sigma^2)). Output at qd = 0 is exactly 0,
/// preserving unbiasedness for biased generators. The returned alpha is the
/// effective coefficient, i.e. eval = eta*h + alpha*qd exactly.
Energization energize_robust(const SecondOrderSystem& h,
                             const FinslerEnergy& energy, const State& state,
                             double eps = 1e-8, double sigma = 0.1);

/// Total-energy variant used by the convergence regulator:
/// alpha = -(1/Z) qd'(M_L hf + xi_L + grad psi). The undamped system
/// hf + alpha qd conserves H = L + psi.
Energization energize_total(const SecondOrderSystem& h_plus_f,
                            const FinslerEnergy& energy,
                            const Potential& potential, const State& state,
                            double eps_z = kEpsZ);

/// Guarded total energization for use inside integrators:
/// alpha = -eta_sigma(||qd||) qd'(M_L hf + xi_L + grad psi) / (Z + eps_z).
Energization energize_total_guarded(const SecondOrderSystem& h_plus_f,
                                    const FinslerEnergy& energy,
                                    const Potential& potential,
                                    const State& state, double eps_z = 1e-12,
                                    double sigma = 1e-4);

double eta_sigma(double speed, double sigma);

enum class EnergizationVariant { kExact, kVanishing, kRobust };

struct EnergizationOptions {
  EnergizationVariant variant = EnergizationVariant::kRobust;
  double eps = 1e-8;
  double sigma = 0.1;
  double eps_z = kEpsZ;
};

/// A generator turned into a fabric by energization. For every variant,
/// evaluate(s) == decompose(s).base + decompose(s).alpha * s.qd exactly.
class EnergizedFabric {
 public:
  EnergizedFabric(Generator generator, std::shared_ptr<const FinslerEnergy> energy,
                  EnergizationOptions options = {});

  struct Decomposition {
    Vector base;
    double alpha;
  };

  Decomposition decompose(const State& state) const;
  Vector evaluate(const State& state) const;
  double alpha(const State& state) const;
  SecondOrderSystem system() const;

  const Generator& generator() const { return generator_; }
  const FinslerEnergy& energy() const { return *energy_; }
  std::shared_ptr<const FinslerEnergy> energy_ptr() const { return energy_; }
  const EnergizationOptions& options() const { return options_; }

 private:
  Generator generator_;
  std::shared_ptr<const FinslerEnergy> energy_;
  EnergizationOptions options_;
};

/// Exchange rate gamma = qd' M_L f / Z of the steered-fabric identity
/// energize[h] + f == energize[h+f] + gamma qd.
double steering_exchange_rate(const EnergyEval& e, const State& state,
                              const Vector& f, double eps_z = kEpsZ);

/// P_perp = M^{-1/2} (I - vhat vhat') M^{1/2} with v = M^{1/2} qd; the
/// zero-work steering projection. Computed by symmetric eigendecomposition.
Matrix motion_orthogonal_projection(const EnergyEval& e, const State& state,
                                    double eps_z = kEpsZ);

/// Principal square root of a symmetric PD matrix.
Matrix spd_sqrt(const Matrix& M);

}  // namespace fabrics
