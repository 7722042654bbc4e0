#pragma once

#include "fabrics/types.hpp"

#include <memory>
#include <string>

namespace fabrics {

/// Scalar field on configuration space with analytic gradient.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual int dim() const = 0;
  virtual double value(const Vector& q) const = 0;
  virtual Vector gradient(const Vector& q) const = 0;
  virtual std::string name() const = 0;
};

/// 0.5 * k * ||q - center||^2
class QuadraticField : public ScalarField {
 public:
  QuadraticField(Vector center, double stiffness = 1.0);
  int dim() const override { return static_cast<int>(center_.size()); }
  double value(const Vector& q) const override;
  Vector gradient(const Vector& q) const override;
  std::string name() const override { return "quadratic"; }
  const Vector& center() const { return center_; }

 private:
  Vector center_;
  double stiffness_;
};

/// amplitude * exp(-||q - center||^2 / (2 width^2)); a smooth repulsive bump.
class GaussianBumpField : public ScalarField {
 public:
  GaussianBumpField(Vector center, double amplitude, double width);
  int dim() const override { return static_cast<int>(center_.size()); }
  double value(const Vector& q) const override;
  Vector gradient(const Vector& q) const override;
  std::string name() const override { return "gaussian_bump"; }

 private:
  Vector center_;
  double amplitude_;
  double width_;
};

/// Potential psi: nonnegative scalar field used for forcing and regulation.
struct Potential {
  std::shared_ptr<const ScalarField> field;

  double value(const Vector& q) const { return field->value(q); }
  Vector gradient(const Vector& q) const { return field->gradient(q); }
  int dim() const { return field->dim(); }
};

/// Max relative error between the analytic gradient and a central difference
/// of the value, over the given point.
double fd_check_gradient(const ScalarField& field, const Vector& q,
                         double step = 1e-5);

/// v / (||v|| + eps): bounded direction field, smooth at v = 0.
Vector softnorm(const Vector& v, double eps = 1e-6);

}  // namespace fabrics
