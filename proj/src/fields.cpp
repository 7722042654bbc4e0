#include "fabrics/fields.hpp"

#include <cmath>

namespace fabrics {

QuadraticField::QuadraticField(Vector center, double stiffness)
    : center_(std::move(center)), stiffness_(stiffness) {}

double QuadraticField::value(const Vector& q) const {
  return 0.5 * stiffness_ * (q - center_).squaredNorm();
}

Vector QuadraticField::gradient(const Vector& q) const {
  return stiffness_ * (q - center_);
}

GaussianBumpField::GaussianBumpField(Vector center, double amplitude, double width)
    : center_(std::move(center)), amplitude_(amplitude), width_(width) {
  if (width_ <= 0.0) {
    throw FabricError("GaussianBumpField: width must be positive");
  }
}

double GaussianBumpField::value(const Vector& q) const {
  const double d2 = (q - center_).squaredNorm();
  return amplitude_ * std::exp(-d2 / (2.0 * width_ * width_));
}

Vector GaussianBumpField::gradient(const Vector& q) const {
  const Vector d = q - center_;
  const double v = amplitude_ * std::exp(-d.squaredNorm() / (2.0 * width_ * width_));
  return (-v / (width_ * width_)) * d;
}

double fd_check_gradient(const ScalarField& field, const Vector& q, double step) {
  const Vector g = field.gradient(q);
  const int n = static_cast<int>(q.size());
  const double h = step * (1.0 + q.norm());
  Vector g_fd(n);
  for (int i = 0; i < n; ++i) {
    Vector qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    g_fd[i] = (field.value(qp) - field.value(qm)) / (2.0 * h);
  }
  return (g - g_fd).cwiseAbs().maxCoeff() / (g_fd.cwiseAbs().maxCoeff() + 1e-9);
}

Vector softnorm(const Vector& v, double eps) {
  return v / (v.norm() + eps);
}

}  // namespace fabrics
