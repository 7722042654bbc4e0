#pragma once

#include "fabrics/simulation.hpp"

#include <iosfwd>
#include <string>

namespace fabrics {

class IoError : public FabricError {
 public:
  using FabricError::FabricError;
};

/// Columns: t, q_0..q_{n-1}, qd_0.., qdd_0.., L, H. L and H cells are blank
/// when not recorded. Floating point is written with 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void export_trajectory_csv(const Trajectory& traj, const std::string& path);

/// JSON mirror of the Trajectory structure; lossless round trip.
void write_trajectory_json(const Trajectory& traj, std::ostream& out);
void export_trajectory_json(const Trajectory& traj, const std::string& path);

Trajectory import_trajectory_json(const std::string& path);
Trajectory parse_trajectory_json(const std::string& text);

std::string format_double(double x);  // %.17g

}  // namespace fabrics
