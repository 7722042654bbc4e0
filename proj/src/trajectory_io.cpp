#include "fabrics/trajectory_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fabrics {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const int n = traj.dim();
  out << "t";
  for (int i = 0; i < n; ++i) out << ",q_" << i;
  for (int i = 0; i < n; ++i) out << ",qd_" << i;
  for (int i = 0; i < n; ++i) out << ",qdd_" << i;
  out << ",L,H\n";

  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]);
    for (int i = 0; i < n; ++i) out << "," << format_double(traj.states[k].q[i]);
    for (int i = 0; i < n; ++i) out << "," << format_double(traj.states[k].qd[i]);
    for (int i = 0; i < n; ++i) out << "," << format_double(traj.accels[k][i]);
    out << ",";
    if (k < traj.energies.size()) out << format_double(traj.energies[k]);
    out << ",";
    if (k < traj.total_energies.size()) out << format_double(traj.total_energies[k]);
    out << "\n";
  }
}

void export_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("export_trajectory_csv: cannot open " + path);
  write_trajectory_csv(traj, file);
  if (!file.good()) throw IoError("export_trajectory_csv: write failed for " + path);
}

namespace {

void write_scalar_array(std::ostream& out, const std::vector<double>& xs) {
  out << "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out << ",";
    out << format_double(xs[i]);
  }
  out << "]";
}

void write_vector_array(std::ostream& out, const std::vector<Vector>& rows) {
  out << "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) out << ",";
    out << "[";
    for (Eigen::Index j = 0; j < rows[i].size(); ++j) {
      if (j > 0) out << ",";
      out << format_double(rows[i][j]);
    }
    out << "]";
  }
  out << "]";
}

}  // namespace

void write_trajectory_json(const Trajectory& traj, std::ostream& out) {
  std::vector<Vector> q, qd;
  q.reserve(traj.size());
  qd.reserve(traj.size());
  for (const State& s : traj.states) {
    q.push_back(s.q);
    qd.push_back(s.qd);
  }
  out << "{\"schema_version\":1,";
  out << "\"dt\":" << format_double(traj.dt) << ",";
  out << "\"times\":";
  write_scalar_array(out, traj.times);
  out << ",\"q\":";
  write_vector_array(out, q);
  out << ",\"qd\":";
  write_vector_array(out, qd);
  out << ",\"qdd\":";
  write_vector_array(out, traj.accels);
  out << ",\"L\":";
  write_scalar_array(out, traj.energies);
  out << ",\"H\":";
  write_scalar_array(out, traj.total_energies);
  out << "}\n";
}

void export_trajectory_json(const Trajectory& traj, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("export_trajectory_json: cannot open " + path);
  write_trajectory_json(traj, file);
  if (!file.good()) throw IoError("export_trajectory_json: write failed for " + path);
}

namespace {

std::vector<double> read_scalar_array(const nlohmann::json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(x.get<double>());
  return out;
}

std::vector<Vector> read_vector_array(const nlohmann::json& j) {
  std::vector<Vector> out;
  out.reserve(j.size());
  for (const auto& row : j) {
    Vector v(row.size());
    Eigen::Index i = 0;
    for (const auto& x : row) v[i++] = x.get<double>();
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

Trajectory parse_trajectory_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("parse_trajectory_json: ") + e.what());
  }
  Trajectory traj;
  traj.dt = j.at("dt").get<double>();
  traj.times = read_scalar_array(j.at("times"));
  const std::vector<Vector> q = read_vector_array(j.at("q"));
  const std::vector<Vector> qd = read_vector_array(j.at("qd"));
  traj.accels = read_vector_array(j.at("qdd"));
  traj.energies = read_scalar_array(j.at("L"));
  traj.total_energies = read_scalar_array(j.at("H"));
  if (q.size() != qd.size() || q.size() != traj.times.size()) {
    throw IoError("parse_trajectory_json: sequence lengths differ");
  }
  traj.states.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    traj.states.emplace_back(q[i], qd[i]);
  }
  return traj;
}

Trajectory import_trajectory_json(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("import_trajectory_json: cannot open " + path);
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_trajectory_json(buf.str());
}

}  // namespace fabrics
