#include "fabrics/scenario.hpp"
#include "fabrics/trajectory_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalAbort = 3;

int run_one(const std::string& path, const std::string& out_dir,
            const std::string& format, bool do_export) {
  const fabrics::Scenario scenario = fabrics::load_scenario(path);
  const fabrics::ScenarioResult result = fabrics::run_scenario(scenario);

  std::cout << format_report(scenario.name, result.report);
  std::cout << "steps=" << result.trajectory.size()
            << " converged=" << (result.converged ? "yes" : "no") << "\n";

  if (do_export) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base =
        std::filesystem::path(out_dir) / scenario.name;
    if (format == "csv") {
      fabrics::export_trajectory_csv(result.trajectory, base.string() + ".csv");
      std::cout << "wrote " << base.string() << ".csv\n";
    } else {
      fabrics::export_trajectory_json(result.trajectory, base.string() + ".json");
      std::cout << "wrote " << base.string() << ".json\n";
    }
  }
  return result.report.all_pass() ? kExitPass : kExitCheckFailed;
}

int run_suite(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "suite: no scenario files in " << dir << "\n";
    return kExitConfigError;
  }

  struct Outcome {
    std::string file;
    std::string text;
    int code;
  };

  // Scenarios are independent; fan out across workers and join.
  std::vector<std::future<Outcome>> futures;
  futures.reserve(files.size());
  for (const std::string& file : files) {
    futures.push_back(std::async(std::launch::async, [file]() -> Outcome {
      try {
        const fabrics::Scenario scenario = fabrics::load_scenario(file);
        const fabrics::ScenarioResult result = fabrics::run_scenario(scenario);
        return Outcome{file, format_report(scenario.name, result.report),
                       result.report.all_pass() ? kExitPass : kExitCheckFailed};
      } catch (const fabrics::NonFiniteStateError& e) {
        return Outcome{file, std::string("ABORT ") + e.what() + "\n",
                       kExitNumericalAbort};
      } catch (const fabrics::FabricError& e) {
        return Outcome{file, std::string("ERROR ") + e.what() + "\n",
                       kExitConfigError};
      }
    }));
  }

  int exit_code = kExitPass;
  for (auto& f : futures) {
    const Outcome outcome = f.get();
    std::cout << "== " << outcome.file << "\n" << outcome.text;
    exit_code = std::max(exit_code, outcome.code);
  }
  std::cout << (exit_code == kExitPass ? "suite: all scenarios pass\n"
                                       : "suite: failures detected\n");
  return exit_code;
}

int run_check_derivatives(const std::string& path) {
  const fabrics::Scenario scenario = fabrics::load_scenario(path);
  const std::vector<fabrics::State> samples =
      fabrics::sample_states(scenario.dimension, scenario.seed, 20, scenario.q0);

  bool ok = true;
  double worst_energy = 0.0;
  for (const fabrics::State& s : samples) {
    const fabrics::DerivativeCheckReport r =
        fd_check_energy_derivatives(*scenario.energy, s);
    worst_energy = std::max({worst_energy, r.max_rel_err_metric,
                             r.max_rel_err_curvature, r.max_rel_err_gradient});
  }
  ok = ok && worst_energy < 1e-5;
  std::cout << (worst_energy < 1e-5 ? "PASS" : "FAIL")
            << "  energy_derivatives  max_rel_err=" << worst_energy
            << "  threshold=1e-05\n";

  if (scenario.potential) {
    double worst_grad = 0.0;
    for (const fabrics::State& s : samples) {
      worst_grad =
          std::max(worst_grad, fd_check_gradient(*scenario.potential->field, s.q));
    }
    ok = ok && worst_grad < 1e-5;
    std::cout << (worst_grad < 1e-5 ? "PASS" : "FAIL")
              << "  potential_gradient  max_rel_err=" << worst_grad
              << "  threshold=1e-05\n";
  }
  return ok ? kExitPass : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fabric_sim: rollout, audit, and export fabric scenarios"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = ".", format = "csv", suite_dir;

  CLI::App* run = app.add_subcommand("run", "run a scenario and export its trajectory");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--format", format, "trajectory format")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* audit = app.add_subcommand("audit", "run a scenario's invariant audit only");
  audit->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI::App* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("dir", suite_dir, "directory of scenario JSON files")->required();

  CLI::App* checkd =
      app.add_subcommand("check-derivatives", "run the finite-difference oracles");
  checkd->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_one(scenario_path, out_dir, format, true);
    if (audit->parsed()) return run_one(scenario_path, out_dir, format, false);
    if (suite->parsed()) return run_suite(suite_dir);
    if (checkd->parsed()) return run_check_derivatives(scenario_path);
  } catch (const fabrics::NonFiniteStateError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumericalAbort;
  } catch (const fabrics::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const fabrics::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const fabrics::UnknownComponentError& e) {
    std::cerr << "unknown component: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const fabrics::FabricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
