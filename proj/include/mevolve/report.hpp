#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mevolve/config.hpp"

namespace mevolve {

nlohmann::json to_json(const GridFunction& u);
nlohmann::json to_json(const Certificate& c);
nlohmann::json to_json(const ScenarioSpec& s, bool certificates = true);
nlohmann::json to_json(const IterationReport& r);
nlohmann::json to_json(const EquilibriumReport& r);

/// Everything one `run` produces.
struct RunResult {
  ScenarioSpec scenario;
  ProblemSpec scaled;
  IterationReport iteration;  // from the configured u0
  SandwichCertificate sandwich;
  double mild_residual_min;
  double mild_residual_max;
  Trajectory U_min;
  Trajectory U_max;
  double time_violation_min;
  double time_violation_max;
  EquilibriumReport equilibria;
  std::vector<std::string> flags;  // empty when converged and certified

  int exit_code() const { return flags.empty() ? 0 : 2; }
  nlohmann::json report(bool certificates = true) const;
};

RunResult run_config(const RunConfig& config);

/// report.json plus U_min/U_max/u_min/u_max CSVs, as enabled in the config.
void write_outputs(const RunResult& result, const RunConfig& config,
                   const std::filesystem::path& dir);

/// Certificates only: sub/super-solution margins, sub-markovian test and
/// the quasi-increasing shift.
struct VerifyResult {
  bool passed;
  nlohmann::json report;
};
VerifyResult verify_config(const RunConfig& config);

/// Principal eigen data of the configured generator(s) and potentials.
nlohmann::json eig_config(const RunConfig& config);

}  // namespace mevolve
