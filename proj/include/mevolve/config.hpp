#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mevolve/monotone.hpp"
#include "mevolve/operators.hpp"
#include "mevolve/scenarios.hpp"

namespace mevolve {

struct MeshConfig {
  std::size_t n = 50;
  BoundaryCondition bc = BoundaryCondition::neumann();
};

/// Fisher weight: explicit values, or offset + amplitude * profile(x) with
/// profile one of "constant", "cos" (cos(pi x)), "sin" (sin(2 pi x)).
struct WeightConfig {
  std::optional<std::vector<double>> values;
  std::string profile = "constant";
  double amplitude = 0.0;
  double offset = 1.0;
};

/// Initial value of the `run` trajectories: an interval bound, a constant or
/// explicit values.
struct InitialValue {
  enum class Kind { lower, upper, constant, values };
  Kind kind = Kind::lower;
  double constant = 0.0;
  std::vector<double> values;
};

struct RunConfig {
  std::string scenario;
  std::map<std::string, double> params;
  MeshConfig mesh;
  std::optional<MeshConfig> mesh2;  // second species of the competition scenario
  WeightConfig weight;
  double dt = 0.02;
  std::optional<double> horizon;  // empty: "auto"
  double window = 2.0;            // window length used by "auto"
  EngineOptions engine;
  InitialValue u0;
  std::optional<double> eps;
  std::optional<double> M;
  std::string output = "out";
  bool emit_trajectories = true;
  bool emit_report = true;
  bool emit_certificates = true;
};

/// Parses a config document. Schema violations raise ValidationError whose
/// message starts with the offending field path (e.g. `config.mesh.n`).
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

GeneratorSpec build_generator(const MeshConfig& mesh);
/// Node coordinates on the unit interval for the mesh's boundary closure.
std::vector<double> mesh_coordinates(const MeshConfig& mesh);
GridFunction build_weight(const RunConfig& config);

ScenarioSpec build_scenario(const RunConfig& config);
GridFunction initial_value(const RunConfig& config, const OrderInterval& interval);

}  // namespace mevolve
