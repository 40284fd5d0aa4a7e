#include "mevolve/report.hpp"

#include <cmath>
#include <fstream>

namespace mevolve {
namespace {

using nlohmann::json;

json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

json interval_json(const OrderInterval& I) {
  return {{"lower", to_json(I.lower())}, {"upper", to_json(I.upper())}, {"cone", I.cone().signs()}};
}

}  // namespace

json to_json(const GridFunction& u) {
  return numbers(std::vector<double>(u.values().data(), u.values().data() + u.size()));
}

json to_json(const Certificate& c) {
  return {{"passed", c.passed}, {"worst_margin", number(c.worst_margin)}};
}

json to_json(const ScenarioSpec& s, bool certificates) {
  json j = {{"name", s.name},
            {"nontrivial", s.nontrivial},
            {"eps", number(s.eps)},
            {"M", number(s.M)},
            {"notes", s.notes},
            {"interval", interval_json(s.problem.interval)}};
  json checks = json::object();
  for (const auto& [k, v] : s.checks) checks[k] = number(v);
  j["checks"] = checks;
  json eig = json::array();
  for (const auto& e : s.eigen) eig.push_back({{"operator", e.label}, {"lambda1", number(e.lambda1)}});
  j["eigen"] = eig;
  if (certificates) {
    j["certificates"] = {{"sub", to_json(s.sub)}, {"super", to_json(s.super)}};
  }
  if (s.global_interval) j["global_interval"] = interval_json(*s.global_interval);
  if (s.predicted_equilibrium) j["predicted_equilibrium"] = to_json(*s.predicted_equilibrium);
  if (!s.semi_trivial.empty()) {
    j["semi_trivial"] = {to_json(s.semi_trivial[0]), to_json(s.semi_trivial[1])};
  }
  if (s.closed_forms) {
    j["closed_forms"] = {{"a", s.closed_forms->a},
                         {"M", s.closed_forms->M},
                         {"t_M", number(s.closed_forms->t_M())},
                         {"equilibria", {-s.closed_forms->equilibrium(), 0.0,
                                         s.closed_forms->equilibrium()}}};
  }
  return j;
}

json to_json(const IterationReport& r) {
  json j = {{"n_iters", r.n_iters},
            {"converged", r.converged},
            {"lower_distances", numbers(r.lower_distances)},
            {"upper_distances", numbers(r.upper_distances)},
            {"sandwich_violations", numbers(r.sandwich_violations)},
            {"worst_violation", number(r.worst_violation)},
            {"contraction_factors", numbers(r.contraction_factors)},
            {"distances_monotone", r.distances_monotone},
            {"clamped_entries", r.clamped_entries},
            {"equilibrium_residuals", numbers(r.equilibrium_residuals)},
            {"max_gap", number(r.max_gap)},
            {"unique_flag", r.unique_flag}};
  if (r.u_star) j["u_star"] = to_json(*r.u_star);
  if (r.u_upper_star) j["u_upper_star"] = to_json(*r.u_upper_star);
  return j;
}

json to_json(const EquilibriumReport& r) {
  json newton = json::array();
  for (const auto& v : r.newton_equilibria) newton.push_back(to_json(v));
  return {{"u_star", to_json(r.u_star)},
          {"u_upper_star", to_json(r.u_upper_star)},
          {"residual_lower", number(r.residual_lower)},
          {"residual_upper", number(r.residual_upper)},
          {"residual_ok", r.residual_ok},
          {"horizon", number(r.horizon)},
          {"windows", r.windows},
          {"tail_increment", number(r.tail_increment)},
          {"horizon_capped", r.horizon_capped},
          {"windows_converged", r.windows_converged},
          {"total_iterations", r.total_iterations},
          {"order_violation", number(r.order_violation)},
          {"worst_sandwich", number(r.worst_sandwich)},
          {"worst_time_violation", number(r.worst_time_violation)},
          {"newton_equilibria", newton},
          {"minimality_violation", number(r.minimality_violation)},
          {"minimality_certified", r.minimality_certified}};
}

json RunResult::report(bool certificates) const {
  const auto& F = *scaled.nonlinearity;
  const auto& I = scaled.interval;
  json problem = {{"nonlinearity", F.name()},
                  {"nodes", I.nodes()},
                  {"components", I.cone().components()},
                  {"bc", to_string(scaled.generator.bc())},
                  {"dt", scaled.dt},
                  {"horizon", scaled.horizon},
                  {"shift", scaled.shift},
                  {"quasi_increasing_shift", number(F.quasi_increasing_shift(I))},
                  {"lipschitz", number(F.lipschitz_on(I))},
                  {"lipschitz_bounded", std::isfinite(F.lipschitz_on(I))},
                  {"spectral_bound", number(scaled.generator.spectral_bound())}};
  return {{"scenario", to_json(scenario, certificates)},
          {"problem", problem},
          {"iteration", to_json(iteration)},
          {"sandwich", {{"certified", sandwich.certified}, {"worst", number(sandwich.worst)}}},
          {"mild_residual", {{"u_min", number(mild_residual_min)}, {"u_max", number(mild_residual_max)}}},
          {"extremal",
           {{"horizon", number(U_min.horizon())},
            {"time_violation_min", number(time_violation_min)},
            {"time_violation_max", number(time_violation_max)}}},
          {"equilibria", to_json(equilibria)},
          {"flags", flags},
          {"status", flags.empty() ? "ok" : "flagged"}};
}

RunResult run_config(const RunConfig& config) {
  ScenarioSpec scenario = build_scenario(config);
  ProblemSpec scaled = prepare_problem(scenario.problem);
  const auto& I = scaled.interval;
  const GridFunction u0 = initial_value(config, I);
  const auto& opt = config.engine;

  IterationReport it = iterate(scaled, u0, opt);
  const SandwichCertificate sandwich = certify_sandwich(it);
  const double res_min = mild_residual(scaled, it.u_min);
  const double res_max = mild_residual(scaled, it.u_max);

  EquilibriumReport eq = asymptotic_equilibria(scaled, opt);
  Trajectory Umin, Umax;
  double tv_min = 0.0, tv_max = 0.0;
  if (config.horizon) {
    ExtremalTrajectories ex = extremal_trajectories(scaled, opt);
    Umin = ex.U_min;
    Umax = ex.U_max;
    tv_min = ex.time_violation_min;
    tv_max = ex.time_violation_max;
  } else {
    const Eigen::VectorXd signs = I.cone().entry_signs(I.nodes());
    Umin = eq.U_min;
    Umax = eq.U_max;
    tv_min = kernels::time_violation(opt.backend, Umin.states(), signs, true);
    tv_max = kernels::time_violation(opt.backend, Umax.states(), signs, false);
  }

  std::vector<std::string> flags;
  if (!it.converged) flags.push_back("iteration_not_converged");
  if (!sandwich.certified) flags.push_back("sandwich_not_certified");
  if (std::max(tv_min, tv_max) > kTolOrder) flags.push_back("time_monotonicity_violated");
  if (!eq.windows_converged) flags.push_back("window_not_converged");
  if (eq.horizon_capped) flags.push_back("horizon_capped");
  if (!eq.residual_ok) flags.push_back("equilibrium_residual_above_tol");
  if (eq.order_violation > kTolOrder) flags.push_back("equilibria_not_ordered");
  if (!eq.minimality_certified) flags.push_back("minimality_not_certified");

  return RunResult{std::move(scenario), std::move(scaled), std::move(it), sandwich, res_min,
                   res_max, std::move(Umin), std::move(Umax), tv_min, tv_max, std::move(eq),
                   std::move(flags)};
}

void write_outputs(const RunResult& result, const RunConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (config.emit_report) {
    std::ofstream out(dir / "report.json");
    if (!out) throw Error("cannot write " + (dir / "report.json").string());
    out << result.report(config.emit_certificates).dump(2) << '\n';
  }
  if (config.emit_trajectories) {
    write_csv((dir / "U_min.csv").string(), result.U_min);
    write_csv((dir / "U_max.csv").string(), result.U_max);
    write_csv((dir / "u_min.csv").string(), result.iteration.u_min);
    write_csv((dir / "u_max.csv").string(), result.iteration.u_max);
  }
}

VerifyResult verify_config(const RunConfig& config) {
  json j;
  bool passed = true;
  try {
    const ScenarioSpec s = build_scenario(config);
    j["scenario"] = to_json(s, true);
    const auto& I = s.problem.interval;
    const auto sm = submarkovian_report(s.problem.generator, 1e-3);
    j["submarkovian"] = {{"passed", sm.row_sum_test},
                         {"min_row_sum", number(sm.min_row_sum)},
                         {"max_semigroup_excess", number(sm.max_semigroup_excess)}};
    j["interval_ordered"] = order_violation(I.lower(), I.upper(), I.cone()) <= kTolOrder;
    try {
      j["quasi_increasing_shift"] = number(s.problem.nonlinearity->quasi_increasing_shift(I));
    } catch (const ValidationError& e) {
      j["quasi_increasing_shift"] = nullptr;
      j["quasi_increasing_error"] = e.what();
      passed = false;
    }
    passed = passed && s.sub.passed && s.super.passed && sm.row_sum_test;
  } catch (const CertificateError& e) {
    passed = false;
    j["error"] = e.what();
    j["certificates"] = {{"sub", to_json(e.sub())}, {"super", to_json(e.super())}};
  }
  j["passed"] = passed;
  return {passed, j};
}

json eig_config(const RunConfig& config) {
  json tables = json::array();
  auto table = [&](const std::string& label, const GeneratorSpec& A) {
    const EigPair e = principal_eig(A);
    tables.push_back({{"operator", label},
                      {"lambda1", e.lambda1},
                      {"residual", e.residual},
                      {"phi0", to_json(e.phi0)}});
  };
  if (config.scenario == "scalar_nonunique") {
    table("A", scalar_generator(config.params.at("a")));
    return {{"operators", tables}};
  }
  const GeneratorSpec A = build_generator(config.mesh);
  table("A", A);
  if (config.scenario == "competition" && config.mesh2) table("A2", build_generator(*config.mesh2));
  if (config.scenario == "fisher") {
    const double alpha = config.params.at("alpha");
    const GridFunction m = build_weight(config);
    table("A - alpha m", add_potential(A, -alpha * m));
    table("A + (1 - alpha) m", add_potential(A, (1.0 - alpha) * m));
  }
  return {{"operators", tables},
          {"bc", to_string(config.mesh.bc)},
          {"n", config.mesh.n},
          {"mesh_h", A.mesh_h()},
          {"x", mesh_coordinates(config.mesh)}};
}

}  // namespace mevolve
