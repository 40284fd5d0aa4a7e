#include "mevolve/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace mevolve {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

double positive(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || !(x > 0.0)) fail(path, "must be positive");
  return x;
}

double real(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

std::size_t count(const json& v, const std::string& path, std::size_t min) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < static_cast<long long>(min)) fail(path, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(x);
}

bool flag(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::vector<double> reals(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(real(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    if (!allowed.count(k)) fail(path + "." + k, "unknown field");
  }
}

MeshConfig parse_mesh(const json& v, const std::string& path) {
  only_keys(v, path, {"n", "bc", "beta"});
  MeshConfig m;
  if (v.contains("n")) m.n = count(v["n"], path + ".n", 2);
  double beta = 0.0;
  if (v.contains("beta")) {
    beta = real(v["beta"], path + ".beta");
    if (beta < 0.0) fail(path + ".beta", "must be non-negative");
  }
  if (v.contains("bc")) {
    if (!v["bc"].is_string()) fail(path + ".bc", "expected a string");
    try {
      m.bc = parse_boundary(v["bc"].get<std::string>(), beta);
    } catch (const ValidationError& e) {
      fail(path + ".bc", e.what());
    }
  }
  return m;
}

const std::map<std::string, std::vector<std::string>>& scenario_params() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"logistic", {"a", "b"}},
      {"competition", {"a1", "a2", "b11", "b12", "b21", "b22"}},
      {"fisher", {"alpha"}},
      {"scalar_nonunique", {"a", "M"}},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  const std::string root = "config";
  only_keys(doc, root,
            {"scenario", "params", "mesh", "mesh2", "weight", "dt", "horizon", "window", "tol",
             "tol_eq", "tol_res", "max_iter", "max_doublings", "newton_starts", "seed", "u0",
             "eps", "M", "output", "emit"});
  RunConfig c;
  if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
    fail(root + ".scenario", "missing scenario name");
  }
  c.scenario = doc["scenario"].get<std::string>();
  const auto table = scenario_params();
  const auto it = table.find(c.scenario);
  if (it == table.end()) fail(root + ".scenario", "unknown scenario '" + c.scenario + "'");

  const json params = doc.value("params", json::object());
  only_keys(params, root + ".params", std::set<std::string>(it->second.begin(), it->second.end()));
  for (const auto& key : it->second) {
    if (!params.contains(key)) fail(root + ".params." + key, "missing");
    c.params[key] = positive(params[key], root + ".params." + key);
  }

  const bool scalar = c.scenario == "scalar_nonunique";
  c.dt = scalar ? 1e-3 : 0.02;
  c.window = scalar ? 10.0 : 2.0;
  c.horizon = c.window;

  if (doc.contains("mesh")) c.mesh = parse_mesh(doc["mesh"], root + ".mesh");
  if (doc.contains("mesh2")) c.mesh2 = parse_mesh(doc["mesh2"], root + ".mesh2");
  if (doc.contains("weight")) {
    const auto& w = doc["weight"];
    const std::string p = root + ".weight";
    only_keys(w, p, {"values", "profile", "amplitude", "offset"});
    if (w.contains("values")) c.weight.values = reals(w["values"], p + ".values");
    if (w.contains("profile")) {
      if (!w["profile"].is_string()) fail(p + ".profile", "expected a string");
      c.weight.profile = w["profile"].get<std::string>();
      if (c.weight.profile != "constant" && c.weight.profile != "cos" &&
          c.weight.profile != "sin") {
        fail(p + ".profile", "expected constant, cos or sin");
      }
    }
    if (w.contains("amplitude")) c.weight.amplitude = real(w["amplitude"], p + ".amplitude");
    if (w.contains("offset")) c.weight.offset = real(w["offset"], p + ".offset");
  }

  if (doc.contains("dt")) c.dt = positive(doc["dt"], root + ".dt");
  if (doc.contains("window")) c.window = positive(doc["window"], root + ".window");
  if (doc.contains("horizon")) {
    const auto& h = doc["horizon"];
    if (h.is_string()) {
      if (h.get<std::string>() != "auto") fail(root + ".horizon", "expected a number or \"auto\"");
      c.horizon.reset();
    } else {
      c.horizon = positive(h, root + ".horizon");
    }
  }
  if (std::llround((c.horizon ? *c.horizon : c.window) / c.dt) < 1) {
    fail(root + ".dt", "larger than the horizon");
  }

  auto& e = c.engine;
  if (doc.contains("tol")) e.tol = positive(doc["tol"], root + ".tol");
  if (doc.contains("tol_eq")) e.tol_eq = positive(doc["tol_eq"], root + ".tol_eq");
  if (doc.contains("tol_res")) e.tol_res = positive(doc["tol_res"], root + ".tol_res");
  if (doc.contains("max_iter")) e.max_iter = count(doc["max_iter"], root + ".max_iter", 1);
  if (doc.contains("max_doublings")) {
    e.max_doublings = count(doc["max_doublings"], root + ".max_doublings", 0);
  }
  if (doc.contains("newton_starts")) {
    e.newton_starts = count(doc["newton_starts"], root + ".newton_starts", 0);
  }
  if (doc.contains("seed")) e.seed = count(doc["seed"], root + ".seed", 0);

  if (doc.contains("u0")) {
    const auto& u = doc["u0"];
    const std::string p = root + ".u0";
    if (u.is_string()) {
      const auto s = u.get<std::string>();
      if (s == "lower") {
        c.u0.kind = InitialValue::Kind::lower;
      } else if (s == "upper") {
        c.u0.kind = InitialValue::Kind::upper;
      } else {
        fail(p, "expected \"lower\", \"upper\", a number or an array");
      }
    } else if (u.is_number()) {
      c.u0.kind = InitialValue::Kind::constant;
      c.u0.constant = real(u, p);
    } else {
      c.u0.kind = InitialValue::Kind::values;
      c.u0.values = reals(u, p);
    }
  }
  if (doc.contains("eps")) c.eps = positive(doc["eps"], root + ".eps");
  if (doc.contains("M")) c.M = positive(doc["M"], root + ".M");
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) fail(root + ".output", "expected a string");
    c.output = doc["output"].get<std::string>();
  }
  if (doc.contains("emit")) {
    const auto& em = doc["emit"];
    const std::string p = root + ".emit";
    only_keys(em, p, {"trajectories", "report", "certificates"});
    if (em.contains("trajectories")) c.emit_trajectories = flag(em["trajectories"], p + ".trajectories");
    if (em.contains("report")) c.emit_report = flag(em["report"], p + ".report");
    if (em.contains("certificates")) c.emit_certificates = flag(em["certificates"], p + ".certificates");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot read config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  return parse_config(doc);
}

GeneratorSpec build_generator(const MeshConfig& mesh) { return build_laplacian_1d(mesh.n, mesh.bc); }

std::vector<double> mesh_coordinates(const MeshConfig& mesh) {
  std::vector<double> x(mesh.n);
  const bool interior = mesh.bc.kind == BoundaryKind::dirichlet;
  const double h = interior ? 1.0 / static_cast<double>(mesh.n + 1)
                            : 1.0 / static_cast<double>(mesh.n - 1);
  for (std::size_t i = 0; i < mesh.n; ++i) {
    x[i] = h * static_cast<double>(interior ? i + 1 : i);
  }
  return x;
}

GridFunction build_weight(const RunConfig& config) {
  const auto n = config.mesh.n;
  const auto& w = config.weight;
  if (w.values) {
    if (w.values->size() != n) {
      throw ValidationError("config.weight.values: expected " + std::to_string(n) + " entries");
    }
    return GridFunction(Eigen::Map<const Eigen::VectorXd>(w.values->data(),
                                                          static_cast<Eigen::Index>(n)));
  }
  const auto x = mesh_coordinates(config.mesh);
  Eigen::VectorXd m(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    if (w.profile == "cos") p = std::cos(std::numbers::pi * x[i]);
    if (w.profile == "sin") p = std::sin(2.0 * std::numbers::pi * x[i]);
    m[static_cast<Eigen::Index>(i)] = w.offset + w.amplitude * p;
  }
  return GridFunction(m);
}

ScenarioSpec build_scenario(const RunConfig& c) {
  ScenarioOptions opt;
  opt.dt = c.dt;
  opt.horizon = c.horizon ? *c.horizon : c.window;
  opt.eps = c.eps;
  opt.M = c.M;
  const auto& p = c.params;
  if (c.scenario == "logistic") {
    return build_logistic(build_generator(c.mesh), p.at("a"), p.at("b"), opt);
  }
  if (c.scenario == "competition") {
    const CompetitionRates r{p.at("a1"), p.at("a2"), p.at("b11"), p.at("b12"), p.at("b21"), p.at("b22")};
    const MeshConfig second = c.mesh2 ? *c.mesh2 : c.mesh;
    if (second.n != c.mesh.n) throw ValidationError("config.mesh2.n: must equal config.mesh.n");
    return build_competition(build_generator(c.mesh), build_generator(second), r, opt, c.engine);
  }
  if (c.scenario == "fisher") {
    return build_fisher(build_generator(c.mesh), build_weight(c), p.at("alpha"), opt);
  }
  return build_scalar_nonunique(p.at("a"), p.at("M"), opt);
}

GridFunction initial_value(const RunConfig& c, const OrderInterval& interval) {
  switch (c.u0.kind) {
    case InitialValue::Kind::lower:
      return interval.lower();
    case InitialValue::Kind::upper:
      return interval.upper();
    case InitialValue::Kind::constant:
      return GridFunction::constant(interval.nodes(), c.u0.constant, interval.cone().components());
    case InitialValue::Kind::values:
      break;
  }
  if (c.u0.values.size() != interval.size()) {
    throw ValidationError("config.u0: expected " + std::to_string(interval.size()) + " entries");
  }
  return GridFunction(Eigen::Map<const Eigen::VectorXd>(c.u0.values.data(),
                                                        static_cast<Eigen::Index>(c.u0.values.size())),
                      interval.cone().components());
}

}  // namespace mevolve
