#include "mevolve/mild.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace mevolve {

Trajectory::Trajectory(double dt, Eigen::MatrixXd states, int components)
    : dt_(dt), states_(std::move(states)), components_(components) {
  if (!(dt_ > 0.0)) throw ValidationError("trajectory time step must be positive");
  if (states_.cols() == 0 || states_.rows() == 0) throw StructuralError("empty trajectory");
  if (components_ < 1 || states_.rows() % components_ != 0) {
    throw StructuralError("trajectory rows are not a multiple of the component count");
  }
}

Trajectory Trajectory::constant(const GridFunction& v, double dt, std::size_t steps) {
  Eigen::MatrixXd s = v.values().replicate(1, static_cast<Eigen::Index>(steps + 1));
  return Trajectory(dt, std::move(s), v.components());
}

GridFunction Trajectory::state(std::size_t k) const {
  if (k > steps()) throw StructuralError("time index out of range");
  return GridFunction(states_.col(static_cast<Eigen::Index>(k)), components_);
}

std::size_t ProblemSpec::steps() const {
  validate();
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

GridFunction ProblemSpec::evaluate(const GridFunction& u) const {
  const GridFunction f = (*nonlinearity)(u);
  return shift == 0.0 ? f : f + shift * u;
}

void ProblemSpec::validate() const {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
  if (std::llround(horizon / dt) < 1) throw ValidationError("horizon shorter than one step");
  if (!nonlinearity) throw ValidationError("problem has no nonlinearity");
  if (generator.dimension() != interval.size()) {
    throw StructuralError("generator and interval sizes differ");
  }
  if (generator.components() != interval.cone().components() ||
      nonlinearity->arity() != generator.components()) {
    throw StructuralError("component counts of generator, cone and nonlinearity differ");
  }
}

ProblemSpec scale_problem(const ProblemSpec& problem, double mu) {
  if (!(mu >= 0.0)) throw ValidationError("scaling shift must be non-negative");
  ProblemSpec out = problem;
  out.generator = problem.generator.shifted(mu);
  out.shift = problem.shift + mu;
  return out;
}

double scaling_policy(const ProblemSpec& problem) {
  const double quasi = problem.nonlinearity->quasi_increasing_shift(problem.interval);
  // Shifts already applied count towards both requirements.
  const double need_monotone = quasi - problem.shift;
  const double need_stable = 0.1 - problem.generator.spectral_bound();
  return std::max({0.0, need_monotone, need_stable});
}

ProblemSpec prepare_problem(const ProblemSpec& problem) {
  problem.validate();
  return scale_problem(problem, scaling_policy(problem));
}

MildIntegrator::MildIntegrator(const ProblemSpec& problem, kernels::Backend backend)
    : problem_(problem), backend_(backend) {
  problem_.validate();
  const double bound = problem_.generator.spectral_bound();
  if (!(bound > 0.0)) {
    throw ValidationError("lambda_1(A) = " + std::to_string(bound) +
                          " <= 0 after scaling; choose a larger shift mu");
  }
  step_ = problem_.generator.semigroup_matrix(problem_.dt);
  forcing_ = problem_.generator.integrated_semigroup_matrix(problem_.dt);
  lo_ = problem_.interval.entry_min();
  hi_ = problem_.interval.entry_max();
}

GApplication MildIntegrator::apply(const GridFunction& u0, const Eigen::MatrixXd& states) const {
  if (u0.size() != problem_.generator.dimension() ||
      states.rows() != static_cast<Eigen::Index>(u0.size())) {
    throw StructuralError("apply_G: dimensions do not match the problem");
  }
  if (states.cols() < 2) throw StructuralError("apply_G needs at least one time step");
  const auto nodes = problem_.generator.nodes();
  Eigen::MatrixXd values;
  Eigen::MatrixXd forcing;
  Eigen::MatrixXd out;
  GApplication result;
  result.clamped = kernels::evaluate_columns(backend_, *problem_.nonlinearity, problem_.shift,
                                             states, nodes, {lo_, hi_}, values);
  kernels::multiply_columns(backend_, forcing_, values, forcing);
  const Eigen::VectorXd start = u0.values().cwiseMax(lo_).cwiseMin(hi_);
  kernels::propagate(backend_, step_, start, forcing, out);
  result.trajectory = Trajectory(problem_.dt, std::move(out), u0.components());
  return result;
}

Trajectory apply_G(const ProblemSpec& problem, const GridFunction& u0, const Trajectory& u) {
  if (std::abs(u.dt() - problem.dt) > 1e-12 * problem.dt) {
    throw ValidationError("trajectory and problem use different time steps");
  }
  return MildIntegrator(problem).apply(u0, u).trajectory;
}

double mild_residual(const ProblemSpec& problem, const Trajectory& u) {
  const Trajectory g = apply_G(problem, u.state(0), u);
  return (g.states() - u.states()).cwiseAbs().maxCoeff();
}

double weak_residual(const ProblemSpec& problem, const Trajectory& u) {
  const auto& a = problem.generator.matrix();
  double worst = 0.0;
  GridFunction f_prev = problem.evaluate(u.state(0));
  for (std::size_t k = 0; k < u.steps(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const GridFunction f_next = problem.evaluate(u.state(k + 1));
    const Eigen::VectorXd mid = 0.5 * (u.states().col(i) + u.states().col(i + 1));
    const Eigen::VectorXd defect = (u.states().col(i + 1) - u.states().col(i)) / u.dt() +
                                   a * mid - 0.5 * (f_prev.values() + f_next.values());
    worst = std::max(worst, defect.cwiseAbs().maxCoeff());
    f_prev = f_next;
  }
  return worst;
}

Trajectory translate(const Trajectory& u, std::size_t t0_index) {
  if (t0_index > u.steps()) throw StructuralError("translation index out of range");
  const auto start = static_cast<Eigen::Index>(t0_index);
  return Trajectory(u.dt(), u.states().rightCols(u.states().cols() - start), u.components());
}

void write_csv(std::ostream& os, const Trajectory& u) {
  const auto n = u.nodes();
  os << "t";
  for (int c = 0; c < u.components(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      os << ",node_" << i;
      if (u.components() > 1) os << "_c" << c;
    }
  }
  os << '\n';
  // Shortest round-trip form: exact on re-read, no trailing noise.
  char buf[32];
  auto put = [&](double x) {
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    os.write(buf, res.ptr - buf);
  };
  for (std::size_t k = 0; k <= u.steps(); ++k) {
    put(u.time(k));
    for (Eigen::Index r = 0; r < u.states().rows(); ++r) {
      os << ',';
      put(u.states()(r, static_cast<Eigen::Index>(k)));
    }
    os << '\n';
  }
}

void write_csv(const std::string& path, const Trajectory& u) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  write_csv(os, u);
}

}  // namespace mevolve
