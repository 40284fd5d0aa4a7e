#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "mevolve/kernels.hpp"
#include "mevolve/nonlin.hpp"
#include "mevolve/operators.hpp"
#include "mevolve/order.hpp"

namespace mevolve {

/// States on the uniform grid t_k = k dt, k = 0..K; column k is the state at t_k.
class Trajectory {
 public:
  Trajectory() = default;  // empty placeholder
  Trajectory(double dt, Eigen::MatrixXd states, int components = 1);

  static Trajectory constant(const GridFunction& v, double dt, std::size_t steps);

  bool empty() const noexcept { return states_.cols() == 0; }
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept {
    return states_.cols() == 0 ? 0 : static_cast<std::size_t>(states_.cols() - 1);
  }
  double horizon() const noexcept { return dt_ * static_cast<double>(steps()); }
  double time(std::size_t k) const noexcept { return dt_ * static_cast<double>(k); }
  int components() const noexcept { return components_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(states_.rows()); }
  std::size_t nodes() const noexcept { return dimension() / static_cast<std::size_t>(components_); }

  const Eigen::MatrixXd& states() const noexcept { return states_; }
  GridFunction state(std::size_t k) const;
  GridFunction final_state() const { return state(steps()); }

 private:
  double dt_ = 0.0;
  Eigen::MatrixXd states_;
  int components_ = 1;
};

/// Data of u' + A u = F(u) on [0, horizon] with the order interval the
/// solutions live in. `shift` is the accumulated mu: after scaling the
/// generator is A + mu and the evaluated nonlinearity is F + mu id.
struct ProblemSpec {
  GeneratorSpec generator;
  NonlinearityPtr nonlinearity;
  OrderInterval interval;
  double shift = 0.0;
  double horizon = 1.0;
  double dt = 1e-2;

  std::size_t steps() const;
  /// F(u) + shift * u.
  GridFunction evaluate(const GridFunction& u) const;
  void validate() const;
};

/// Replaces (A, F) by (A + mu, F + mu id); mild solutions are unchanged.
ProblemSpec scale_problem(const ProblemSpec& problem, double mu);

/// mu* = max(quasi-increasing shift of F on the interval, 0.1 - lambda_1(A)),
/// clipped at zero.
double scaling_policy(const ProblemSpec& problem);

/// scale_problem(problem, scaling_policy(problem)).
ProblemSpec prepare_problem(const ProblemSpec& problem);

struct GApplication {
  Trajectory trajectory;
  std::size_t clamped = 0;  // entries found outside the interval before clamping
};

/// Evaluates the fixed-point map
///   G(u)(t_k) = S(t_k) u0 + sum_j int_{t_j}^{t_{j+1}} S(t_k - s) ds F(u(t_{j+1}))
/// with F frozen at the right node of each step. S(dt) and the integrated
/// semigroup are precomputed once and are entrywise non-negative, so G is
/// monotone in u and in u0 at the discrete level.
class MildIntegrator {
 public:
  explicit MildIntegrator(const ProblemSpec& problem,
                          kernels::Backend backend = kernels::Backend::openmp);

  GApplication apply(const GridFunction& u0, const Eigen::MatrixXd& states) const;
  GApplication apply(const GridFunction& u0, const Trajectory& u) const {
    return apply(u0, u.states());
  }

  const ProblemSpec& problem() const noexcept { return problem_; }
  const Eigen::MatrixXd& step_operator() const noexcept { return step_; }
  const Eigen::MatrixXd& forcing_operator() const noexcept { return forcing_; }
  kernels::Backend backend() const noexcept { return backend_; }

 private:
  ProblemSpec problem_;
  kernels::Backend backend_;
  Eigen::MatrixXd step_;
  Eigen::MatrixXd forcing_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
};

Trajectory apply_G(const ProblemSpec& problem, const GridFunction& u0, const Trajectory& u);

/// max_k |u(t_k) - G(u)(t_k)|_inf with u0 = u(t_0).
double mild_residual(const ProblemSpec& problem, const Trajectory& u);

/// Worst defect of the weak form d/dt <e_i, u> + <A' e_i, u> = <e_i, F(u)>
/// over the standard basis, with a centred difference in time.
double weak_residual(const ProblemSpec& problem, const Trajectory& u);

/// The trajectory t -> u(t_{t0_index} + t).
Trajectory translate(const Trajectory& u, std::size_t t0_index);

/// Header `t,node_0,...` (components suffixed `_c0`, `_c1`, ...).
void write_csv(std::ostream& os, const Trajectory& u);
void write_csv(const std::string& path, const Trajectory& u);

}  // namespace mevolve
