#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mevolve/kernels.hpp"
#include "mevolve/mild.hpp"

namespace mevolve {

struct EngineOptions {
  double tol = 1e-10;          // sup distance between consecutive iterates
  std::size_t max_iter = 5000;
  double tol_eq = 1e-10;       // tail increment |U(T) - U(T/2)| for equilibria
  double tol_res = 1e-6;       // equilibrium residual |A v - F(v)|
  std::size_t max_doublings = 12;
  std::size_t newton_starts = 20;
  std::uint64_t seed = 20240917;
  double max_clamp_fraction = 1e-3;
  kernels::Backend backend = kernels::Backend::openmp;
};

/// Outcome of the lower/upper iteration sequences on one time window.
struct IterationReport {
  std::size_t n_iters = 0;
  bool converged = false;
  std::vector<double> lower_distances;  // sup |w_{n+1} - w_n| per iteration
  std::vector<double> upper_distances;
  std::vector<double> sandwich_violations;  // worst signed violation per iteration
  double worst_violation = -std::numeric_limits<double>::infinity();
  std::vector<double> contraction_factors;
  bool distances_monotone = true;
  std::size_t clamped_entries = 0;
  std::size_t evaluated_entries = 0;

  Trajectory u_min;
  Trajectory u_max;
  std::optional<GridFunction> u_star;
  std::optional<GridFunction> u_upper_star;
  std::vector<double> equilibrium_residuals;
  double max_gap = 0.0;  // sup |u_max - u_min| over the grid
  bool unique_flag = false;

  // Kept for certify_sandwich: the interval and the last two iterates of each
  // sequence (older first).
  std::optional<OrderInterval> interval;
  std::vector<Trajectory> lower_iterates;
  std::vector<Trajectory> upper_iterates;
};

/// Runs w_{n+1} = G(w_n) from the constant trajectories at the interval
/// bounds, both with the same u0. The problem must already be scaled so that
/// F + shift id is increasing on the interval (see prepare_problem).
/// Throws NumericalError when the sandwich order breaks beyond kTolOrder.
IterationReport iterate(const ProblemSpec& problem, const GridFunction& u0,
                        const EngineOptions& options = {});
IterationReport iterate(const ProblemSpec& problem, const GridFunction& u0, double tol,
                        std::size_t max_iter, const EngineOptions& options = {});

struct ExtremalTrajectories {
  Trajectory U_min;  // minimal solution from the sub-solution
  Trajectory U_max;  // maximal solution from the super-solution
  double time_violation_min;  // failure of U_min(t_k) <= U_min(t_{k+1})
  double time_violation_max;  // failure of U_max(t_{k+1}) <= U_max(t_k)
  bool time_monotone;
  IterationReport lower_run;
  IterationReport upper_run;
};

ExtremalTrajectories extremal_trajectories(const ProblemSpec& problem,
                                           const EngineOptions& options = {});

struct NewtonResult {
  GridFunction v;
  double residual;
  std::size_t iterations;
  bool converged;
};

/// |A v - F(v)|_inf (the scaling shift cancels).
double equilibrium_residual(const ProblemSpec& problem, const GridFunction& v);

/// Damped Newton on A v = F(v).
NewtonResult newton_equilibrium(const ProblemSpec& problem, const GridFunction& start,
                                double tol = 1e-10, std::size_t max_iter = 60);

struct EquilibriumReport {
  GridFunction u_star;        // lim U_min(t)
  GridFunction u_upper_star;  // lim U_max(t)
  double residual_lower;
  double residual_upper;
  bool residual_ok;
  double horizon;  // final time reached
  std::size_t windows;
  double tail_increment;
  bool horizon_capped;
  bool windows_converged;
  std::size_t total_iterations;
  double order_violation;  // failure of u_* <= u^*
  double worst_sandwich;
  double worst_time_violation;
  std::vector<GridFunction> newton_equilibria;  // converged starts inside the interval
  double minimality_violation;  // worst failure of u_* <= v <= u^* over those
  bool minimality_certified;
  Trajectory U_min;  // windows joined end to end, [0, horizon]
  Trajectory U_max;
};

/// Follows U_min and U_max window by window (restarting each window from the
/// previous end state) and doubles the horizon until the tail increment
/// drops below tol_eq.
EquilibriumReport asymptotic_equilibria(const ProblemSpec& problem,
                                        const EngineOptions& options = {});

struct SandwichCertificate {
  bool certified;
  double worst;
};

/// Checks lower <= w_n <= w_{n+1} <= W_{n+1} <= W_n <= upper on every node of
/// the iterates stored in the report.
SandwichCertificate certify_sandwich(const IterationReport& report);

}  // namespace mevolve
