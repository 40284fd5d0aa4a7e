#include "mevolve/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <string>

namespace mevolve {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_scaled(const ProblemSpec& problem) {
  const double quasi = problem.nonlinearity->quasi_increasing_shift(problem.interval);
  if (problem.shift + 1e-12 < quasi) {
    throw ValidationError("problem is not scaled: shift " + std::to_string(problem.shift) +
                          " is below the quasi-increasing bound " + std::to_string(quasi));
  }
}

void require_inside(const GridFunction& u0, const OrderInterval& interval) {
  if (u0.size() != interval.size()) throw StructuralError("u0 does not match the interval size");
  const double v = std::max(order_violation(interval.lower(), u0, interval.cone()),
                            order_violation(u0, interval.upper(), interval.cone()));
  if (v > kTolOrder) {
    throw ValidationError("u0 lies outside the order interval by " + std::to_string(v));
  }
}

// Runs the lower and/or upper sequence from the interval bounds.
// `start_lo` / `start_hi` replace the interval bounds as constant starting
// trajectories; they must satisfy the discrete sub/super-solution property.
IterationReport run_sequences(const ProblemSpec& problem, const GridFunction& u0, double tol,
                              std::size_t max_iter, const EngineOptions& opt, bool lower,
                              bool upper, const GridFunction* start_lo = nullptr,
                              const GridFunction* start_hi = nullptr) {
  problem.validate();
  require_scaled(problem);
  require_inside(u0, problem.interval);
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_iter == 0) throw ValidationError("max_iter must be positive");

  const auto& interval = problem.interval;
  const auto steps = problem.steps();
  const auto nodes = interval.nodes();
  const Eigen::VectorXd signs = interval.cone().entry_signs(nodes);
  const auto be = opt.backend;

  IterationReport rep;
  rep.interval = interval;

  const Trajectory lower0 =
      Trajectory::constant(start_lo ? *start_lo : interval.lower(), problem.dt, steps);
  const Trajectory upper0 =
      Trajectory::constant(start_hi ? *start_hi : interval.upper(), problem.dt, steps);

  if (interval.degenerate() && !start_lo && !start_hi) {
    // Only an equilibrium can be a degenerate interval of sub/super-solutions.
    const double res = equilibrium_residual(problem, interval.lower());
    if (res > opt.tol_res) {
      throw ValidationError("degenerate interval is not an equilibrium (residual " +
                            std::to_string(res) + ")");
    }
    rep.n_iters = 1;
    rep.converged = true;
    rep.worst_violation = 0.0;
    rep.u_min = lower0;
    rep.u_max = upper0;
    rep.unique_flag = true;
    rep.lower_iterates = {lower0, lower0};
    rep.upper_iterates = {upper0, upper0};
    return rep;
  }

  const MildIntegrator integrator(problem, be);
  Eigen::MatrixXd lo_prev = lower0.states();
  Eigen::MatrixXd hi_prev = upper0.states();
  const double evaluated = static_cast<double>(lo_prev.size());

  for (std::size_t n = 0; n < max_iter; ++n) {
    GApplication lo_next, hi_next;
    std::exception_ptr failure[2];
    // The two sequences are independent; run them side by side.
#pragma omp parallel sections num_threads(2) if (be == kernels::Backend::openmp && lower && upper)
    {
#pragma omp section
      {
        if (lower) {
          try {
            lo_next = integrator.apply(u0, lo_prev);
          } catch (...) {
            failure[0] = std::current_exception();
          }
        }
      }
#pragma omp section
      {
        if (upper) {
          try {
            hi_next = integrator.apply(u0, hi_prev);
          } catch (...) {
            failure[1] = std::current_exception();
          }
        }
      }
    }
    for (auto& f : failure) {
      if (f) std::rethrow_exception(f);
    }

    double worst = -kInf;
    std::size_t clamped = 0;
    double d_lo = 0.0, d_hi = 0.0;
    if (lower) {
      const auto& s = lo_next.trajectory.states();
      worst = std::max(worst, kernels::max_violation(be, lo_prev, s, signs));
      worst = std::max(worst, kernels::max_violation(be, lower0.states(), s, signs));
      worst = std::max(worst, kernels::max_violation(be, s, upper0.states(), signs));
      d_lo = kernels::sup_distance(be, s, lo_prev);
      clamped = std::max(clamped, lo_next.clamped);
    }
    if (upper) {
      const auto& s = hi_next.trajectory.states();
      worst = std::max(worst, kernels::max_violation(be, s, hi_prev, signs));
      worst = std::max(worst, kernels::max_violation(be, lower0.states(), s, signs));
      worst = std::max(worst, kernels::max_violation(be, s, upper0.states(), signs));
      d_hi = kernels::sup_distance(be, s, hi_prev);
      clamped = std::max(clamped, hi_next.clamped);
    }
    if (lower && upper) {
      worst = std::max(worst, kernels::max_violation(be, lo_next.trajectory.states(),
                                                     hi_next.trajectory.states(), signs));
    }
    rep.clamped_entries += clamped;
    rep.evaluated_entries += static_cast<std::size_t>(evaluated);
    if (static_cast<double>(clamped) > opt.max_clamp_fraction * evaluated) {
      throw NumericalError("iterates left the order interval on " + std::to_string(clamped) +
                               " entries",
                           static_cast<double>(clamped) / evaluated);
    }
    rep.sandwich_violations.push_back(worst);
    rep.worst_violation = std::max(rep.worst_violation, worst);
    if (worst > kTolOrder) {
      throw NumericalError("sandwich order broken at iteration " + std::to_string(n + 1), worst);
    }

    if (lower) rep.lower_distances.push_back(d_lo);
    if (upper) rep.upper_distances.push_back(d_hi);
    rep.n_iters = n + 1;

    const bool done = std::max(d_lo, d_hi) < tol;
    if (done || n + 1 == max_iter) {
      if (lower) {
        rep.lower_iterates = {Trajectory(problem.dt, lo_prev, u0.components()),
                              lo_next.trajectory};
        rep.u_min = lo_next.trajectory;
      }
      if (upper) {
        rep.upper_iterates = {Trajectory(problem.dt, hi_prev, u0.components()),
                              hi_next.trajectory};
        rep.u_max = hi_next.trajectory;
      }
      rep.converged = done;
      break;
    }
    if (lower) lo_prev = lo_next.trajectory.states();
    if (upper) hi_prev = hi_next.trajectory.states();
  }

  // Combined distances, their ratios and whether they shrink monotonically.
  std::vector<double> combined(rep.n_iters, 0.0);
  for (std::size_t i = 0; i < rep.n_iters; ++i) {
    if (lower) combined[i] = std::max(combined[i], rep.lower_distances[i]);
    if (upper) combined[i] = std::max(combined[i], rep.upper_distances[i]);
  }
  for (std::size_t i = 1; i < combined.size(); ++i) {
    rep.contraction_factors.push_back(combined[i - 1] > 0.0 ? combined[i] / combined[i - 1]
                                                            : 0.0);
    if (combined[i] > combined[i - 1] + kTolOrder) rep.distances_monotone = false;
  }

  if (lower) {
    rep.u_star = rep.u_min.final_state();
    rep.equilibrium_residuals.push_back(equilibrium_residual(problem, *rep.u_star));
  }
  if (upper) {
    rep.u_upper_star = rep.u_max.final_state();
    rep.equilibrium_residuals.push_back(equilibrium_residual(problem, *rep.u_upper_star));
  }
  if (lower && upper) {
    rep.max_gap = kernels::sup_distance(be, rep.u_min.states(), rep.u_max.states());
    rep.unique_flag = rep.max_gap <= 10.0 * tol;
  }
  return rep;
}

}  // namespace

IterationReport iterate(const ProblemSpec& problem, const GridFunction& u0,
                        const EngineOptions& options) {
  return run_sequences(problem, u0, options.tol, options.max_iter, options, true, true);
}

IterationReport iterate(const ProblemSpec& problem, const GridFunction& u0, double tol,
                        std::size_t max_iter, const EngineOptions& options) {
  return run_sequences(problem, u0, tol, max_iter, options, true, true);
}

ExtremalTrajectories extremal_trajectories(const ProblemSpec& problem,
                                           const EngineOptions& options) {
  const auto& interval = problem.interval;
  IterationReport lo = run_sequences(problem, interval.lower(), options.tol, options.max_iter,
                                     options, true, false);
  IterationReport hi = run_sequences(problem, interval.upper(), options.tol, options.max_iter,
                                     options, false, true);
  const Eigen::VectorXd signs = interval.cone().entry_signs(interval.nodes());
  const double tmin = kernels::time_violation(options.backend, lo.u_min.states(), signs, true);
  const double tmax = kernels::time_violation(options.backend, hi.u_max.states(), signs, false);
  Trajectory umin = lo.u_min;
  Trajectory umax = hi.u_max;
  return ExtremalTrajectories{std::move(umin),
                              std::move(umax),
                              tmin,
                              tmax,
                              std::max(tmin, tmax) <= kTolOrder,
                              std::move(lo),
                              std::move(hi)};
}

double equilibrium_residual(const ProblemSpec& problem, const GridFunction& v) {
  const Eigen::VectorXd r =
      problem.generator.matrix() * v.values() - problem.evaluate(v).values();
  return r.cwiseAbs().maxCoeff();
}

NewtonResult newton_equilibrium(const ProblemSpec& problem, const GridFunction& start,
                                double tol, std::size_t max_iter) {
  const auto& a = problem.generator.matrix();
  const int comps = start.components();
  auto residual_vec = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const GridFunction g(v, comps);
    return a * v - problem.evaluate(g).values();
  };
  // Residuals below this are at the rounding floor of A v.
  auto floor_of = [&](const Eigen::VectorXd& v) {
    const double anorm = a.cwiseAbs().rowwise().sum().maxCoeff();
    return 64.0 * std::numeric_limits<double>::epsilon() * anorm *
           std::max(1.0, v.cwiseAbs().maxCoeff());
  };

  Eigen::VectorXd v = start.values();
  Eigen::VectorXd r = residual_vec(v);
  double rn = r.allFinite() ? r.cwiseAbs().maxCoeff() : kInf;
  std::size_t it = 0;
  bool converged = rn <= tol;
  while (!converged && it < max_iter && std::isfinite(rn)) {
    ++it;
    Eigen::MatrixXd jac = a;
    jac -= problem.nonlinearity->jacobian(GridFunction(v, comps));
    jac.diagonal().array() -= problem.shift;
    if (!jac.allFinite()) break;
    const Eigen::VectorXd dv = jac.fullPivLu().solve(-r);
    if (!dv.allFinite()) break;
    double step = 1.0;
    Eigen::VectorXd trial = v + dv;
    Eigen::VectorXd rt = residual_vec(trial);
    double tn = rt.allFinite() ? rt.cwiseAbs().maxCoeff() : kInf;
    while (!(tn <= (1.0 - 1e-4 * step) * rn) && step > 1e-6) {
      step *= 0.5;
      trial = v + step * dv;
      rt = residual_vec(trial);
      tn = rt.allFinite() ? rt.cwiseAbs().maxCoeff() : kInf;
    }
    if (!(tn < rn)) {
      // No decrease: accept only if already at the rounding floor.
      converged = rn <= std::max(tol, floor_of(v));
      break;
    }
    v = trial;
    r = rt;
    rn = tn;
    converged = rn <= tol;
  }
  if (!converged && std::isfinite(rn)) converged = rn <= std::max(tol, floor_of(v));
  return NewtonResult{GridFunction(v.allFinite() ? v : start.values(), comps), rn, it,
                      converged};
}

EquilibriumReport asymptotic_equilibria(const ProblemSpec& problem,
                                        const EngineOptions& options) {
  const auto& interval = problem.interval;
  const auto& cone = interval.cone();
  const Eigen::VectorXd signs = cone.entry_signs(interval.nodes());
  const double window = problem.dt * static_cast<double>(problem.steps());

  GridFunction lo_state = interval.lower();
  GridFunction hi_state = interval.upper();
  // End states of every window; entry w is the state at time (w+1) * window.
  std::vector<GridFunction> lo_hist, hi_hist;
  GridFunction lo_mid = lo_state, hi_mid = hi_state;  // states at window / 2

  std::vector<Eigen::MatrixXd> lo_windows, hi_windows;
  double worst_sandwich = -kInf, worst_time = -kInf;
  std::size_t total_iters = 0;
  bool all_converged = true;
  std::size_t target = 1, doublings = 0;
  double tail = kInf;
  bool capped = false;

  for (;;) {
    while (lo_hist.size() < target) {
      // Later windows restart from the constant current state: the end state
      // of a time-monotone discrete solution is itself a discrete
      // sub-solution (super-solution for U_max), so every iterate stays
      // monotone in time.
      const bool first = lo_hist.empty();
      IterationReport lo = run_sequences(problem, lo_state, options.tol, options.max_iter,
                                         options, true, false, first ? nullptr : &lo_state);
      IterationReport hi = run_sequences(problem, hi_state, options.tol, options.max_iter,
                                         options, false, true, nullptr,
                                         first ? nullptr : &hi_state);
      total_iters += lo.n_iters + hi.n_iters;
      all_converged = all_converged && lo.converged && hi.converged;
      worst_sandwich = std::max({worst_sandwich, lo.worst_violation, hi.worst_violation});
      worst_time = std::max(
          {worst_time, kernels::time_violation(options.backend, lo.u_min.states(), signs, true),
           kernels::time_violation(options.backend, hi.u_max.states(), signs, false)});
      if (lo_hist.empty()) {
        const std::size_t half = lo.u_min.steps() / 2;
        lo_mid = lo.u_min.state(half);
        hi_mid = hi.u_max.state(half);
      }
      // Drop the first column of later windows: it repeats the previous end.
      const Eigen::Index skip = first ? 0 : 1;
      lo_windows.push_back(lo.u_min.states().rightCols(lo.u_min.states().cols() - skip));
      hi_windows.push_back(hi.u_max.states().rightCols(hi.u_max.states().cols() - skip));
      lo_state = lo.u_min.final_state();
      hi_state = hi.u_max.final_state();
      lo_hist.push_back(lo_state);
      hi_hist.push_back(hi_state);
    }
    const GridFunction& lo_half = target == 1 ? lo_mid : lo_hist[target / 2 - 1];
    const GridFunction& hi_half = target == 1 ? hi_mid : hi_hist[target / 2 - 1];
    tail = std::max(monotone_norm(lo_state - lo_half), monotone_norm(hi_state - hi_half));
    if (tail < options.tol_eq) break;
    if (doublings >= options.max_doublings) {
      capped = true;
      break;
    }
    target *= 2;
    ++doublings;
  }

  const double res_lo = equilibrium_residual(problem, lo_state);
  const double res_hi = equilibrium_residual(problem, hi_state);

  // Independent cross-check: Newton from seeded points of the segment
  // between the bounds. Every equilibrium found inside the interval has to
  // lie between the two limits.
  std::vector<GridFunction> found;
  double minimality = -kInf;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s = 0; s < options.newton_starts; ++s) {
    const double r = unif(rng);
    const GridFunction start = (1.0 - r) * interval.lower() + r * interval.upper();
    const NewtonResult nr = newton_equilibrium(problem, start);
    if (!nr.converged) continue;
    const double outside = std::max(order_violation(interval.lower(), nr.v, cone),
                                     order_violation(nr.v, interval.upper(), cone));
    if (outside > 1e-8) continue;
    minimality = std::max({minimality, order_violation(lo_state, nr.v, cone),
                           order_violation(nr.v, hi_state, cone)});
    found.push_back(nr.v);
  }
  // Limits are only tol_eq-accurate; allow for that plus the Newton accuracy.
  const double slack = std::max(1e-6, 100.0 * options.tol_eq);

  auto join = [&](const std::vector<Eigen::MatrixXd>& parts) {
    Eigen::Index cols = 0;
    for (const auto& p : parts) cols += p.cols();
    Eigen::MatrixXd all(parts.front().rows(), cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      all.middleCols(at, p.cols()) = p;
      at += p.cols();
    }
    return Trajectory(problem.dt, std::move(all), interval.lower().components());
  };

  return EquilibriumReport{lo_state,
                           hi_state,
                           res_lo,
                           res_hi,
                           std::max(res_lo, res_hi) <= options.tol_res,
                           window * static_cast<double>(lo_hist.size()),
                           lo_hist.size(),
                           tail,
                           capped,
                           all_converged,
                           total_iters,
                           order_violation(lo_state, hi_state, cone),
                           worst_sandwich,
                           worst_time,
                           std::move(found),
                           minimality,
                           minimality <= slack,
                           join(lo_windows),
                           join(hi_windows)};
}

SandwichCertificate certify_sandwich(const IterationReport& report) {
  if (!report.interval) throw StructuralError("report carries no interval");
  const auto& interval = *report.interval;
  const Eigen::VectorXd signs = interval.cone().entry_signs(interval.nodes());
  std::vector<Eigen::MatrixXd> chain;
  auto add = [&](const Trajectory& t) { chain.push_back(t.states()); };
  const bool has_lo = report.lower_iterates.size() == 2;
  const bool has_hi = report.upper_iterates.size() == 2;
  if (!has_lo && !has_hi) throw StructuralError("report carries no iterates");
  const std::size_t cols = static_cast<std::size_t>(
      (has_lo ? report.lower_iterates[0] : report.upper_iterates[0]).states().cols());
  chain.push_back(interval.lower().values().replicate(1, static_cast<Eigen::Index>(cols)));
  if (has_lo) {
    add(report.lower_iterates[0]);
    add(report.lower_iterates[1]);
  }
  if (has_hi) {
    add(report.upper_iterates[1]);
    add(report.upper_iterates[0]);
  }
  chain.push_back(interval.upper().values().replicate(1, static_cast<Eigen::Index>(cols)));
  double worst = -kInf;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (chain[i].rows() != chain[i + 1].rows() || chain[i].cols() != chain[i + 1].cols()) {
      throw StructuralError("iterates have inconsistent shapes");
    }
    worst = std::max(worst, kernels::serial::max_violation(chain[i], chain[i + 1], signs));
  }
  return SandwichCertificate{worst <= kTolOrder, worst};
}

}  // namespace mevolve
