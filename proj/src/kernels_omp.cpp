#include "mevolve/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace mevolve::kernels::openmp {

namespace {
// Below this many rows a parallel region per time step costs more than it saves.
constexpr Eigen::Index kParallelRows = 256;
}  // namespace

std::size_t evaluate_columns(const Nonlinearity& f, double shift, const Eigen::MatrixXd& states,
                             std::size_t nodes, ClampBounds bounds, Eigen::MatrixXd& out) {
  const Eigen::Index rows = states.rows();
  const Eigen::Index cols = states.cols();
  out.resize(rows, cols);
  std::size_t outside = 0;
#pragma omp parallel reduction(+ : outside)
  {
    Eigen::VectorXd clamped(rows);
    Eigen::VectorXd value(rows);
#pragma omp for schedule(static)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto col = states.col(k);
      outside += static_cast<std::size_t>(
          ((col.array() < bounds.lo.array() - kTolOrder) ||
           (col.array() > bounds.hi.array() + kTolOrder))
              .count());
      clamped = col.cwiseMax(bounds.lo).cwiseMin(bounds.hi);
      f.eval(std::span<const double>(clamped.data(), static_cast<std::size_t>(rows)), nodes,
             std::span<double>(value.data(), static_cast<std::size_t>(rows)));
      out.col(k) = value + shift * clamped;
    }
  }
  return outside;
}

void multiply_columns(const Eigen::MatrixXd& op, const Eigen::MatrixXd& in,
                      Eigen::MatrixXd& out) {
  const Eigen::MatrixXd opT = op.transpose();  // contiguous rows
  const Eigen::Index n = op.rows();
  const Eigen::Index m = op.cols();
  const Eigen::Index cols = in.cols();
  out.resize(n, cols);
  // Same summation order as the serial reference, so results match bit for bit.
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < cols; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) acc += opT(j, i) * in(j, k);
      out(i, k) = acc;
    }
  }
}

void propagate(const Eigen::MatrixXd& step, const Eigen::VectorXd& start,
               const Eigen::MatrixXd& forcing, Eigen::MatrixXd& out) {
  const Eigen::MatrixXd stepT = step.transpose();
  const Eigen::Index n = step.rows();
  const Eigen::Index cols = forcing.cols();
  out.resize(n, cols);
  out.col(0) = start;
  // Time is sequential; each row of a step is owned by one thread.
#pragma omp parallel if (n >= kParallelRows)
  for (Eigen::Index k = 0; k + 1 < cols; ++k) {
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) acc += stepT(j, i) * out(j, k);
      out(i, k + 1) = acc + forcing(i, k + 1);
    }
  }
}

double max_violation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::VectorXd& signs) {
  double worst = -std::numeric_limits<double>::infinity();
  const Eigen::Index cols = a.cols();
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (Eigen::Index k = 0; k < cols; ++k) {
    worst = std::max(worst, signs.cwiseProduct(a.col(k) - b.col(k)).maxCoeff());
  }
  return worst;
}

double sup_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  const Eigen::Index cols = a.cols();
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (Eigen::Index k = 0; k < cols; ++k) {
    worst = std::max(worst, (a.col(k) - b.col(k)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double time_violation(const Eigen::MatrixXd& states, const Eigen::VectorXd& signs,
                      bool increasing) {
  const double dir = increasing ? 1.0 : -1.0;
  double worst = -std::numeric_limits<double>::infinity();
  const Eigen::Index last = states.cols() - 1;
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (Eigen::Index k = 0; k < last; ++k) {
    worst = std::max(worst,
                     (dir * signs.cwiseProduct(states.col(k) - states.col(k + 1))).maxCoeff());
  }
  return worst;
}

}  // namespace mevolve::kernels::openmp
