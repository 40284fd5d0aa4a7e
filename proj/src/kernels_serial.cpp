#include "mevolve/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mevolve::kernels::serial {

std::size_t evaluate_columns(const Nonlinearity& f, double shift, const Eigen::MatrixXd& states,
                             std::size_t nodes, ClampBounds bounds, Eigen::MatrixXd& out) {
  const Eigen::Index rows = states.rows();
  const Eigen::Index cols = states.cols();
  out.resize(rows, cols);
  std::vector<double> clamped(static_cast<std::size_t>(rows));
  std::vector<double> value(static_cast<std::size_t>(rows));
  std::size_t outside = 0;
  for (Eigen::Index k = 0; k < cols; ++k) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x = states(i, k);
      if (x < bounds.lo[i] - kTolOrder || x > bounds.hi[i] + kTolOrder) ++outside;
      clamped[static_cast<std::size_t>(i)] = std::min(std::max(x, bounds.lo[i]), bounds.hi[i]);
    }
    f.eval(clamped, nodes, value);
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, k) = value[static_cast<std::size_t>(i)] + shift * clamped[static_cast<std::size_t>(i)];
    }
  }
  return outside;
}

void multiply_columns(const Eigen::MatrixXd& op, const Eigen::MatrixXd& in,
                      Eigen::MatrixXd& out) {
  const Eigen::MatrixXd opT = op.transpose();  // contiguous rows
  const Eigen::Index n = op.rows();
  const Eigen::Index m = op.cols();
  out.resize(n, in.cols());
  for (Eigen::Index k = 0; k < in.cols(); ++k) {
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
  for (Eigen::Index k = 0; k + 1 < cols; ++k) {
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
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      worst = std::max(worst, signs[i] * (a(i, k) - b(i, k)));
    }
  }
  return worst;
}

double sup_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) worst = std::max(worst, std::abs(a(i, k) - b(i, k)));
  }
  return worst;
}

double time_violation(const Eigen::MatrixXd& states, const Eigen::VectorXd& signs,
                      bool increasing) {
  const double dir = increasing ? 1.0 : -1.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < states.cols(); ++k) {
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
      worst = std::max(worst, dir * signs[i] * (states(i, k) - states(i, k + 1)));
    }
  }
  return worst;
}

}  // namespace mevolve::kernels::serial
