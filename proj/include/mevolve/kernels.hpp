#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "mevolve/nonlin.hpp"

// Trajectory kernels. Every state trajectory is an N x (K+1) matrix whose
// column k holds the state at time node k.
//
// `serial` is the plain-loop reference kept for testing; `openmp` is the
// production path. Both produce results that are independent of the thread
// count: reductions are max-only and each output entry is owned by one thread.

namespace mevolve::kernels {

enum class Backend { serial, openmp };

struct ClampBounds {
  const Eigen::VectorXd& lo;
  const Eigen::VectorXd& hi;
};

namespace serial {

/// out(:, k) = F(clamp(states(:, k))) + shift * clamp(states(:, k)).
/// Returns the number of entries that lay outside the bounds by more than
/// kTolOrder.
std::size_t evaluate_columns(const Nonlinearity& f, double shift, const Eigen::MatrixXd& states,
                             std::size_t nodes, ClampBounds bounds, Eigen::MatrixXd& out);
/// out = op * in, column by column.
void multiply_columns(const Eigen::MatrixXd& op, const Eigen::MatrixXd& in, Eigen::MatrixXd& out);
/// out(:, 0) = start; out(:, k+1) = step * out(:, k) + forcing(:, k+1).
void propagate(const Eigen::MatrixXd& step, const Eigen::VectorXd& start,
               const Eigen::MatrixXd& forcing, Eigen::MatrixXd& out);
/// max over entries of signs_i * (a - b)_{ik}.
double max_violation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::VectorXd& signs);
double sup_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
/// Worst failure of signs * states(:, k) <= signs * states(:, k+1) when
/// `increasing`, or the reverse otherwise.
double time_violation(const Eigen::MatrixXd& states, const Eigen::VectorXd& signs,
                      bool increasing);

}  // namespace serial

namespace openmp {

std::size_t evaluate_columns(const Nonlinearity& f, double shift, const Eigen::MatrixXd& states,
                             std::size_t nodes, ClampBounds bounds, Eigen::MatrixXd& out);
void multiply_columns(const Eigen::MatrixXd& op, const Eigen::MatrixXd& in, Eigen::MatrixXd& out);
void propagate(const Eigen::MatrixXd& step, const Eigen::VectorXd& start,
               const Eigen::MatrixXd& forcing, Eigen::MatrixXd& out);
double max_violation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::VectorXd& signs);
double sup_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double time_violation(const Eigen::MatrixXd& states, const Eigen::VectorXd& signs,
                      bool increasing);

}  // namespace openmp

inline std::size_t evaluate_columns(Backend b, const Nonlinearity& f, double shift,
                                    const Eigen::MatrixXd& states, std::size_t nodes,
                                    ClampBounds bounds, Eigen::MatrixXd& out) {
  return b == Backend::serial ? serial::evaluate_columns(f, shift, states, nodes, bounds, out)
                              : openmp::evaluate_columns(f, shift, states, nodes, bounds, out);
}
inline void multiply_columns(Backend b, const Eigen::MatrixXd& op, const Eigen::MatrixXd& in,
                             Eigen::MatrixXd& out) {
  b == Backend::serial ? serial::multiply_columns(op, in, out)
                       : openmp::multiply_columns(op, in, out);
}
inline void propagate(Backend b, const Eigen::MatrixXd& step, const Eigen::VectorXd& start,
                      const Eigen::MatrixXd& forcing, Eigen::MatrixXd& out) {
  b == Backend::serial ? serial::propagate(step, start, forcing, out)
                       : openmp::propagate(step, start, forcing, out);
}
inline double max_violation(Backend b, const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                            const Eigen::VectorXd& signs) {
  return b == Backend::serial ? serial::max_violation(a, c, signs)
                              : openmp::max_violation(a, c, signs);
}
inline double sup_distance(Backend b, const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
  return b == Backend::serial ? serial::sup_distance(a, c) : openmp::sup_distance(a, c);
}
inline double time_violation(Backend b, const Eigen::MatrixXd& states,
                             const Eigen::VectorXd& signs, bool increasing) {
  return b == Backend::serial ? serial::time_violation(states, signs, increasing)
                              : openmp::time_violation(states, signs, increasing);
}

}  // namespace mevolve::kernels
