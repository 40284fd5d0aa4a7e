#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mevolve/order.hpp"

namespace mevolve {

/// Substitution operator [F(u)](x) = f(x, u(x)), possibly coupling the
/// components at each node.
///
/// Implementations provide the pointwise map, its Jacobian, and interval-local
/// certificates. The interval arguments bound the states F is evaluated on.
class Nonlinearity {
 public:
  virtual ~Nonlinearity() = default;

  virtual std::string name() const = 0;
  virtual int arity() const = 0;

  /// `state` and `out` hold one value per component at mesh node `node`.
  virtual void eval_node(std::size_t node, std::span<const double> state,
                         std::span<double> out) const = 0;
  /// Row-major arity x arity Jacobian at one node.
  virtual void jacobian_node(std::size_t node, std::span<const double> state,
                             std::span<double> jac) const = 0;

  /// Lipschitz bound on the interval in the sup norm; +inf when unbounded.
  virtual double lipschitz_on(const OrderInterval& interval) const = 0;
  /// Smallest mu >= 0 (up to the closed-form bound) making F + mu id
  /// increasing on the interval in its cone order. Throws ValidationError
  /// when no certificate is available.
  virtual double quasi_increasing_shift(const OrderInterval& interval) const = 0;
  /// Upper bound on sup |F(v)| over the interval.
  virtual double bound_on(const OrderInterval& interval) const = 0;

  /// Whole-vector evaluation; `u` is laid out in component blocks of `nodes`.
  virtual void eval(std::span<const double> u, std::size_t nodes, std::span<double> out) const;

  GridFunction operator()(const GridFunction& u) const;
  /// Dense Jacobian of the substitution operator.
  Eigen::MatrixXd jacobian(const GridFunction& u) const;
};

using NonlinearityPtr = std::shared_ptr<const Nonlinearity>;

inline double quasi_increasing_shift(const Nonlinearity& f, const OrderInterval& interval) {
  return f.quasi_increasing_shift(interval);
}

/// f(xi) = a xi - b xi^2.
NonlinearityPtr logistic(double a, double b);

/// f(x, xi) = m(x) h(xi), h(xi) = xi (1 - xi) (alpha (1 - xi) + (1 - alpha) xi).
NonlinearityPtr fisher(GridFunction m, double alpha);
double fisher_h(double xi, double alpha);
double fisher_h_prime(double xi, double alpha);

struct CompetitionRates {
  double a1, a2, b11, b12, b21, b22;
};

/// Lotka-Volterra competition: two components, order taken in the flipped
/// product cone.
NonlinearityPtr competition(const CompetitionRates& rates);

/// F(xi) = sign(xi) sqrt|xi|: increasing, not Lipschitz at 0.
NonlinearityPtr signed_sqrt();

struct PresetInfo {
  std::string name;
  std::vector<std::string> params;
  bool needs_weight;  // fisher takes the mesh weight m
};

const std::vector<PresetInfo>& nonlinearity_presets();

/// Builds a preset by name. Missing or unknown parameters raise ValidationError.
NonlinearityPtr make_nonlinearity(const std::string& name,
                                  const std::map<std::string, double>& params,
                                  const std::optional<GridFunction>& weight = std::nullopt);

}  // namespace mevolve
