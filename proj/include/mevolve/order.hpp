#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mevolve/errors.hpp"

namespace mevolve {

/// Absolute slack used by every order comparison.
inline constexpr double kTolOrder = 1e-12;

/// Real values over a 1-D mesh, possibly with several components.
///
/// Components are stored in contiguous blocks: entry `k * nodes() + i` is
/// component `k` at mesh node `i`. All entries are finite.
class GridFunction {
 public:
  explicit GridFunction(Eigen::VectorXd values, int components = 1);

  static GridFunction constant(std::size_t nodes, double value, int components = 1);
  static GridFunction zeros(std::size_t nodes, int components = 1);
  /// Stacks single-component blocks into one multi-component function.
  static GridFunction stack(const std::vector<GridFunction>& blocks);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  int components() const noexcept { return components_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  std::size_t nodes() const noexcept { return size() / static_cast<std::size_t>(components_); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  GridFunction component(int k) const;
  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator-(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator*(double s, const GridFunction& a);

 private:
  Eigen::VectorXd values_;
  int components_;
};

/// Orthant cone with a sign per component: +1 keeps the pointwise order,
/// -1 reverses it for that component.
class ConeSpec {
 public:
  explicit ConeSpec(std::vector<int> signs);

  static ConeSpec standard(int components = 1);
  /// (+1, -1): the first species grows while the second shrinks.
  static ConeSpec competition();

  int components() const noexcept { return static_cast<int>(signs_.size()); }
  int sign(int k) const { return signs_.at(static_cast<std::size_t>(k)); }
  const std::vector<int>& signs() const noexcept { return signs_; }
  /// Per-entry signs for a grid function with `nodes` points per component.
  Eigen::VectorXd entry_signs(std::size_t nodes) const;

  bool operator==(const ConeSpec&) const = default;

 private:
  std::vector<int> signs_;
};

/// [lower, upper] in the order of `cone`; construction checks lower <= upper.
class OrderInterval {
 public:
  OrderInterval(GridFunction lower, GridFunction upper, ConeSpec cone);

  const GridFunction& lower() const noexcept { return lower_; }
  const GridFunction& upper() const noexcept { return upper_; }
  const ConeSpec& cone() const noexcept { return cone_; }
  std::size_t size() const noexcept { return lower_.size(); }
  std::size_t nodes() const noexcept { return lower_.nodes(); }

  /// Entrywise min/max of the two bounds, independent of orientation.
  Eigen::VectorXd entry_min() const;
  Eigen::VectorXd entry_max() const;
  bool degenerate(double tol = kTolOrder) const;

 private:
  GridFunction lower_;
  GridFunction upper_;
  ConeSpec cone_;
};

/// Largest value of signs * (u - v) over all entries. Positive values measure
/// how far `u <= v` fails; the order holds when the result is <= kTolOrder.
double order_violation(const GridFunction& u, const GridFunction& v, const ConeSpec& cone);

bool leq(const GridFunction& u, const GridFunction& v, const ConeSpec& cone);

/// Sup norm. Monotone for every orthant cone: 0 <= a <= b implies |a| <= |b|.
double monotone_norm(const GridFunction& u);

GridFunction clamp_to_interval(const GridFunction& u, const OrderInterval& interval);

}  // namespace mevolve
