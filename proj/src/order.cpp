#include "mevolve/order.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mevolve {

namespace {

void require_same_shape(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size() || a.components() != b.components()) {
    throw StructuralError("grid functions differ in shape: " + std::to_string(a.size()) + "x" +
                          std::to_string(a.components()) + " vs " + std::to_string(b.size()) +
                          "x" + std::to_string(b.components()));
  }
}

void require_cone_fits(const GridFunction& a, const ConeSpec& cone) {
  if (a.components() != cone.components()) {
    throw StructuralError("cone has " + std::to_string(cone.components()) +
                          " components, grid function has " + std::to_string(a.components()));
  }
}

}  // namespace

GridFunction::GridFunction(Eigen::VectorXd values, int components)
    : values_(std::move(values)), components_(components) {
  if (components_ < 1) throw StructuralError("component count must be positive");
  if (values_.size() == 0 || values_.size() % components_ != 0) {
    throw StructuralError("length " + std::to_string(values_.size()) +
                          " is not a positive multiple of " + std::to_string(components_));
  }
  if (!values_.allFinite()) throw StructuralError("grid function has non-finite entries");
}

GridFunction GridFunction::constant(std::size_t nodes, double value, int components) {
  return GridFunction(
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nodes * components), value), components);
}

GridFunction GridFunction::zeros(std::size_t nodes, int components) {
  return constant(nodes, 0.0, components);
}

GridFunction GridFunction::stack(const std::vector<GridFunction>& blocks) {
  if (blocks.empty()) throw StructuralError("cannot stack zero blocks");
  const auto n = blocks.front().size();
  Eigen::VectorXd values(static_cast<Eigen::Index>(n * blocks.size()));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].components() != 1 || blocks[k].size() != n) {
      throw StructuralError("stacked blocks must be single-component and equally sized");
    }
    values.segment(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(n)) =
        blocks[k].values();
  }
  return GridFunction(std::move(values), static_cast<int>(blocks.size()));
}

GridFunction GridFunction::component(int k) const {
  if (k < 0 || k >= components_) throw StructuralError("component index out of range");
  const auto n = static_cast<Eigen::Index>(nodes());
  return GridFunction(values_.segment(k * n, n), 1);
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  require_same_shape(a, b);
  return GridFunction(a.values_ + b.values_, a.components_);
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  require_same_shape(a, b);
  return GridFunction(a.values_ - b.values_, a.components_);
}

GridFunction operator*(double s, const GridFunction& a) {
  return GridFunction(s * a.values_, a.components_);
}

ConeSpec::ConeSpec(std::vector<int> signs) : signs_(std::move(signs)) {
  if (signs_.empty()) throw StructuralError("cone needs at least one component");
  for (int s : signs_) {
    if (s != 1 && s != -1) throw StructuralError("cone signs must be +1 or -1");
  }
}

ConeSpec ConeSpec::standard(int components) {
  return ConeSpec(std::vector<int>(static_cast<std::size_t>(components), 1));
}

ConeSpec ConeSpec::competition() { return ConeSpec({1, -1}); }

Eigen::VectorXd ConeSpec::entry_signs(std::size_t nodes) const {
  const auto n = static_cast<Eigen::Index>(nodes);
  Eigen::VectorXd s(n * components());
  for (int k = 0; k < components(); ++k) s.segment(k * n, n).setConstant(sign(k));
  return s;
}

OrderInterval::OrderInterval(GridFunction lower, GridFunction upper, ConeSpec cone)
    : lower_(std::move(lower)), upper_(std::move(upper)), cone_(std::move(cone)) {
  require_same_shape(lower_, upper_);
  require_cone_fits(lower_, cone_);
  const double v = order_violation(lower_, upper_, cone_);
  if (v > kTolOrder) {
    throw ValidationError("interval bounds are not ordered (violation " + std::to_string(v) + ")");
  }
}

Eigen::VectorXd OrderInterval::entry_min() const {
  return lower_.values().cwiseMin(upper_.values());
}

Eigen::VectorXd OrderInterval::entry_max() const {
  return lower_.values().cwiseMax(upper_.values());
}

bool OrderInterval::degenerate(double tol) const {
  return (upper_.values() - lower_.values()).cwiseAbs().maxCoeff() <= tol;
}

double order_violation(const GridFunction& u, const GridFunction& v, const ConeSpec& cone) {
  require_same_shape(u, v);
  require_cone_fits(u, cone);
  const auto signs = cone.entry_signs(u.nodes());
  return signs.cwiseProduct(u.values() - v.values()).maxCoeff();
}

bool leq(const GridFunction& u, const GridFunction& v, const ConeSpec& cone) {
  return order_violation(u, v, cone) <= kTolOrder;
}

double monotone_norm(const GridFunction& u) { return u.values().cwiseAbs().maxCoeff(); }

GridFunction clamp_to_interval(const GridFunction& u, const OrderInterval& interval) {
  require_same_shape(u, interval.lower());
  return GridFunction(u.values().cwiseMax(interval.entry_min()).cwiseMin(interval.entry_max()),
                      u.components());
}

}  // namespace mevolve
