#include "mevolve/nonlin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace mevolve {

void Nonlinearity::eval(std::span<const double> u, std::size_t nodes,
                        std::span<double> out) const {
  const auto c = static_cast<std::size_t>(arity());
  std::array<double, 8> state{};
  std::array<double, 8> value{};
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t k = 0; k < c; ++k) state[k] = u[k * nodes + i];
    eval_node(i, std::span<const double>(state.data(), c), std::span<double>(value.data(), c));
    for (std::size_t k = 0; k < c; ++k) out[k * nodes + i] = value[k];
  }
}

GridFunction Nonlinearity::operator()(const GridFunction& u) const {
  if (u.components() != arity()) throw StructuralError("nonlinearity arity mismatch");
  Eigen::VectorXd out(u.values().size());
  eval(std::span<const double>(u.values().data(), u.size()), u.nodes(),
       std::span<double>(out.data(), u.size()));
  return GridFunction(std::move(out), u.components());
}

Eigen::MatrixXd Nonlinearity::jacobian(const GridFunction& u) const {
  if (u.components() != arity()) throw StructuralError("nonlinearity arity mismatch");
  const auto c = static_cast<std::size_t>(arity());
  const auto n = u.nodes();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(u.values().size(), u.values().size());
  std::array<double, 8> state{};
  std::array<double, 64> local{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < c; ++k) state[k] = u[k * n + i];
    jacobian_node(i, std::span<const double>(state.data(), c),
                  std::span<double>(local.data(), c * c));
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t l = 0; l < c; ++l) {
        jac(static_cast<Eigen::Index>(k * n + i), static_cast<Eigen::Index>(l * n + i)) =
            local[k * c + l];
      }
    }
  }
  return jac;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_arity(const OrderInterval& interval, int arity) {
  if (interval.lower().components() != arity) {
    throw StructuralError("interval has " + std::to_string(interval.lower().components()) +
                          " components, nonlinearity expects " + std::to_string(arity));
  }
}

class Logistic final : public Nonlinearity {
 public:
  Logistic(double a, double b) : a_(a), b_(b) {}

  std::string name() const override { return "logistic"; }
  int arity() const override { return 1; }

  void eval_node(std::size_t, std::span<const double> s, std::span<double> out) const override {
    out[0] = s[0] * (a_ - b_ * s[0]);
  }
  void jacobian_node(std::size_t, std::span<const double> s,
                     std::span<double> jac) const override {
    jac[0] = a_ - 2.0 * b_ * s[0];
  }
  void eval(std::span<const double> u, std::size_t nodes, std::span<double> out) const override {
    for (std::size_t i = 0; i < nodes; ++i) out[i] = u[i] * (a_ - b_ * u[i]);
  }

  double lipschitz_on(const OrderInterval& interval) const override {
    require_arity(interval, 1);
    const double r = std::max(interval.entry_max().maxCoeff(), -interval.entry_min().minCoeff());
    return a_ + 2.0 * b_ * r;
  }
  double quasi_increasing_shift(const OrderInterval& interval) const override {
    require_arity(interval, 1);
    return std::max(0.0, 2.0 * b_ * interval.entry_max().maxCoeff() - a_);
  }
  double bound_on(const OrderInterval& interval) const override {
    require_arity(interval, 1);
    const auto lo = interval.entry_min();
    const auto hi = interval.entry_max();
    const double peak = a_ / (2.0 * b_);
    double best = 0.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      for (double x : {lo[i], hi[i]}) best = std::max(best, std::abs(x * (a_ - b_ * x)));
      if (lo[i] <= peak && peak <= hi[i]) best = std::max(best, peak * (a_ - b_ * peak));
    }
    return best;
  }

 private:
  double a_, b_;
};

// h'(xi) is quadratic; its extremes on [lo, hi] sit at the ends or the vertex.
std::array<double, 2> fisher_slope_range(double lo, double hi, double alpha) {
  double mn = std::min(fisher_h_prime(lo, alpha), fisher_h_prime(hi, alpha));
  double mx = std::max(fisher_h_prime(lo, alpha), fisher_h_prime(hi, alpha));
  const double curvature = -3.0 * (1.0 - 2.0 * alpha);
  if (curvature != 0.0) {
    const double vertex = (1.0 - 3.0 * alpha) / (3.0 * (1.0 - 2.0 * alpha));
    if (lo < vertex && vertex < hi) {
      mn = std::min(mn, fisher_h_prime(vertex, alpha));
      mx = std::max(mx, fisher_h_prime(vertex, alpha));
    }
  }
  return {mn, mx};
}

class Fisher final : public Nonlinearity {
 public:
  Fisher(GridFunction m, double alpha) : m_(std::move(m)), alpha_(alpha) {}

  std::string name() const override { return "fisher"; }
  int arity() const override { return 1; }

  void eval_node(std::size_t node, std::span<const double> s,
                 std::span<double> out) const override {
    out[0] = m_[node] * fisher_h(s[0], alpha_);
  }
  void jacobian_node(std::size_t node, std::span<const double> s,
                     std::span<double> jac) const override {
    jac[0] = m_[node] * fisher_h_prime(s[0], alpha_);
  }
  void eval(std::span<const double> u, std::size_t nodes, std::span<double> out) const override {
    if (nodes != m_.size()) throw StructuralError("fisher weight does not match the mesh");
    for (std::size_t i = 0; i < nodes; ++i) out[i] = m_[i] * fisher_h(u[i], alpha_);
  }

  double lipschitz_on(const OrderInterval& interval) const override {
    check(interval);
    const auto lo = interval.entry_min();
    const auto hi = interval.entry_max();
    double best = 0.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const auto [mn, mx] = fisher_slope_range(lo[i], hi[i], alpha_);
      best = std::max(best, std::abs(m_[static_cast<std::size_t>(i)]) *
                                std::max(std::abs(mn), std::abs(mx)));
    }
    return best;
  }
  double quasi_increasing_shift(const OrderInterval& interval) const override {
    check(interval);
    const auto lo = interval.entry_min();
    const auto hi = interval.entry_max();
    double mu = 0.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const auto [mn, mx] = fisher_slope_range(lo[i], hi[i], alpha_);
      const double m = m_[static_cast<std::size_t>(i)];
      const double slope = m >= 0.0 ? m * mn : m * mx;
      mu = std::max(mu, -slope);
    }
    return mu;
  }
  double bound_on(const OrderInterval& interval) const override {
    check(interval);
    const auto lo = interval.entry_min();
    const auto hi = interval.entry_max();
    // Critical points of h: roots of h'.
    const double qa = -3.0 * (1.0 - 2.0 * alpha_);
    const double qb = 2.0 * (1.0 - 3.0 * alpha_);
    const double qc = alpha_;
    std::vector<double> crit;
    if (qa == 0.0) {
      crit.push_back(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        crit.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
        crit.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
      }
    }
    double best = 0.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      double h = std::max(std::abs(fisher_h(lo[i], alpha_)), std::abs(fisher_h(hi[i], alpha_)));
      for (double x : crit) {
        if (lo[i] < x && x < hi[i]) h = std::max(h, std::abs(fisher_h(x, alpha_)));
      }
      best = std::max(best, std::abs(m_[static_cast<std::size_t>(i)]) * h);
    }
    return best;
  }

 private:
  void check(const OrderInterval& interval) const {
    require_arity(interval, 1);
    if (interval.nodes() != m_.size()) throw StructuralError("fisher weight does not match");
  }

  GridFunction m_;
  double alpha_;
};

class Competition final : public Nonlinearity {
 public:
  explicit Competition(const CompetitionRates& r) : r_(r) {}

  std::string name() const override { return "competition"; }
  int arity() const override { return 2; }

  void eval_node(std::size_t, std::span<const double> s, std::span<double> out) const override {
    const double u1 = s[0];
    const double u2 = s[1];
    out[0] = u1 * (r_.a1 - r_.b11 * u1 - r_.b12 * u2);
    out[1] = u2 * (r_.a2 - r_.b21 * u1 - r_.b22 * u2);
  }
  void jacobian_node(std::size_t, std::span<const double> s,
                     std::span<double> jac) const override {
    const double u1 = s[0];
    const double u2 = s[1];
    jac[0] = r_.a1 - 2.0 * r_.b11 * u1 - r_.b12 * u2;
    jac[1] = -r_.b12 * u1;
    jac[2] = -r_.b21 * u2;
    jac[3] = r_.a2 - r_.b21 * u1 - 2.0 * r_.b22 * u2;
  }

  double lipschitz_on(const OrderInterval& interval) const override {
    const auto [u1, u2] = extents(interval);
    double best = 0.0;
    for (Eigen::Index i = 0; i < u1.size(); ++i) {
      const double row1 =
          r_.a1 + 2.0 * r_.b11 * u1[i] + r_.b12 * u2[i] + r_.b12 * u1[i];
      const double row2 =
          r_.a2 + r_.b21 * u1[i] + 2.0 * r_.b22 * u2[i] + r_.b21 * u2[i];
      best = std::max({best, row1, row2});
    }
    return best;
  }

  // F(v) - F(u) = Phi(u, v)(v - u); Phi + mu I preserves E+ x (-E+) once both
  // diagonal entries are non-negative, which needs mu >= -c11 and mu >= -c22.
  double quasi_increasing_shift(const OrderInterval& interval) const override {
    if (!(interval.cone() == ConeSpec::competition())) {
      throw ValidationError("competition is quasi-increasing only in the flipped cone");
    }
    const auto [u1, u2] = extents(interval);
    double mu = 0.0;
    for (Eigen::Index i = 0; i < u1.size(); ++i) {
      mu = std::max({mu, 2.0 * r_.b11 * u1[i] + r_.b12 * u2[i] - r_.a1,
                     r_.b21 * u1[i] + 2.0 * r_.b22 * u2[i] - r_.a2});
    }
    return mu;
  }

  double bound_on(const OrderInterval& interval) const override {
    const auto [u1, u2] = extents(interval);
    double best = 0.0;
    for (Eigen::Index i = 0; i < u1.size(); ++i) {
      best = std::max({best, u1[i] * (r_.a1 + r_.b11 * u1[i] + r_.b12 * u2[i]),
                       u2[i] * (r_.a2 + r_.b21 * u1[i] + r_.b22 * u2[i])});
    }
    return best;
  }

 private:
  // Per-node maxima of each species over the interval; both must stay >= 0.
  std::array<Eigen::VectorXd, 2> extents(const OrderInterval& interval) const {
    require_arity(interval, 2);
    const auto n = static_cast<Eigen::Index>(interval.nodes());
    if (interval.entry_min().minCoeff() < -kTolOrder) {
      throw ValidationError("competition certificates need non-negative populations");
    }
    const auto hi = interval.entry_max();
    return {hi.head(n), hi.tail(n)};
  }

  CompetitionRates r_;
};

class SignedSqrt final : public Nonlinearity {
 public:
  std::string name() const override { return "signed_sqrt"; }
  int arity() const override { return 1; }

  void eval_node(std::size_t, std::span<const double> s, std::span<double> out) const override {
    out[0] = std::copysign(std::sqrt(std::abs(s[0])), s[0]);
  }
  void jacobian_node(std::size_t, std::span<const double> s,
                     std::span<double> jac) const override {
    const double r = std::abs(s[0]);
    jac[0] = r == 0.0 ? kInf : 0.5 / std::sqrt(r);
  }

  double lipschitz_on(const OrderInterval& interval) const override {
    require_arity(interval, 1);
    const auto lo = interval.entry_min();
    const auto hi = interval.entry_max();
    double best = 0.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (lo[i] <= 0.0 && hi[i] >= 0.0) return kInf;
      best = std::max(best, 0.5 / std::sqrt(std::min(std::abs(lo[i]), std::abs(hi[i]))));
    }
    return best;
  }
  double quasi_increasing_shift(const OrderInterval& interval) const override {
    require_arity(interval, 1);
    return 0.0;
  }
  double bound_on(const OrderInterval& interval) const override {
    require_arity(interval, 1);
    const double r = std::max(interval.entry_max().maxCoeff(), -interval.entry_min().minCoeff());
    return std::sqrt(r);
  }
};

double param(const std::map<std::string, double>& params, const std::string& preset,
             const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) {
    throw ValidationError(preset + ": missing parameter '" + key + "'");
  }
  return it->second;
}

}  // namespace

double fisher_h(double xi, double alpha) {
  return xi * (1.0 - xi) * (alpha * (1.0 - xi) + (1.0 - alpha) * xi);
}

double fisher_h_prime(double xi, double alpha) {
  return alpha + 2.0 * (1.0 - 3.0 * alpha) * xi - 3.0 * (1.0 - 2.0 * alpha) * xi * xi;
}

NonlinearityPtr logistic(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("logistic rates must be positive");
  return std::make_shared<Logistic>(a, b);
}

NonlinearityPtr fisher(GridFunction m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("fisher alpha must lie in (0, 1)");
  if (m.components() != 1) throw StructuralError("fisher weight must be single-component");
  return std::make_shared<Fisher>(std::move(m), alpha);
}

NonlinearityPtr competition(const CompetitionRates& r) {
  for (double v : {r.a1, r.a2, r.b11, r.b12, r.b21, r.b22}) {
    if (!(v > 0.0)) throw ValidationError("competition rates must be positive");
  }
  return std::make_shared<Competition>(r);
}

NonlinearityPtr signed_sqrt() { return std::make_shared<SignedSqrt>(); }

const std::vector<PresetInfo>& nonlinearity_presets() {
  static const std::vector<PresetInfo> presets{
      {"logistic", {"a", "b"}, false},
      {"fisher", {"alpha"}, true},
      {"competition", {"a1", "a2", "b11", "b12", "b21", "b22"}, false},
      {"signed_sqrt", {}, false},
  };
  return presets;
}

NonlinearityPtr make_nonlinearity(const std::string& name,
                                  const std::map<std::string, double>& params,
                                  const std::optional<GridFunction>& weight) {
  const auto& presets = nonlinearity_presets();
  const auto it = std::find_if(presets.begin(), presets.end(),
                               [&](const PresetInfo& p) { return p.name == name; });
  if (it == presets.end()) throw ValidationError("unknown nonlinearity '" + name + "'");
  for (const auto& [key, value] : params) {
    if (std::find(it->params.begin(), it->params.end(), key) == it->params.end()) {
      throw ValidationError(name + ": unknown parameter '" + key + "'");
    }
  }
  if (name == "logistic") return logistic(param(params, name, "a"), param(params, name, "b"));
  if (name == "fisher") {
    if (!weight) throw ValidationError("fisher: a weight function m is required");
    return fisher(*weight, param(params, name, "alpha"));
  }
  if (name == "competition") {
    return competition({param(params, name, "a1"), param(params, name, "a2"),
                        param(params, name, "b11"), param(params, name, "b12"),
                        param(params, name, "b21"), param(params, name, "b22")});
  }
  return signed_sqrt();
}

}  // namespace mevolve
