#include "mevolve/operators.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <queue>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace mevolve {

struct GeneratorSpec::Cache {
  std::once_flag once;
  SpectralDecomposition spectral;
};

namespace {

bool is_tridiagonal(const Eigen::MatrixXd& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (std::abs(i - j) > 1 && a(i, j) != 0.0) return false;
    }
  }
  return true;
}

// w with w_i a_{i,i+1} = w_{i+1} a_{i+1,i}; empty when no such weight exists.
Eigen::VectorXd symmetrizer(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (!is_tridiagonal(a)) return {};
  Eigen::VectorXd w(n);
  w[0] = 1.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double up = a(i, i + 1);
    const double down = a(i + 1, i);
    if (up == 0.0 && down == 0.0) {
      w[i + 1] = 1.0;
    } else if (up * down > 0.0) {
      w[i + 1] = w[i] * up / down;
    } else {
      return {};
    }
  }
  return w;
}

double integrated_exponential(double lambda, double t) {
  const double x = lambda * t;
  if (std::abs(x) < 1e-8) return t * (1.0 - 0.5 * x);
  return -std::expm1(-x) / lambda;
}

Eigen::MatrixXd apply_spectral(const SpectralDecomposition& s, const Eigen::VectorXd& f) {
  Eigen::MatrixXd out = s.right * f.asDiagonal() * s.left;
  // Exact entries are non-negative; anything below zero is round-off.
  return out.cwiseMax(0.0);
}

}  // namespace

std::string to_string(const BoundaryCondition& bc) {
  switch (bc.kind) {
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::neumann: return "neumann";
    case BoundaryKind::robin: return "robin";
    case BoundaryKind::none: return "none";
  }
  return "none";
}

BoundaryCondition parse_boundary(const std::string& name, double beta) {
  if (name == "dirichlet") return BoundaryCondition::dirichlet();
  if (name == "neumann") return BoundaryCondition::neumann();
  if (name == "robin") return BoundaryCondition::robin(beta);
  throw ValidationError("unknown boundary condition '" + name + "'");
}

GeneratorSpec::GeneratorSpec(Eigen::MatrixXd matrix, double mesh_h, BoundaryCondition bc,
                             int components)
    : matrix_(std::move(matrix)),
      mesh_h_(mesh_h),
      bc_(bc),
      components_(components),
      cache_(std::make_shared<Cache>()) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
    throw StructuralError("generator matrix must be square and non-empty");
  }
  if (components_ < 1 || matrix_.rows() % components_ != 0) {
    throw StructuralError("generator size is not a multiple of the component count");
  }
  if (!(mesh_h_ > 0.0)) throw ValidationError("mesh width must be positive");
  if (!matrix_.allFinite()) throw StructuralError("generator matrix has non-finite entries");
  for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
      if (i != j && matrix_(i, j) > 0.0) {
        throw ValidationError("generator has a positive off-diagonal entry at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  weight_ = symmetrizer(matrix_);
  symmetrizable_ = weight_.size() == matrix_.rows();
}

GeneratorSpec GeneratorSpec::shifted(double mu) const {
  if (mu == 0.0) return *this;
  Eigen::MatrixXd m = matrix_;
  m.diagonal().array() += mu;
  GeneratorSpec out(std::move(m), mesh_h_, bc_, components_);
  out.potential_ = potential_;
  out.shift_ = shift_ + mu;
  return out;
}

GeneratorSpec GeneratorSpec::with_potential(const GridFunction& m) const {
  if (m.size() != dimension()) {
    throw StructuralError("potential has " + std::to_string(m.size()) + " entries, generator " +
                          std::to_string(dimension()));
  }
  Eigen::MatrixXd a = matrix_;
  a.diagonal() += m.values();
  GeneratorSpec out(std::move(a), mesh_h_, bc_, components_);
  out.potential_ = potential_ ? Eigen::VectorXd(*potential_ + m.values()) : m.values();
  out.shift_ = shift_;
  return out;
}

const SpectralDecomposition& GeneratorSpec::spectral() const {
  if (!symmetrizable_) {
    throw ValidationError("spectral decomposition requires a symmetrizable generator");
  }
  std::call_once(cache_->once, [this] {
    const Eigen::Index n = matrix_.rows();
    const Eigen::VectorXd s = weight_.cwiseSqrt();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      b(i, i) = matrix_(i, i);
      if (i + 1 < n && matrix_(i, i + 1) != 0.0) {
        const double off = -std::sqrt(matrix_(i, i + 1) * matrix_(i + 1, i));
        b(i, i + 1) = off;
        b(i + 1, i) = off;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("symmetric eigensolver failed", 0.0);
    }
    cache_->spectral.eigenvalues = solver.eigenvalues();
    cache_->spectral.right = s.cwiseInverse().asDiagonal() * solver.eigenvectors();
    cache_->spectral.left = solver.eigenvectors().transpose() * s.asDiagonal();
  });
  return cache_->spectral;
}

Eigen::MatrixXd GeneratorSpec::semigroup_matrix(double t) const {
  if (t < 0.0) throw ValidationError("semigroup time must be non-negative");
  if (t == 0.0) return Eigen::MatrixXd::Identity(matrix_.rows(), matrix_.cols());
  if (symmetrizable_) {
    const auto& s = spectral();
    return apply_spectral(s, (-t * s.eigenvalues.array()).exp().matrix());
  }
  Eigen::MatrixXd e = (-t * matrix_).exp();
  return e.cwiseMax(0.0);
}

Eigen::MatrixXd GeneratorSpec::integrated_semigroup_matrix(double t) const {
  if (t < 0.0) throw ValidationError("integration length must be non-negative");
  const Eigen::Index n = matrix_.rows();
  if (symmetrizable_) {
    const auto& s = spectral();
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = integrated_exponential(s.eigenvalues[i], t);
    return apply_spectral(s, f);
  }
  // exp(t [[-A, I], [0, 0]]) carries the integral in its upper-right block.
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = -matrix_;
  aug.topRightCorner(n, n).setIdentity();
  Eigen::MatrixXd e = (t * aug).exp();
  return e.topRightCorner(n, n).cwiseMax(0.0);
}

double GeneratorSpec::spectral_bound() const {
  if (symmetrizable_) return spectral().eigenvalues[0];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix_, false);
  return solver.eigenvalues().real().minCoeff();
}

GeneratorSpec GeneratorSpec::block(int k) const {
  if (k < 0 || k >= components_) throw StructuralError("block index out of range");
  const auto n = static_cast<Eigen::Index>(nodes());
  return GeneratorSpec(matrix_.block(k * n, k * n, n, n), mesh_h_, bc_, 1);
}

GeneratorSpec build_laplacian_1d(std::size_t n, BoundaryCondition bc) {
  if (n < 2) throw StructuralError("a 1-D Laplacian needs at least two nodes");
  if (bc.kind == BoundaryKind::robin && !(bc.beta >= 0.0)) {
    throw ValidationError("robin coefficient must be non-negative");
  }
  if (bc.kind == BoundaryKind::none) throw ValidationError("a Laplacian needs a boundary condition");
  const auto size = static_cast<Eigen::Index>(n);
  const double h = bc.kind == BoundaryKind::dirichlet ? 1.0 / static_cast<double>(n + 1)
                                                      : 1.0 / static_cast<double>(n - 1);
  const double s = 1.0 / (h * h);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    a(i, i) = 2.0 * s;
    if (i > 0) a(i, i - 1) = -s;
    if (i + 1 < size) a(i, i + 1) = -s;
  }
  if (bc.kind != BoundaryKind::dirichlet) {
    // Ghost node u_{-1} = u_1 - 2 h beta u_0 (and its mirror at x = 1).
    const double beta = bc.kind == BoundaryKind::robin ? bc.beta : 0.0;
    a(0, 0) = (2.0 + 2.0 * h * beta) * s;
    a(0, 1) = -2.0 * s;
    a(size - 1, size - 1) = (2.0 + 2.0 * h * beta) * s;
    a(size - 1, size - 2) = -2.0 * s;
  }
  return GeneratorSpec(std::move(a), h, bc, 1);
}

GeneratorSpec scalar_generator(double a) {
  return GeneratorSpec(Eigen::MatrixXd::Constant(1, 1, a), 1.0, BoundaryCondition::none(), 1);
}

GeneratorSpec block_diagonal(const std::vector<GeneratorSpec>& blocks) {
  if (blocks.empty()) throw StructuralError("block_diagonal needs at least one block");
  const auto n = static_cast<Eigen::Index>(blocks.front().dimension());
  const auto c = static_cast<Eigen::Index>(blocks.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * c, n * c);
  BoundaryCondition bc = blocks.front().bc();
  for (Eigen::Index k = 0; k < c; ++k) {
    const auto& b = blocks[static_cast<std::size_t>(k)];
    if (b.components() != 1 || static_cast<Eigen::Index>(b.dimension()) != n) {
      throw StructuralError("blocks must be single-component generators of equal size");
    }
    if (b.bc().kind != bc.kind) bc = BoundaryCondition::none();
    a.block(k * n, k * n, n, n) = b.matrix();
  }
  return GeneratorSpec(std::move(a), blocks.front().mesh_h(), bc, static_cast<int>(c));
}

GridFunction semigroup_apply(const GeneratorSpec& A, double t, const GridFunction& v) {
  if (t < 0.0) throw ValidationError("semigroup time must be non-negative");
  if (v.size() != A.dimension()) throw StructuralError("vector does not match generator size");
  if (t == 0.0) return v;
  if (A.symmetrizable()) {
    const auto& s = A.spectral();
    Eigen::VectorXd coeff = s.left * v.values();
    coeff.array() *= (-t * s.eigenvalues.array()).exp();
    return GridFunction(s.right * coeff, v.components());
  }
  return GridFunction(A.semigroup_matrix(t) * v.values(), v.components());
}

GridFunction resolvent_apply(const GeneratorSpec& A, double lam, const GridFunction& v) {
  if (v.size() != A.dimension()) throw StructuralError("vector does not match generator size");
  const auto n = static_cast<Eigen::Index>(A.dimension());
  Eigen::MatrixXd m = A.matrix() + lam * Eigen::MatrixXd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) {
    throw NumericalError("lam I + A is singular at lam = " + std::to_string(lam), lam);
  }
  return GridFunction(lu.solve(v.values()), v.components());
}

bool is_irreducible(const Eigen::MatrixXd& matrix) {
  const Eigen::Index n = matrix.rows();
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<Eigen::Index> todo;
    todo.push(0);
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!todo.empty()) {
      const auto i = todo.front();
      todo.pop();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double a = transpose ? matrix(j, i) : matrix(i, j);
        if (j != i && a != 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          ++count;
          todo.push(j);
        }
      }
    }
    return count == n;
  };
  return reaches_all(false) && reaches_all(true);
}

namespace {

// Eigenvalue estimate for an approximate eigenvector x. For symmetrizable
// generators the weighted form sum w r x^2 + sum (-w a)(x_i - x_{i+1})^2 avoids
// the cancellation inside A x.
double rayleigh_quotient(const GeneratorSpec& A, const Eigen::VectorXd& x) {
  const auto& a = A.matrix();
  const Eigen::Index n = a.rows();
  if (A.symmetrizable()) {
    const auto& w = A.symmetrizing_weight();
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double row = a(i, i);
      if (i > 0) row += a(i, i - 1);
      if (i + 1 < n) row += a(i, i + 1);
      num += w[i] * row * x[i] * x[i];
      if (i + 1 < n) {
        const double d = x[i] - x[i + 1];
        num += -w[i] * a(i, i + 1) * d * d;
      }
      den += w[i] * x[i] * x[i];
    }
    return num / den;
  }
  return x.dot(a * x) / x.squaredNorm();
}

Eigen::VectorXd sup_normalized(const Eigen::VectorXd& y) {
  Eigen::Index at = 0;
  y.cwiseAbs().maxCoeff(&at);
  return y / y[at];
}

}  // namespace

EigPair principal_eig(const GeneratorSpec& A, const EigOptions& options) {
  const auto& a = A.matrix();
  const Eigen::Index n = a.rows();
  if (!is_irreducible(a)) throw ValidationError("principal_eig requires an irreducible generator");

  double gershgorin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    gershgorin = std::min(gershgorin, a(i, i) - off);
  }
  const double sigma = std::max(0.0, -gershgorin) + 1.0;
  const Eigen::MatrixXd shifted = a + sigma * Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  std::size_t it = 0;
  double step = std::numeric_limits<double>::infinity();
  double best_step = step;
  std::size_t stalled = 0;
  while (it < options.max_iter) {
    ++it;
    Eigen::VectorXd next = sup_normalized(lu.solve(x));
    step = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (step < options.step_tol) break;
    // Round-off floor: stop once progress stalls below 1e-11.
    if (step < best_step) {
      best_step = step;
      stalled = 0;
    } else if (best_step < 1e-11 && ++stalled > 20) {
      break;
    }
  }

  double lambda = rayleigh_quotient(A, x);
  auto residual_of = [&](const Eigen::VectorXd& v, double l) {
    return (a * v - l * v).cwiseAbs().maxCoeff();
  };
  double residual = residual_of(x, lambda);

  // Rayleigh quotient refinement; a step is kept only if it helps.
  for (int k = 0; k < 3 && residual > 0.0; ++k) {
    const Eigen::MatrixXd m = a - lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd y = Eigen::PartialPivLU<Eigen::MatrixXd>(m).solve(x);
    if (!y.allFinite() || y.cwiseAbs().maxCoeff() == 0.0) break;
    Eigen::VectorXd cand = sup_normalized(y);
    const double cand_lambda = rayleigh_quotient(A, cand);
    const double cand_residual = residual_of(cand, cand_lambda);
    if (!(cand_residual < residual)) break;
    x = std::move(cand);
    lambda = cand_lambda;
    residual = cand_residual;
  }

  if (residual > options.residual_tol) {
    throw NumericalError("principal_eig did not converge (residual " + std::to_string(residual) +
                             ")",
                         residual);
  }
  if (x.minCoeff() <= 0.0) {
    throw NumericalError("principal eigenvector is not strictly positive", x.minCoeff());
  }
  return EigPair{lambda, GridFunction(x, A.components()), residual, it};
}

GeneratorSpec add_potential(const GeneratorSpec& A, const GridFunction& m) {
  return A.with_potential(m);
}

SubmarkovianReport submarkovian_report(const GeneratorSpec& A, double t_probe) {
  if (!(t_probe > 0.0)) throw ValidationError("t_probe must be positive");
  const auto n = static_cast<Eigen::Index>(A.dimension());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd rows = A.matrix() * ones;
  const Eigen::VectorXd image =
      semigroup_apply(A, t_probe, GridFunction(ones, A.components())).values();
  SubmarkovianReport r{};
  r.min_row_sum = rows.minCoeff();
  r.max_semigroup_excess = (image - ones).maxCoeff();
  r.row_sum_test = r.min_row_sum >= -kTolOrder;
  r.semigroup_test = r.max_semigroup_excess <= kTolOrder;
  if (r.row_sum_test != r.semigroup_test) {
    throw NumericalError("sub-markovian tests disagree (min row sum " +
                             std::to_string(r.min_row_sum) + ", semigroup excess " +
                             std::to_string(r.max_semigroup_excess) + ")",
                         r.max_semigroup_excess);
  }
  return r;
}

bool check_submarkovian(const GeneratorSpec& A, double t_probe) {
  const auto r = submarkovian_report(A, t_probe);
  return r.row_sum_test && r.semigroup_test;
}

}  // namespace mevolve
