#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mevolve/order.hpp"

namespace mevolve {

enum class BoundaryKind { dirichlet, neumann, robin, none };

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::dirichlet;
  double beta = 0.0;  // robin only

  static BoundaryCondition dirichlet() { return {BoundaryKind::dirichlet, 0.0}; }
  static BoundaryCondition neumann() { return {BoundaryKind::neumann, 0.0}; }
  static BoundaryCondition robin(double beta) { return {BoundaryKind::robin, beta}; }
  static BoundaryCondition none() { return {BoundaryKind::none, 0.0}; }
};

std::string to_string(const BoundaryCondition& bc);
BoundaryCondition parse_boundary(const std::string& name, double beta = 0.0);

/// f(A) = right * diag(f(eigenvalues)) * left, valid when A is diagonally
/// similar to a symmetric matrix.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd right;
  Eigen::MatrixXd left;
};

/// An admissible generator A; -A generates the positive semigroup e^{-tA}.
///
/// The matrix has non-positive off-diagonal entries. Multi-component
/// generators are block diagonal with one block per component. Instances are
/// immutable; the spectral decomposition is computed at most once and shared
/// between copies.
class GeneratorSpec {
 public:
  GeneratorSpec(Eigen::MatrixXd matrix, double mesh_h, BoundaryCondition bc, int components = 1);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  double mesh_h() const noexcept { return mesh_h_; }
  const BoundaryCondition& bc() const noexcept { return bc_; }
  int components() const noexcept { return components_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t nodes() const noexcept { return dimension() / static_cast<std::size_t>(components_); }
  const std::optional<Eigen::VectorXd>& potential() const noexcept { return potential_; }
  double shift() const noexcept { return shift_; }

  /// A + mu I, with mu accumulated into shift().
  GeneratorSpec shifted(double mu) const;
  /// A + diag(m), with m accumulated into potential().
  GeneratorSpec with_potential(const GridFunction& m) const;

  /// True when the matrix is tridiagonal with a_{i,i+1} a_{i+1,i} > 0 or both
  /// zero; such matrices are diagonally similar to symmetric ones.
  bool symmetrizable() const noexcept { return symmetrizable_; }
  /// Diagonal weight w with diag(w) * A symmetric (only when symmetrizable).
  const Eigen::VectorXd& symmetrizing_weight() const noexcept { return weight_; }
  const SpectralDecomposition& spectral() const;

  /// e^{-tA}, entrywise non-negative.
  Eigen::MatrixXd semigroup_matrix(double t) const;
  /// The integral of e^{-sA} over [0, t], entrywise non-negative.
  Eigen::MatrixXd integrated_semigroup_matrix(double t) const;
  /// Smallest real part over the spectrum.
  double spectral_bound() const;

  /// Per-component blocks as single-component generators.
  GeneratorSpec block(int k) const;

 private:
  struct Cache;

  Eigen::MatrixXd matrix_;
  double mesh_h_;
  BoundaryCondition bc_;
  int components_;
  std::optional<Eigen::VectorXd> potential_;
  double shift_ = 0.0;
  bool symmetrizable_ = false;
  Eigen::VectorXd weight_;
  std::shared_ptr<Cache> cache_;
};

/// Second-difference approximation of -d^2/dx^2 on [0, 1].
///
/// Dirichlet uses n interior nodes (h = 1/(n+1)). Neumann and Robin use n
/// vertex-centred nodes including both end points (h = 1/(n-1)), closed by
/// eliminating a ghost node from the central-difference boundary condition.
GeneratorSpec build_laplacian_1d(std::size_t n, BoundaryCondition bc);

/// 1x1 generator [a] for scalar ODE problems.
GeneratorSpec scalar_generator(double a);

/// Block-diagonal generator acting on multi-component grid functions.
GeneratorSpec block_diagonal(const std::vector<GeneratorSpec>& blocks);

GridFunction semigroup_apply(const GeneratorSpec& A, double t, const GridFunction& v);

/// Solves (lam I + A) x = v.
GridFunction resolvent_apply(const GeneratorSpec& A, double lam, const GridFunction& v);

struct EigPair {
  double lambda1;
  GridFunction phi0;  // entrywise > 0, sup norm 1
  double residual;    // |A phi0 - lambda1 phi0|_inf
  std::size_t iterations;
};

struct EigOptions {
  std::size_t max_iter = 100000;
  double step_tol = 1e-14;
  double residual_tol = 1e-10;
};

/// Principal eigenpair by inverse power iteration on sigma I + A.
EigPair principal_eig(const GeneratorSpec& A, const EigOptions& options = {});

GeneratorSpec add_potential(const GeneratorSpec& A, const GridFunction& m);

/// Strong connectivity of the non-zero pattern.
bool is_irreducible(const Eigen::MatrixXd& matrix);

struct SubmarkovianReport {
  bool row_sum_test;
  bool semigroup_test;
  double min_row_sum;         // min entry of A 1
  double max_semigroup_excess;  // max entry of e^{-tA} 1 - 1
};

/// Runs both sub-markovian tests and throws NumericalError if they disagree.
SubmarkovianReport submarkovian_report(const GeneratorSpec& A, double t_probe);
bool check_submarkovian(const GeneratorSpec& A, double t_probe = 1e-3);

}  // namespace mevolve
