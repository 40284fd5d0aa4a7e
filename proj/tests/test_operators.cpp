#include <doctest.h>

#include <functional>
#include <random>

#include "mevolve/operators.hpp"
#include "oracles.hpp"

using namespace mevolve;

TEST_CASE("laplacian stencils") {
  const auto d = build_laplacian_1d(2, BoundaryCondition::dirichlet());
  const double h = 1.0 / 3.0;
  CHECK(d.mesh_h() == doctest::Approx(h));
  Eigen::Matrix2d expect;
  expect << 2, -1, -1, 2;
  CHECK((d.matrix() - expect / (h * h)).cwiseAbs().maxCoeff() < 1e-12);

  const auto n = build_laplacian_1d(3, BoundaryCondition::neumann());
  CHECK(n.matrix().rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);

  const auto r = build_laplacian_1d(3, BoundaryCondition::robin(1.0));
  const Eigen::VectorXd rs = r.matrix().rowwise().sum();
  CHECK(rs.minCoeff() >= -1e-12);
  CHECK(rs[0] > 0.0);
  CHECK(rs[2] > 0.0);
  CHECK(std::abs(rs[1]) < 1e-12);
  for (const auto& A : {d, n, r}) {
    Eigen::MatrixXd off = A.matrix();
    off.diagonal().setZero();
    CHECK(off.maxCoeff() <= 0.0);
  }
  CHECK_THROWS_AS(build_laplacian_1d(1, BoundaryCondition::dirichlet()), StructuralError);
  CHECK_THROWS_AS(build_laplacian_1d(5, BoundaryCondition::robin(-1.0)), ValidationError);
  Eigen::Matrix2d bad;
  bad << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(GeneratorSpec(bad, 1.0, BoundaryCondition::none()), ValidationError);
}

TEST_CASE("semigroup examples") {
  const auto A = build_laplacian_1d(20, BoundaryCondition::dirichlet());
  std::mt19937_64 rng(3);
  const GridFunction v(oracle::uniform(rng, 20, -1, 1));
  CHECK(monotone_norm(semigroup_apply(A, 0.0, v) - v) == 0.0);
  CHECK_THROWS_AS(semigroup_apply(A, -1.0, v), ValidationError);

  const auto s = scalar_generator(1.7);
  CHECK(semigroup_apply(s, 0.8, GridFunction::constant(1, 1.0))[0] ==
        doctest::Approx(std::exp(-1.7 * 0.8)).epsilon(1e-14));

  const auto N = build_laplacian_1d(15, BoundaryCondition::neumann());
  for (double t : {0.01, 0.5, 3.0}) {
    CHECK(monotone_norm(semigroup_apply(N, t, GridFunction::constant(15, 1.0)) -
                        GridFunction::constant(15, 1.0)) < 1e-12);
  }
  // against the dense eigendecomposition, symmetric and non-symmetric
  for (const auto& B : {A, N, build_laplacian_1d(20, BoundaryCondition::robin(2.0))}) {
    const GridFunction w(oracle::uniform(rng, static_cast<Eigen::Index>(B.dimension()), -1, 1));
    const Eigen::VectorXd ref = oracle::expm_apply(B.matrix(), 0.01, w.values());
    const Eigen::VectorXd got = semigroup_apply(B, 0.01, w).values();
    CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("non-symmetrizable generators fall back to the general exponential") {
  Eigen::Matrix3d m;
  m << 2, -1, 0, 0, 2, -1, -0.5, 0, 1;  // cyclic coupling: no detailed balance
  const GeneratorSpec A(m, 1.0, BoundaryCondition::none());
  CHECK_FALSE(A.symmetrizable());
  const Eigen::Vector3d v(1.0, 0.5, 0.25);
  const Eigen::VectorXd ref = oracle::expm_apply(m, 0.7, v);
  CHECK((semigroup_apply(A, 0.7, GridFunction(v)).values() - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resolvent") {
  const auto s = scalar_generator(2.0);
  CHECK(resolvent_apply(s, 1.0, GridFunction::constant(1, 1.0))[0] == doctest::Approx(1.0 / 3.0));
  const auto A = build_laplacian_1d(50, BoundaryCondition::dirichlet());
  CHECK(monotone_norm(resolvent_apply(A, 0.0, GridFunction::zeros(50))) == 0.0);
  const GridFunction x = resolvent_apply(A, 0.0, GridFunction::constant(50, 1.0));
  CHECK(x.min() > 0.0);
  const double h = A.mesh_h();
  double err = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const double xi = h * static_cast<double>(i + 1);
    err = std::max(err, std::abs(x[i] - xi * (1.0 - xi) / 2.0));
  }
  CHECK(err <= h * h);  // the stencil is exact on quadratics, so this is loose
  const auto N = build_laplacian_1d(10, BoundaryCondition::neumann());
  try {
    resolvent_apply(N, 0.0, GridFunction::constant(10, 1.0));
    FAIL("expected a singular system");
  } catch (const NumericalError& e) {
    CHECK(e.value() == 0.0);
  }
}

TEST_CASE("principal eigenpair") {
  for (std::size_t n : {5u, 40u, 99u}) {
    const auto A = build_laplacian_1d(n, BoundaryCondition::dirichlet());
    const EigPair e = principal_eig(A);
    CHECK(std::abs(e.lambda1 - oracle::dirichlet_lambda1(n)) <= 1e-12 * oracle::dirichlet_lambda1(n) * 10);
    CHECK(e.phi0.min() > 0.0);
    CHECK(e.phi0.max() == doctest::Approx(1.0));
    CHECK((A.matrix() * e.phi0.values() - e.lambda1 * e.phi0.values()).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK(principal_eig(build_laplacian_1d(99, BoundaryCondition::dirichlet())).lambda1 ==
        doctest::Approx(std::numbers::pi * std::numbers::pi).epsilon(1e-3));
  const EigPair n = principal_eig(build_laplacian_1d(30, BoundaryCondition::neumann()));
  CHECK(std::abs(n.lambda1) < 1e-10);
  CHECK((n.phi0.values().array() - 1.0).abs().maxCoeff() < 1e-10);
  const auto R = build_laplacian_1d(30, BoundaryCondition::robin(3.0));
  CHECK(principal_eig(R).lambda1 == doctest::Approx(oracle::smallest_eigenvalue(R.matrix())).epsilon(1e-12));
  Eigen::Matrix2d diag;
  diag << 1, 0, 0, 2;
  CHECK_THROWS_AS(principal_eig(GeneratorSpec(diag, 1.0, BoundaryCondition::none())), ValidationError);
}

TEST_CASE("robin eigenvalue increases with beta") {
  double prev = principal_eig(build_laplacian_1d(40, BoundaryCondition::neumann())).lambda1;
  for (double beta : {0.1, 1.0, 10.0, 100.0, 1e4}) {
    const double l = principal_eig(build_laplacian_1d(40, BoundaryCondition::robin(beta))).lambda1;
    CHECK(l > prev);
    prev = l;
  }
  CHECK(prev < std::numbers::pi * std::numbers::pi * 1.01);
  CHECK(prev > std::numbers::pi * std::numbers::pi * 0.95);
}

TEST_CASE("potentials") {
  const auto A = build_laplacian_1d(25, BoundaryCondition::dirichlet());
  const double l0 = principal_eig(A).lambda1;
  CHECK(principal_eig(add_potential(A, GridFunction::constant(25, 3.5))).lambda1 ==
        doctest::Approx(l0 + 3.5).epsilon(1e-13));
  CHECK((add_potential(A, GridFunction::zeros(25)).matrix() - A.matrix()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd bump = Eigen::VectorXd::Zero(25);
  bump[7] = 1.0;
  const double l1 = principal_eig(add_potential(A, GridFunction(bump))).lambda1;
  CHECK(l1 > l0);
  CHECK(l1 == doctest::Approx(oracle::smallest_eigenvalue(A.matrix() + Eigen::MatrixXd(bump.asDiagonal()))).epsilon(1e-12));
  CHECK_THROWS_AS(add_potential(A, GridFunction::zeros(24)), StructuralError);
}

TEST_CASE("sub-markovian certificate") {
  const auto N = build_laplacian_1d(12, BoundaryCondition::neumann());
  CHECK(check_submarkovian(N, 0.1));
  CHECK(check_submarkovian(build_laplacian_1d(12, BoundaryCondition::dirichlet()), 0.1));
  const auto D = build_laplacian_1d(12, BoundaryCondition::dirichlet());
  const Eigen::VectorXd s = semigroup_apply(D, 0.1, GridFunction::constant(12, 1.0)).values();
  CHECK(s.maxCoeff() < 1.0);
  CHECK_FALSE(check_submarkovian(add_potential(N, GridFunction::constant(12, -1.0)), 0.1));
  CHECK_THROWS_AS(check_submarkovian(N, 0.0), ValidationError);
}

TEST_CASE("semigroup positivity, semigroup law, Laplace transform") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> time(0.0, 5.0);
  const std::vector<GeneratorSpec> ops = {build_laplacian_1d(16, BoundaryCondition::dirichlet()),
                                          build_laplacian_1d(16, BoundaryCondition::neumann()),
                                          build_laplacian_1d(16, BoundaryCondition::robin(0.5))};
  for (int i = 0; i < 1000; ++i) {
    const auto& A = ops[static_cast<std::size_t>(i) % 3];
    const GridFunction v(oracle::uniform(rng, 16, 0, 1));
    CHECK(semigroup_apply(A, time(rng), v).min() >= -1e-12);
  }
  for (int i = 0; i < 50; ++i) {
    const auto& A = ops[static_cast<std::size_t>(i) % 3];
    const double t = time(rng), s = time(rng);
    const GridFunction v(oracle::uniform(rng, 16, -1, 1));
    const GridFunction two = semigroup_apply(A, t, semigroup_apply(A, s, v));
    CHECK(monotone_norm(two - semigroup_apply(A, t + s, v)) <= 1e-10 * monotone_norm(v));
  }
  // int_0^T S(t) v dt -> A^{-1} v once lambda_1 > 0
  const auto A = build_laplacian_1d(16, BoundaryCondition::neumann()).shifted(0.5);
  const GridFunction v(oracle::uniform(rng, 16, 0, 1));
  const double T = 80.0;
  // stiff modes decay like exp(-1000 t): panels are graded toward 0
  auto graded = [](const std::function<Eigen::VectorXd(double)>& f, double hi) {
    Eigen::VectorXd sum = oracle::integrate(f, 0.0, std::ldexp(hi, -40), 4);
    for (int j = 40; j > 0; --j) sum += oracle::integrate(f, std::ldexp(hi, -j), std::ldexp(hi, 1 - j), 8);
    return sum;
  };
  const Eigen::VectorXd quad = graded([&](double t) { return semigroup_apply(A, t, v).values(); }, T);
  CHECK((quad - resolvent_apply(A, 0.0, v).values()).cwiseAbs().maxCoeff() <= 1e-6);
  // and the library's integrated semigroup agrees with quadrature on a short span
  const Eigen::VectorXd phi = A.integrated_semigroup_matrix(0.3) * v.values();
  const Eigen::VectorXd ref =
      graded([&](double t) { return oracle::expm_apply(A.matrix(), t, v.values()); }, 0.3);
  CHECK((phi - ref).cwiseAbs().maxCoeff() <= 1e-11 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("eigenvalue strictly increases with the potential") {
  std::mt19937_64 rng(5);
  const auto A = build_laplacian_1d(20, BoundaryCondition::robin(1.0));
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd m1 = oracle::uniform(rng, 20, -4, 4);
    Eigen::VectorXd m2 = m1;
    m2[static_cast<Eigen::Index>(rng() % 20)] += 0.5;
    CHECK(principal_eig(add_potential(A, GridFunction(m1))).lambda1 <
          principal_eig(add_potential(A, GridFunction(m2))).lambda1);
  }
}
