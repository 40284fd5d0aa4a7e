#include <doctest.h>

#include <cmath>

#include "mevolve/scenarios.hpp"
#include "oracles.hpp"

using namespace mevolve;

namespace {

GridFunction cos_weight(std::size_t n, double amplitude) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(n));
  const double h = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = amplitude * std::cos(M_PI * (static_cast<double>(i) + 0.5) * h);
  return GridFunction(m);
}

bool has_note(const ScenarioSpec& s, const std::string& needle) {
  for (const auto& n : s.notes) {
    if (n.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("certificates on simple candidates") {
  const auto A = build_laplacian_1d(20, BoundaryCondition::neumann());
  const auto F = logistic(1.0, 2.0);
  const auto cone = ConeSpec::standard();
  const GridFunction eq = GridFunction::constant(20, 0.5);
  CHECK(verify_subsolution(A, *F, eq, cone).passed);
  CHECK(verify_supersolution(A, *F, eq, cone).passed);
  // M b < a: the constant grows, so it is not a super-solution
  const Certificate low = verify_supersolution(A, *F, GridFunction::constant(20, 0.3), cone);
  CHECK_FALSE(low.passed);
  CHECK(low.worst_margin == doctest::Approx(0.3 - 2.0 * 0.09));
  CHECK_THROWS_AS(verify_subsolution(A, *F, GridFunction::zeros(5), cone), StructuralError);
}

TEST_CASE("logistic with Dirichlet boundary") {
  const auto A = build_laplacian_1d(40, BoundaryCondition::dirichlet());
  const double lam = principal_eig(A).lambda1;
  SUBCASE("eps phi0 is certified and 10 eps0 is not") {
    const double a = lam + 0.5, b = 1.0;
    const ScenarioSpec s = build_logistic(A, a, b);
    CHECK(s.nontrivial);
    CHECK(s.sub.passed);
    CHECK(s.super.passed);
    CHECK(s.check("a_minus_lambda1") == doctest::Approx(0.5));
    CHECK(s.eps == doctest::Approx(0.5).epsilon(1e-9));  // eps0 = (a - lambda1) / b
    CHECK(s.M == doctest::Approx(2.0 * a));
    ScenarioOptions o;
    o.eps = 10.0 * s.eps;
    CHECK_THROWS_AS(build_logistic(A, a, b, o), CertificateError);
  }
  SUBCASE("a below lambda_1") {
    const ScenarioSpec s = build_logistic(A, 5.0, 1.0);
    CHECK_FALSE(s.nontrivial);
    CHECK(s.problem.interval.lower().max() == 0.0);
    CHECK(has_note(s, "no positive equilibrium"));
    REQUIRE(s.predicted_equilibrium);
    CHECK(monotone_norm(*s.predicted_equilibrium) == 0.0);
  }
  SUBCASE("too small an upper level is rejected") {
    ScenarioOptions o;
    o.M = 1.0;
    CHECK_THROWS_AS(build_logistic(A, 15.0, 1.0, o), CertificateError);
  }
  CHECK_THROWS_AS(build_logistic(A, -1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_logistic(A, 15.0, 1.0).check("nope"), StructuralError);
}

TEST_CASE("logistic with Neumann boundary predicts a/b") {
  const auto A = build_laplacian_1d(16, BoundaryCondition::neumann());
  const ScenarioSpec s = build_logistic(A, 1.0, 2.0);
  REQUIRE(s.predicted_equilibrium);
  CHECK(monotone_norm(*s.predicted_equilibrium - GridFunction::constant(16, 0.5)) == 0.0);
  CHECK(leq(s.problem.interval.lower(), *s.predicted_equilibrium, ConeSpec::standard()));
  CHECK(leq(*s.predicted_equilibrium, s.problem.interval.upper(), ConeSpec::standard()));
}

TEST_CASE("competition") {
  const auto N = build_laplacian_1d(12, BoundaryCondition::neumann());
  SUBCASE("weak competition on Neumann") {
    const ScenarioSpec s = build_competition(N, N, {1.0, 1.0, 1.0, 0.1, 0.1, 1.0});
    CHECK(s.nontrivial);
    CHECK(s.problem.interval.cone() == ConeSpec::competition());
    REQUIRE(s.predicted_equilibrium);
    CHECK((*s.predicted_equilibrium)[0] == doctest::Approx(1.0 / 1.1));
    REQUIRE(s.semi_trivial.size() == 2);
    CHECK(monotone_norm(s.semi_trivial[0] - GridFunction::constant(12, 1.0)) <= 1e-9);
    CHECK(s.check("coexistence_gate_1") > 0.0);
    // coexistence state lies inside the flipped-order interval
    CHECK(leq(s.problem.interval.lower(), *s.predicted_equilibrium, ConeSpec::competition()));
    CHECK(leq(*s.predicted_equilibrium, s.problem.interval.upper(), ConeSpec::competition()));
  }
  SUBCASE("decoupled species") {
    const ScenarioSpec s = build_competition(N, N, {2.0, 3.0, 1.0, 1e-9, 1e-9, 2.0});
    REQUIRE(s.predicted_equilibrium);
    CHECK((*s.predicted_equilibrium)[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK((*s.predicted_equilibrium)[12] == doctest::Approx(1.5).epsilon(1e-6));
  }
  SUBCASE("strong competition falls back to the box") {
    const ScenarioSpec s = build_competition(N, N, {1.0, 1.0, 1.0, 10.0, 10.0, 1.0});
    CHECK_FALSE(s.nontrivial);
    CHECK(s.check("coexistence_gate_1") < 0.0);
    CHECK(has_note(s, "gate fails"));
    REQUIRE(s.global_interval);
    CHECK(monotone_norm(s.problem.interval.upper() - s.global_interval->upper()) == 0.0);
  }
  SUBCASE("a species below its eigenvalue dies out") {
    const auto D = build_laplacian_1d(12, BoundaryCondition::dirichlet());
    const ScenarioSpec s = build_competition(D, D, {5.0, 20.0, 1.0, 0.1, 0.1, 1.0});
    CHECK(s.check("necessary_1") < 0.0);
    CHECK(s.check("necessary_2") > 0.0);
    CHECK(has_note(s, "dies out"));
    CHECK(monotone_norm(s.semi_trivial[0]) <= 1e-8);
    CHECK_FALSE(s.nontrivial);
  }
  CHECK_THROWS_AS(build_competition(N, N, {1.0, 1.0, 0.0, 0.1, 0.1, 1.0}), ValidationError);
}

TEST_CASE("fisher") {
  const std::size_t n = 40;
  const auto A = build_laplacian_1d(n, BoundaryCondition::neumann());
  SUBCASE("sign-changing weight gives a nontrivial interval") {
    const ScenarioSpec s = build_fisher(A, cos_weight(n, 8.0), 0.5);
    CHECK(s.check("lambda0") < 0.0);
    CHECK(s.check("lambda1_tilde") < 0.0);
    CHECK(s.nontrivial);
    CHECK(s.problem.interval.lower().min() > 0.0);
    CHECK(s.problem.interval.upper().max() < 1.0);
    REQUIRE(s.global_interval);
    CHECK(s.global_interval->upper().max() == 1.0);
  }
  SUBCASE("non-negative weight: no nontrivial interval") {
    const ScenarioSpec s = build_fisher(A, GridFunction::constant(n, 1.0), 0.5);
    CHECK_FALSE(s.nontrivial);
    CHECK(s.check("lambda1_tilde") >= 0.0);
    CHECK(has_note(s, "unavailable"));
    CHECK(s.problem.interval.lower().max() == 0.0);
  }
  SUBCASE("eigenvalues match the dense oracle") {
    const GridFunction m = cos_weight(n, 8.0);
    const ScenarioSpec s = build_fisher(A, m, 0.3);
    const Eigen::MatrixXd M0 = A.matrix() - 0.3 * Eigen::MatrixXd(m.values().asDiagonal());
    const Eigen::MatrixXd M1 = A.matrix() + 0.7 * Eigen::MatrixXd(m.values().asDiagonal());
    CHECK(s.check("lambda0") == doctest::Approx(oracle::smallest_eigenvalue(M0)).epsilon(1e-9));
    CHECK(s.check("lambda1_tilde") == doctest::Approx(oracle::smallest_eigenvalue(M1)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(build_fisher(A, GridFunction::zeros(3), 0.5), StructuralError);
}

TEST_CASE("scalar example") {
  CHECK_THROWS_AS(build_scalar_nonunique(1.0, 0.5), ValidationError);
  const ScenarioSpec s = build_scalar_nonunique(1.0, 2.0);
  REQUIRE(s.closed_forms);
  const ScalarClosedForms& cf = *s.closed_forms;
  CHECK(cf.equilibrium() == 1.0);
  CHECK(cf.U_max(0.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cf.t_M() == doctest::Approx(2.0 * std::log(std::sqrt(2.0) - 1.0)));
  // every branch solves u' = -u + sign(u) sqrt|u| away from its switching time
  for (int sign : {-1, 1}) {
    for (double t : {0.7, 1.5, 4.0}) {
      const double h = 1e-6, u = cf.branch(t, 0.5, sign);
      const double du = (cf.branch(t + h, 0.5, sign) - cf.branch(t - h, 0.5, sign)) / (2 * h);
      CHECK(du == doctest::Approx(-u + (u > 0 ? 1.0 : -1.0) * std::sqrt(std::abs(u))).epsilon(1e-6));
    }
    CHECK(cf.branch(0.3, 0.5, sign) == 0.0);
  }
  // discrete mild residual of the sampled closed forms vanishes with dt
  std::vector<double> res;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    ScenarioOptions o;
    o.dt = dt;
    o.horizon = 4.0;
    const ScenarioSpec sd = build_scalar_nonunique(1.0, 2.0, o);
    const ProblemSpec P = prepare_problem(sd.problem);
    const std::size_t K = P.steps();
    Eigen::MatrixXd U(1, static_cast<Eigen::Index>(K + 1));
    for (std::size_t k = 0; k <= K; ++k) U(0, static_cast<Eigen::Index>(k)) = cf.branch(dt * static_cast<double>(k), 1.0, 1);
    res.push_back(mild_residual(P, Trajectory(dt, U)));
  }
  CHECK(res[2] < res[1]);
  CHECK(res[1] < res[0]);
  CHECK(res[2] <= 2e-3);
}
