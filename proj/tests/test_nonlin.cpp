#include <doctest.h>

#include <random>

#include "mevolve/nonlin.hpp"
#include "oracles.hpp"

using namespace mevolve;

namespace {

GridFunction at(std::initializer_list<double> v, int c = 1) {
  return GridFunction(Eigen::VectorXd::Map(v.begin(), static_cast<Eigen::Index>(v.size())), c);
}

double eval1(const Nonlinearity& f, double x) { return f(at({x}))[0]; }

// Random ordered pair lo <= u <= v <= hi in the interval's cone.
std::pair<GridFunction, GridFunction> ordered_pair(std::mt19937_64& rng, const OrderInterval& I) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd lo = I.lower().values(), hi = I.upper().values();
  Eigen::VectorXd u(lo.size()), v(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    double r = unit(rng), s = unit(rng);
    if (r > s) std::swap(r, s);
    u[i] = lo[i] + r * (hi[i] - lo[i]);
    v[i] = lo[i] + s * (hi[i] - lo[i]);
  }
  const int c = I.lower().components();
  return {GridFunction(u, c), GridFunction(v, c)};
}

// F + mu id is increasing on I, checked on random ordered pairs.
double worst_monotonicity(const Nonlinearity& f, const OrderInterval& I, double mu, int pairs) {
  std::mt19937_64 rng(99);
  double worst = -1.0;
  for (int i = 0; i < pairs; ++i) {
    const auto [u, v] = ordered_pair(rng, I);
    worst = std::max(worst, order_violation(f(u) + mu * u, f(v) + mu * v, I.cone()));
  }
  return worst;
}

}  // namespace

TEST_CASE("logistic") {
  const auto f = logistic(1.5, 0.5);
  CHECK(eval1(*f, 0.0) == 0.0);
  CHECK(eval1(*f, 3.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eval1(*f, 1.0) == doctest::Approx(1.0));
  const OrderInterval I(at({0}), at({2}), ConeSpec::standard());
  CHECK(logistic(1, 1)->quasi_increasing_shift(I) == doctest::Approx(3.0));
  CHECK(logistic(1, 1)->lipschitz_on(I) == doctest::Approx(5.0));
  CHECK(logistic(5, 1)->quasi_increasing_shift(I) == 0.0);
  CHECK_THROWS_AS(logistic(-1, 1), ValidationError);
}

TEST_CASE("fisher") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    CHECK(fisher_h(0.0, alpha) == 0.0);
    CHECK(fisher_h(1.0, alpha) == 0.0);
    CHECK(fisher_h(0.5, alpha) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(fisher_h_prime(0.0, alpha) == doctest::Approx(alpha));
    CHECK(fisher_h_prime(1.0, alpha) == doctest::Approx(alpha - 1.0));
    // endpoint derivatives by central differences
    const double d = 1e-6;
    CHECK(std::abs((fisher_h(d, alpha) - fisher_h(-d, alpha)) / (2 * d) - alpha) < 1e-6);
    CHECK(std::abs((fisher_h(1 + d, alpha) - fisher_h(1 - d, alpha)) / (2 * d) - (alpha - 1)) < 1e-6);
  }
  const auto f = fisher(at({2.0, -1.0}), 0.3);
  const GridFunction y = (*f)(at({0.5, 0.5}));
  CHECK(y[0] == doctest::Approx(0.25));
  CHECK(y[1] == doctest::Approx(-0.125));
  CHECK_THROWS_AS(fisher(at({1.0}), 0.0), ValidationError);
  CHECK_THROWS_AS(fisher(at({1.0}), 1.0), ValidationError);
}

TEST_CASE("competition") {
  const CompetitionRates r{1.0, 2.0, 0.5, 0.3, 0.2, 0.7};
  const auto f = competition(r);
  CHECK(f->arity() == 2);
  CHECK(monotone_norm((*f)(at({0, 0}, 2))) == 0.0);
  CHECK((*f)(at({r.a1 / r.b11, 0}, 2))[0] == doctest::Approx(0.0));
  const GridFunction one = (*f)(at({1, 1}, 2));
  CHECK(one[0] == doctest::Approx(r.a1 - r.b11 - r.b12));
  CHECK(one[1] == doctest::Approx(r.a2 - r.b21 - r.b22));
  CHECK_THROWS_AS(competition({1, 1, 1, 0, 1, 1}), ValidationError);
  // quasi-increasing only in the flipped cone
  const OrderInterval std_box(at({0, 0}, 2), at({1, 1}, 2), ConeSpec::standard(2));
  CHECK_THROWS_AS(f->quasi_increasing_shift(std_box), ValidationError);
  const double M = 3.0;
  const OrderInterval box(at({0, M}, 2), at({M, 0}, 2), ConeSpec::competition());
  const double expect = std::max({0.0, 2 * r.b11 * M + r.b12 * M - r.a1, r.b21 * M + 2 * r.b22 * M - r.a2});
  CHECK(f->quasi_increasing_shift(box) == doctest::Approx(expect));
}

TEST_CASE("signed square root") {
  const auto f = signed_sqrt();
  CHECK(eval1(*f, 0.0) == 0.0);
  CHECK(eval1(*f, 1.0) == 1.0);
  CHECK(eval1(*f, -4.0) == -2.0);
  const OrderInterval across(at({-1}), at({1}), ConeSpec::standard());
  CHECK(std::isinf(f->lipschitz_on(across)));
  CHECK(f->quasi_increasing_shift(across) == 0.0);
  const OrderInterval away(at({1}), at({4}), ConeSpec::standard());
  CHECK(f->lipschitz_on(away) == doctest::Approx(0.5));
}

TEST_CASE("shifted maps are increasing on their intervals") {
  const auto n = 6;
  std::mt19937_64 rng(4);
  const OrderInterval logI(GridFunction::zeros(n), GridFunction::constant(n, 4.0), ConeSpec::standard());
  const auto lg = logistic(2.0, 1.5);
  CHECK(worst_monotonicity(*lg, logI, lg->quasi_increasing_shift(logI), 10000) <= 1e-12);

  const GridFunction m(oracle::uniform(rng, n, -3, 3));
  const auto fi = fisher(m, 0.4);
  const OrderInterval unit(GridFunction::zeros(n), GridFunction::constant(n, 1.0), ConeSpec::standard());
  CHECK(worst_monotonicity(*fi, unit, fi->quasi_increasing_shift(unit), 10000) <= 1e-12);

  const auto co = competition({1.0, 1.2, 1.0, 0.4, 0.3, 0.8});
  const GridFunction lo = GridFunction::stack({GridFunction::zeros(n), GridFunction::constant(n, 2.0)});
  const GridFunction hi = GridFunction::stack({GridFunction::constant(n, 2.0), GridFunction::zeros(n)});
  const OrderInterval flip(lo, hi, ConeSpec::competition());
  CHECK(worst_monotonicity(*co, flip, co->quasi_increasing_shift(flip), 10000) <= 1e-12);

  const auto sq = signed_sqrt();
  const OrderInterval sqI(GridFunction::constant(n, -2.0), GridFunction::constant(n, 2.0), ConeSpec::standard());
  CHECK(worst_monotonicity(*sq, sqI, 0.0, 10000) <= 0.0);

  // a smaller shift than certified breaks monotonicity somewhere
  CHECK(worst_monotonicity(*lg, logI, 0.5 * lg->quasi_increasing_shift(logI), 10000) > 0.0);
}

TEST_CASE("bounds and Lipschitz constants survive sampling") {
  std::mt19937_64 rng(8);
  const auto n = 5;
  const OrderInterval I(GridFunction::zeros(n), GridFunction::constant(n, 3.0), ConeSpec::standard());
  const auto lg = logistic(1.0, 2.0);
  const double bound = lg->bound_on(I), lip = lg->lipschitz_on(I);
  for (int i = 0; i < 2000; ++i) {
    const auto [u, v] = ordered_pair(rng, I);
    CHECK(monotone_norm((*lg)(u)) <= bound + 1e-12);
    CHECK(monotone_norm((*lg)(v) - (*lg)(u)) <= lip * monotone_norm(v - u) + 1e-12);
  }
  const auto co = competition({1.0, 1.0, 1.0, 0.5, 0.5, 1.0});
  const OrderInterval flip(GridFunction::stack({GridFunction::zeros(n), GridFunction::constant(n, 1.5)}),
                           GridFunction::stack({GridFunction::constant(n, 1.5), GridFunction::zeros(n)}),
                           ConeSpec::competition());
  for (int i = 0; i < 2000; ++i) {
    const auto [u, v] = ordered_pair(rng, flip);
    CHECK(monotone_norm((*co)(u)) <= co->bound_on(flip) + 1e-12);
    CHECK(monotone_norm((*co)(v) - (*co)(u)) <= co->lipschitz_on(flip) * monotone_norm(v - u) + 1e-12);
  }
}

TEST_CASE("jacobians match finite differences") {
  std::mt19937_64 rng(6);
  const auto n = 4;
  const std::vector<NonlinearityPtr> fs = {logistic(1.3, 0.7), fisher(GridFunction(oracle::uniform(rng, n, -2, 2)), 0.35),
                                           competition({1, 2, 0.5, 0.3, 0.2, 0.7})};
  for (const auto& f : fs) {
    const GridFunction u(oracle::uniform(rng, n * f->arity(), 0.1, 0.9), f->arity());
    const Eigen::MatrixXd J = f->jacobian(u);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(J.cols());
      e[j] = h;
      const Eigen::VectorXd fd = ((*f)(GridFunction(u.values() + e, f->arity())).values() -
                                  (*f)(GridFunction(u.values() - e, f->arity())).values()) / (2 * h);
      CHECK((J.col(j) - fd).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("preset registry") {
  CHECK(nonlinearity_presets().size() == 4);
  CHECK(make_nonlinearity("logistic", {{"a", 1}, {"b", 2}})->name() == "logistic");
  CHECK_THROWS_AS(make_nonlinearity("logistic", {{"a", 1}}), ValidationError);
  CHECK_THROWS_AS(make_nonlinearity("logistic", {{"a", 1}, {"b", 2}, {"c", 3}}), ValidationError);
  CHECK_THROWS_AS(make_nonlinearity("cubic", {}), ValidationError);
  CHECK_THROWS_AS(make_nonlinearity("fisher", {{"alpha", 0.5}}), ValidationError);
  CHECK(make_nonlinearity("fisher", {{"alpha", 0.5}}, GridFunction::constant(3, 1.0))->arity() == 1);
}
