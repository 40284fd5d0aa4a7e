// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "mevolve/mild.hpp"

using namespace mevolve;

namespace {

Eigen::MatrixXd random_states(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, k) = d(rng);
  }
  return m;
}

ProblemSpec logistic_problem(std::size_t n) {
  const auto A = build_laplacian_1d(n, BoundaryCondition::neumann());
  const OrderInterval I(GridFunction::zeros(n), GridFunction::constant(n, 1.0), ConeSpec::standard());
  return prepare_problem({A, logistic(1.0, 2.0), I, 0.0, 2.0, 0.01});
}

template <kernels::Backend B>
void evaluate(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto F = logistic(1.0, 2.0);
  const Eigen::MatrixXd states = random_states(n, 201, 0.0, 1.0);
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), hi = Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd out;
  for (auto _ : state) {
    kernels::evaluate_columns(B, *F, 3.0, states, static_cast<std::size_t>(n), {lo, hi}, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <kernels::Backend B>
void multiply(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd op = random_states(n, n, -1.0, 1.0);
  const Eigen::MatrixXd in = random_states(n, 201, 0.0, 1.0);
  Eigen::MatrixXd out;
  for (auto _ : state) {
    kernels::multiply_columns(B, op, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <kernels::Backend B>
void violation(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd a = random_states(n, 201, 0.0, 1.0);
  const Eigen::MatrixXd b = random_states(n, 201, 0.5, 1.5);
  const Eigen::VectorXd signs = Eigen::VectorXd::Ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::max_violation(B, a, b, signs));
}

template <kernels::Backend B>
void apply_G(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ProblemSpec P = logistic_problem(n);
  const MildIntegrator G(P, B);
  const Eigen::MatrixXd w = random_states(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(P.steps() + 1), 0.0, 1.0);
  const GridFunction u0 = GridFunction::constant(n, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(G.apply(u0, w).trajectory.states().data());
}

constexpr auto serial = kernels::Backend::serial;
constexpr auto openmp = kernels::Backend::openmp;

}  // namespace

BENCHMARK(evaluate<serial>)->Arg(50)->Arg(200);
BENCHMARK(evaluate<openmp>)->Arg(50)->Arg(200);
BENCHMARK(multiply<serial>)->Arg(50)->Arg(200);
BENCHMARK(multiply<openmp>)->Arg(50)->Arg(200);
BENCHMARK(violation<serial>)->Arg(50)->Arg(200);
BENCHMARK(violation<openmp>)->Arg(50)->Arg(200);
BENCHMARK(apply_G<serial>)->Arg(50)->Arg(100);
BENCHMARK(apply_G<openmp>)->Arg(50)->Arg(100);

BENCHMARK_MAIN();
