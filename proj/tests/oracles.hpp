#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library: dense eigendecompositions, an adaptive Runge-Kutta integrator
// and closed forms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

/// Eigenvalues of a real matrix with real spectrum, sorted ascending.
inline Eigen::VectorXd real_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues().real();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

inline double smallest_eigenvalue(const Eigen::MatrixXd& a) {
  return real_eigenvalues(a)[0];
}

/// e^{-tA} v through a dense eigendecomposition A = V D V^{-1}.
inline Eigen::VectorXd expm_apply(const Eigen::MatrixXd& a, double t, const Eigen::VectorXd& v) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::VectorXcd d = (-t * es.eigenvalues()).array().exp();
  const Eigen::VectorXcd c = V.partialPivLu().solve(v.cast<std::complex<double>>());
  return (V * d.cwiseProduct(c)).real();
}

/// Closed-form lambda_1 of the n-point Dirichlet second-difference matrix.
inline double dirichlet_lambda1(std::size_t n) {
  const double h = 1.0 / static_cast<double>(n + 1);
  const double s = std::sin(std::numbers::pi * h / 2.0);
  return 4.0 / (h * h) * s * s;
}

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Adaptive Dormand-Prince 5(4) integration; returns the state at each of the
/// requested (increasing) output times.
inline std::vector<Eigen::VectorXd> rk45(const Rhs& f, Eigen::VectorXd y, double t0,
                                         const std::vector<double>& times, double rtol = 1e-12,
                                         double atol = 1e-13) {
  static const double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
  static const double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double b5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
  static const double b4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
  std::vector<Eigen::VectorXd> out;
  double t = t0;
  double h = 1e-4;
  Eigen::VectorXd k[7];
  for (double target : times) {
    while (t < target) {
      const double step = std::min(h, target - t);
      for (int s = 0; s < 7; ++s) {
        Eigen::VectorXd ys = y;
        for (int j = 0; j < s; ++j) ys += step * a[s][j] * k[j];
        k[s] = f(t + c[s] * step, ys);
      }
      Eigen::VectorXd y5 = y, y4 = y;
      for (int s = 0; s < 7; ++s) {
        y5 += step * b5[s] * k[s];
        y4 += step * b4[s] * k[s];
      }
      const Eigen::ArrayXd scale = atol + rtol * y.cwiseAbs().cwiseMax(y5.cwiseAbs()).array();
      const double err = ((y5 - y4).array() / scale).abs().maxCoeff();
      if (err <= 1.0) {
        t += step;
        y = y5;
      }
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = step * factor;
      if (h < 1e-14) throw std::runtime_error("rk45 step size underflow");
    }
    out.push_back(y);
  }
  return out;
}

/// Scalar problem u' + a u = sign(u) sqrt|u|: maximal solution from 0.
inline double sqrt_u_max(double a, double t) {
  const double e = 1.0 - std::exp(-0.5 * a * t);
  return e * e / (a * a);
}

/// Composite Gauss-Legendre (3 points per panel) for vector-valued integrands.
inline Eigen::VectorXd integrate(const std::function<Eigen::VectorXd(double)>& f, double lo,
                                 double hi, int panels) {
  const double x[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double w[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  const double width = (hi - lo) / panels;
  Eigen::VectorXd sum;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (int q = 0; q < 3; ++q) {
      Eigen::VectorXd v = 0.5 * width * w[q] * f(mid + 0.5 * width * x[q]);
      if (sum.size() == 0) {
        sum = v;
      } else {
        sum += v;
      }
    }
  }
  return sum;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline Eigen::VectorXd uniform(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace oracle
