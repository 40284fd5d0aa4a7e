#include "mevolve/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mevolve {
namespace {

constexpr int kSweepSteps = 60;

// Largest signed value of signs * (A u - F(u)), negated for super-solutions.
double defect(const GeneratorSpec& A, const Nonlinearity& F, const GridFunction& u,
              const ConeSpec& cone, bool sub) {
  if (A.dimension() != u.size()) throw StructuralError("generator and state sizes differ");
  if (cone.components() != u.components()) throw StructuralError("cone does not match state");
  const Eigen::VectorXd r = A.matrix() * u.values() - F(u).values();
  const Eigen::VectorXd s = cone.entry_signs(u.nodes());
  const Eigen::VectorXd oriented = s.cwiseProduct(r);
  return sub ? oriented.maxCoeff() : (-oriented).maxCoeff();
}

std::string margins(const Certificate& sub, const Certificate& super) {
  std::ostringstream os;
  os << "sub-solution margin " << sub.worst_margin << ", super-solution margin "
     << super.worst_margin;
  return os.str();
}

void require_certified(const std::string& what, const Certificate& sub,
                       const Certificate& super) {
  if (!sub.passed || !super.passed) {
    throw CertificateError(what + ": " + margins(sub, super), sub, super);
  }
}

bool zero_row_sums(const GeneratorSpec& A) {
  return A.matrix().rowwise().sum().cwiseAbs().maxCoeff() <= 1e-9 * A.matrix().cwiseAbs().maxCoeff();
}

ProblemSpec make_problem(const GeneratorSpec& A, NonlinearityPtr F, OrderInterval I,
                         const ScenarioOptions& opt) {
  ProblemSpec p{A, std::move(F), std::move(I), 0.0, opt.horizon, opt.dt};
  p.validate();
  return p;
}

}  // namespace

Certificate verify_subsolution(const GeneratorSpec& A, const Nonlinearity& F,
                               const GridFunction& u, const ConeSpec& cone) {
  const double m = defect(A, F, u, cone, true);
  return {m <= kTolOrder, m};
}

Certificate verify_supersolution(const GeneratorSpec& A, const Nonlinearity& F,
                                 const GridFunction& u, const ConeSpec& cone) {
  const double m = defect(A, F, u, cone, false);
  return {m <= kTolOrder, m};
}

double ScalarClosedForms::u_max(double t) const {
  if (t <= 0.0) return 0.0;
  const double e = -std::expm1(-0.5 * a * t);
  return e * e / (a * a);
}

double ScalarClosedForms::t_M() const { return (2.0 / a) * std::log(a * std::sqrt(M) - 1.0); }

double ScalarClosedForms::U_max(double t) const {
  const double e = 1.0 + std::exp(-0.5 * a * (t - t_M()));
  return e * e / (a * a);
}

double ScalarClosedForms::branch(double t, double t0, int sign) const {
  return t <= t0 ? 0.0 : static_cast<double>(sign) * u_max(t - t0);
}

double ScenarioSpec::check(const std::string& key) const {
  for (const auto& [k, v] : checks) {
    if (k == key) return v;
  }
  throw StructuralError("scenario has no check named " + key);
}

ScenarioSpec build_logistic(const GeneratorSpec& A, double a, double b,
                            const ScenarioOptions& opt) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("logistic needs a > 0 and b > 0");
  if (A.components() != 1) throw StructuralError("logistic takes a scalar generator");
  const auto F = logistic(a, b);
  const auto n = A.nodes();
  const auto cone = ConeSpec::standard();
  const EigPair eig = principal_eig(A);
  const GridFunction& phi = eig.phi0;
  const double phi_max = phi.max();

  double eps = 0.0;
  bool nontrivial = a > eig.lambda1;
  std::vector<std::string> notes;
  Certificate sub{true, 0.0};
  if (nontrivial) {
    const double eps0 = (a - eig.lambda1) / (b * phi_max);
    if (opt.eps) {
      eps = *opt.eps;
      sub = verify_subsolution(A, *F, eps * phi, cone);
    } else {
      for (int j = 0; j <= kSweepSteps; ++j) {
        eps = std::ldexp(eps0, -j);
        sub = verify_subsolution(A, *F, eps * phi, cone);
        if (sub.passed) break;
      }
    }
  } else {
    notes.push_back("a <= lambda_1(A): no positive equilibrium, lower bound 0");
    if (opt.eps) eps = *opt.eps;
    sub = verify_subsolution(A, *F, eps * phi, cone);
  }
  const GridFunction lower = eps * phi;
  const double M = opt.M ? *opt.M : std::max(2.0 * a / b, 2.0 * eps * phi_max);
  const GridFunction upper = GridFunction::constant(n, M);
  const Certificate super = verify_supersolution(A, *F, upper, cone);
  require_certified("logistic bounds not certified", sub, super);
  if (order_violation(lower, upper, cone) > kTolOrder) {
    throw CertificateError("logistic bounds are not ordered", sub, super);
  }

  ScenarioSpec s{"logistic",
                 make_problem(A, F, OrderInterval(lower, upper, cone), opt),
                 sub,
                 super};
  s.eps = eps;
  s.M = M;
  s.eigen.push_back({"A", eig.lambda1, phi});
  s.checks = {{"a", a}, {"b", b}, {"lambda1", eig.lambda1}, {"a_minus_lambda1", a - eig.lambda1}};
  s.nontrivial = nontrivial;
  if (!nontrivial) {
    s.predicted_equilibrium = GridFunction::zeros(n);
  } else if (zero_row_sums(A)) {
    s.predicted_equilibrium = GridFunction::constant(n, a / b);
  }
  s.notes = std::move(notes);
  return s;
}

ScenarioSpec build_competition(const GeneratorSpec& A1, const GeneratorSpec& A2,
                               const CompetitionRates& r, const ScenarioOptions& opt,
                               const EngineOptions& engine) {
  for (double v : {r.a1, r.a2, r.b11, r.b12, r.b21, r.b22}) {
    if (!(v > 0.0)) throw ValidationError("competition rates must be positive");
  }
  if (A1.components() != 1 || A2.components() != 1 || A1.nodes() != A2.nodes()) {
    throw StructuralError("competition needs two scalar generators on the same mesh");
  }
  const auto n = A1.nodes();
  const auto F = competition(r);
  const auto cone = ConeSpec::competition();
  const GeneratorSpec A = block_diagonal({A1, A2});

  // Semi-trivial states: each species alone, solved by the engine and
  // polished by Newton.
  auto semi_trivial = [&](const GeneratorSpec& Ak, double a, double b) {
    ScenarioOptions sub_opt;
    sub_opt.dt = opt.dt;
    sub_opt.horizon = opt.horizon;
    const ScenarioSpec ls = build_logistic(Ak, a, b, sub_opt);
    if (!ls.nontrivial) return GridFunction::zeros(n);
    const ProblemSpec p = prepare_problem(ls.problem);
    const EquilibriumReport eq = asymptotic_equilibria(p, engine);
    if (!eq.residual_ok || eq.horizon_capped) {
      throw NumericalError("semi-trivial state did not converge",
                           std::max(eq.residual_lower, eq.residual_upper));
    }
    const NewtonResult nr = newton_equilibrium(p, eq.u_upper_star, 1e-10);
    return nr.converged && nr.residual <= eq.residual_upper ? nr.v : eq.u_upper_star;
  };
  const GridFunction w1 = semi_trivial(A1, r.a1, r.b11);
  const GridFunction w2 = semi_trivial(A2, r.a2, r.b22);

  const double lam1 = principal_eig(A1).lambda1;
  const double lam2 = principal_eig(A2).lambda1;
  const EigPair e1 = principal_eig(add_potential(A1, r.b12 * w2));
  const EigPair e2 = principal_eig(add_potential(A2, r.b21 * w1));
  const bool necessary = r.a1 > lam1 && r.a2 > lam2;
  const bool gate = r.a1 > e1.lambda1 && r.a2 > e2.lambda1;

  ScenarioSpec s{"competition",
                 make_problem(A, F,
                              OrderInterval(GridFunction::stack({GridFunction::zeros(n),
                                                                 GridFunction::zeros(n)}),
                                            GridFunction::stack({GridFunction::zeros(n),
                                                                 GridFunction::zeros(n)}),
                                            cone),
                              opt),
                 {false, 0.0},
                 {false, 0.0}};
  s.eigen = {{"A1", lam1, principal_eig(A1).phi0},
             {"A2", lam2, principal_eig(A2).phi0},
             {"A1 + b12 w2", e1.lambda1, e1.phi0},
             {"A2 + b21 w1", e2.lambda1, e2.phi0}};
  s.checks = {{"necessary_1", r.a1 - lam1},
              {"necessary_2", r.a2 - lam2},
              {"coexistence_gate_1", r.a1 - e1.lambda1},
              {"coexistence_gate_2", r.a2 - e2.lambda1}};
  s.semi_trivial = {w1, w2};

  // Box interval: (0, M 1) below (M 1, 0) in the flipped cone.
  const double M = opt.M ? *opt.M : std::max(r.a1 / r.b11, r.a2 / r.b22);
  const GridFunction box_lo = GridFunction::stack({GridFunction::zeros(n), GridFunction::constant(n, M)});
  const GridFunction box_hi = GridFunction::stack({GridFunction::constant(n, M), GridFunction::zeros(n)});
  const OrderInterval box(box_lo, box_hi, cone);
  s.global_interval = box;
  s.M = M;

  bool emitted = false;
  if (gate) {
    const GridFunction& v1 = e1.phi0;
    const GridFunction& v2 = e2.phi0;
    const double eps0 =
        std::min((r.a1 - e1.lambda1) / (r.b11 * v1.max()), (r.a2 - e2.lambda1) / (r.b22 * v2.max()));
    const int sweeps = opt.eps ? 0 : kSweepSteps;
    for (int j = 0; j <= sweeps; ++j) {
      const double eps = opt.eps ? *opt.eps : std::ldexp(eps0, -j);
      const GridFunction lo = GridFunction::stack({eps * v1, w2});
      const GridFunction hi = GridFunction::stack({w1, eps * v2});
      const Certificate sub = verify_subsolution(A, *F, lo, cone);
      const Certificate super = verify_supersolution(A, *F, hi, cone);
      s.sub = sub;
      s.super = super;
      s.eps = eps;
      if (sub.passed && super.passed && order_violation(lo, hi, cone) <= kTolOrder) {
        s.problem.interval = OrderInterval(lo, hi, cone);
        emitted = true;
        break;
      }
    }
    if (!emitted) {
      if (opt.eps) require_certified("coexistence bounds not certified", s.sub, s.super);
      s.notes.push_back("coexistence sweep exhausted; using the box interval");
    }
  } else {
    s.notes.push_back("coexistence gate fails; using the box interval");
  }
  if (!emitted) {
    s.sub = verify_subsolution(A, *F, box_lo, cone);
    s.super = verify_supersolution(A, *F, box_hi, cone);
    require_certified("competition box not certified", s.sub, s.super);
    s.problem.interval = box;
    s.eps = 0.0;
  }
  if (!necessary) s.notes.push_back("a_k <= lambda_1(A_k) for some species: it dies out");
  s.nontrivial = emitted;

  if (zero_row_sums(A1) && zero_row_sums(A2) && emitted) {
    // Constant coexistence state of the 2x2 algebraic system.
    const double det = r.b11 * r.b22 - r.b12 * r.b21;
    if (det != 0.0) {
      const double u1 = (r.a1 * r.b22 - r.b12 * r.a2) / det;
      const double u2 = (r.b11 * r.a2 - r.b21 * r.a1) / det;
      if (u1 > 0.0 && u2 > 0.0) {
        s.predicted_equilibrium =
            GridFunction::stack({GridFunction::constant(n, u1), GridFunction::constant(n, u2)});
      }
    }
  }
  return s;
}

ScenarioSpec build_fisher(const GeneratorSpec& A, const GridFunction& m, double alpha,
                          const ScenarioOptions& opt) {
  if (A.components() != 1 || m.size() != A.dimension()) {
    throw StructuralError("fisher weight must match the scalar generator");
  }
  const auto F = fisher(m, alpha);  // validates alpha
  if (!check_submarkovian(A)) throw ValidationError("fisher needs a sub-markovian generator");
  const auto n = A.nodes();
  const auto cone = ConeSpec::standard();
  const GridFunction zero = GridFunction::zeros(n);
  const GridFunction one = GridFunction::constant(n, 1.0);

  // Linear instability of 0 uses A - alpha m (h'(0) = alpha); that of 1 uses
  // A + (1 - alpha) m since h'(1) = alpha - 1.
  const EigPair e0 = principal_eig(add_potential(A, -alpha * m));
  const EigPair e1 = principal_eig(add_potential(A, (1.0 - alpha) * m));

  ScenarioSpec s{"fisher",
                 make_problem(A, F, OrderInterval(zero, one, cone), opt),
                 verify_subsolution(A, *F, zero, cone),
                 verify_supersolution(A, *F, one, cone)};
  require_certified("fisher [0, 1] not certified", s.sub, s.super);
  s.global_interval = s.problem.interval;
  s.M = 1.0;
  s.eigen = {{"A - alpha m", e0.lambda1, e0.phi0},
             {"A + (1 - alpha) m", e1.lambda1, e1.phi0}};
  s.checks = {{"alpha", alpha}, {"lambda0", e0.lambda1}, {"lambda1_tilde", e1.lambda1}};

  if (e0.lambda1 < 0.0 && e1.lambda1 < 0.0) {
    const GridFunction& phi0 = e0.phi0;
    const GridFunction& phi1 = e1.phi0;
    const int sweeps = opt.eps ? 0 : kSweepSteps;
    bool found = false;
    Certificate sub{false, 0.0}, super{false, 0.0};
    double eps = 0.0;
    for (int j = 0; j <= sweeps && !found; ++j) {
      eps = opt.eps ? *opt.eps : std::ldexp(1.0, -j);
      const GridFunction lo = eps * phi0;
      const GridFunction hi = one - eps * phi1;
      sub = verify_subsolution(A, *F, lo, cone);
      super = verify_supersolution(A, *F, hi, cone);
      if (sub.passed && super.passed && order_violation(lo, hi, cone) <= kTolOrder &&
          order_violation(zero, lo, cone) <= kTolOrder) {
        s.problem.interval = OrderInterval(lo, hi, cone);
        found = true;
      }
    }
    if (found) {
      s.sub = sub;
      s.super = super;
      s.eps = eps;
      s.nontrivial = true;
    } else {
      if (opt.eps) require_certified("fisher bounds not certified", sub, super);
      s.notes.push_back("eps sweep exhausted: nontrivial interval unavailable");
    }
  } else {
    s.notes.push_back("0 or 1 is linearly stable: nontrivial interval unavailable");
  }
  return s;
}

ScenarioSpec build_scalar_nonunique(double a, double M, const ScenarioOptions& opt) {
  if (!(a > 0.0)) throw ValidationError("scalar example needs a > 0");
  const double floor = 1.0 / (a * a);
  if (!(M >= floor)) {
    throw ValidationError("M = " + std::to_string(M) + " is below 1/a^2 = " +
                          std::to_string(floor) + "; the bounds are then not sub/super-solutions");
  }
  const GeneratorSpec A = scalar_generator(a);
  const auto F = signed_sqrt();
  const auto cone = ConeSpec::standard();
  const GridFunction lo = GridFunction::constant(1, -M);
  const GridFunction hi = GridFunction::constant(1, M);
  ScenarioSpec s{"scalar_nonunique",
                 make_problem(A, F, OrderInterval(lo, hi, cone), opt),
                 verify_subsolution(A, *F, lo, cone),
                 verify_supersolution(A, *F, hi, cone)};
  require_certified("scalar bounds not certified", s.sub, s.super);
  s.M = M;
  s.eigen = {{"A", a, GridFunction::constant(1, 1.0)}};
  s.closed_forms = ScalarClosedForms{a, M};
  s.checks = {{"a", a}, {"t_M", s.closed_forms->t_M()}};
  s.nontrivial = true;
  s.notes.push_back("F is not Lipschitz at 0: solutions from 0 are not unique");
  return s;
}

}  // namespace mevolve
