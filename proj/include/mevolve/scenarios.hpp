#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mevolve/errors.hpp"
#include "mevolve/mild.hpp"
#include "mevolve/monotone.hpp"

namespace mevolve {

/// Outcome of testing A u <= F(u) (sub) or A u >= F(u) (super) entrywise in
/// the cone order. `worst_margin` is the largest signed defect; the
/// certificate passes when it is <= kTolOrder.
struct Certificate {
  bool passed;
  double worst_margin;
};

Certificate verify_subsolution(const GeneratorSpec& A, const Nonlinearity& F,
                               const GridFunction& u, const ConeSpec& cone);
Certificate verify_supersolution(const GeneratorSpec& A, const Nonlinearity& F,
                                 const GridFunction& u, const ConeSpec& cone);

/// Raised when a constructed bound fails its certificate.
class CertificateError : public ValidationError {
 public:
  CertificateError(const std::string& what, Certificate sub, Certificate super)
      : ValidationError(what), sub_(sub), super_(super) {}
  Certificate sub() const noexcept { return sub_; }
  Certificate super() const noexcept { return super_; }

 private:
  Certificate sub_;
  Certificate super_;
};

struct EigenData {
  std::string label;  // which operator, e.g. "A" or "A - alpha m"
  double lambda1;
  GridFunction phi0;
};

/// Closed forms of the scalar problem u' + a u = sign(u) sqrt|u|.
struct ScalarClosedForms {
  double a;
  double M;

  double equilibrium() const { return 1.0 / (a * a); }
  /// Maximal solution from u0 = 0.
  double u_max(double t) const;
  double u_min(double t) const { return -u_max(t); }
  /// Time shift with U_max(0) = M: t_M = (2/a) log(a sqrt(M) - 1).
  double t_M() const;
  double U_max(double t) const;
  double U_min(double t) const { return -U_max(t); }
  /// The solution from 0 that leaves 0 at time t0 (sign +1 or -1).
  double branch(double t, double t0, int sign) const;
};

struct ScenarioOptions {
  double dt = 0.02;
  double horizon = 2.0;  // one window; asymptotics double it
  std::optional<double> eps;  // overrides the certificate-driven sweep
  std::optional<double> M;    // overrides the default upper level
};

struct ScenarioSpec {
  ScenarioSpec(std::string name_, ProblemSpec problem_, Certificate sub_, Certificate super_)
      : name(std::move(name_)), problem(std::move(problem_)), sub(sub_), super(super_) {}

  std::string name;
  ProblemSpec problem;  // unscaled; interval holds the certified bounds
  Certificate sub;
  Certificate super;
  double eps = 0.0;
  double M = 0.0;
  std::vector<EigenData> eigen;
  std::vector<std::pair<std::string, double>> checks;  // named scalar diagnostics
  bool nontrivial = false;  // nontrivial/coexistence interval emitted
  std::optional<OrderInterval> global_interval;  // always-valid fallback
  std::optional<GridFunction> predicted_equilibrium;
  std::optional<ScalarClosedForms> closed_forms;
  std::vector<GridFunction> semi_trivial;  // competition: w1, w2
  std::vector<std::string> notes;

  double check(const std::string& key) const;
};

/// Logistic u' + A u = a u - b u^2 on [eps phi0, M 1]; [0, M 1] when a <= lambda_1(A).
ScenarioSpec build_logistic(const GeneratorSpec& A, double a, double b,
                            const ScenarioOptions& options = {});

/// Two-species competition in the flipped cone. Emits the coexistence
/// interval when both instability gates hold, the box interval otherwise.
ScenarioSpec build_competition(const GeneratorSpec& A1, const GeneratorSpec& A2,
                               const CompetitionRates& rates,
                               const ScenarioOptions& options = {},
                               const EngineOptions& engine = {});

/// Fisher equation with weight m. The interval is [0, 1] unless both
/// instability eigenvalues are negative and the eps sweep certifies
/// [eps phi0, 1 - eps phi1].
ScenarioSpec build_fisher(const GeneratorSpec& A, const GridFunction& m, double alpha,
                          const ScenarioOptions& options = {});

/// u' + a u = sign(u) sqrt|u| on [-M, M]; requires M >= 1/a^2.
ScenarioSpec build_scalar_nonunique(double a, double M, const ScenarioOptions& options = {});

}  // namespace mevolve
