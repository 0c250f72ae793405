#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eprsim/types.hpp"

namespace eprsim {

inline constexpr double kAlgebraTol = 1e-12;

enum class Regime { Trigonometric, Hyperbolic, Mixed };

const char* regime_name(Regime r);

// One entanglement-coefficient entry in phase form: lambda = cos(theta) with
// theta in [0, 2pi) for the trigonometric regime, lambda = sign * cosh(theta)
// with theta in (0, inf) for the hyperbolic one.
class PhaseEntry {
public:
  enum class Kind { Trig, Hyp };

  static PhaseEntry trig(double theta);
  static PhaseEntry hyp(int sign, double theta);
  // |lambda| <= 1 -> Trig(acos lambda); |lambda| > 1 -> Hyp(sign, acosh |lambda|)
  static PhaseEntry from_lambda(double lambda);

  Kind kind() const { return kind_; }
  int sign() const { return sign_; }
  double theta() const { return theta_; }
  double lambda() const { return lambda_; }

private:
  PhaseEntry(Kind kind, int sign, double theta, double lambda)
      : kind_(kind), sign_(sign), theta_(theta), lambda_(lambda) {}
  Kind kind_;
  int sign_;  // +1/-1, meaningful for Hyp only
  double theta_;
  // fixed at construction so a coefficient given through from_lambda survives
  // bit-exactly instead of round-tripping through cos/acos
  double lambda_;
};

class PhaseMatrix {
public:
  PhaseMatrix(PhaseEntry e11, PhaseEntry e12, PhaseEntry e21, PhaseEntry e22);

  // cos(theta_11) = -1, cos(theta_12) = +1, cos(theta_21) = +1, cos(theta_22) = -1
  static PhaseMatrix epr_pattern();
  static PhaseMatrix from_lambda(const Grid2x2& lambda);

  const PhaseEntry& entry(int i, int j) const { return entries_[Grid2x2::slot(i, j)]; }
  double lambda(int i, int j) const { return entry(i, j).lambda(); }
  Grid2x2 lambda_grid() const;
  Regime regime() const;

private:
  std::array<PhaseEntry, 4> entries_;
};

// Column-stochastic 2x2 matrix of contextual probabilities; entry (i,k) is
// the probability of b = b_i in the context selected on a = a_k. Optionally
// carries the trigonometric parametrization p(1/1) = cos^2 xi1,
// p(1/2) = sin^2 xi2 with xi1, xi2 in [0, pi/2].
class TransitionMatrix {
public:
  static TransitionMatrix from_angles(double xi1, double xi2);
  static TransitionMatrix from_probabilities(const Grid2x2& p);  // validates
  // ingestion path: stores whatever the document says, validate_model reports
  static TransitionMatrix from_probabilities_unchecked(const Grid2x2& p);

  double operator()(int i, int k) const { return p_(i, k); }
  const Grid2x2& grid() const { return p_; }
  bool double_stochastic(double tol = kAlgebraTol) const;
  double column_residual() const;  // max |column sum - 1|
  double row_residual() const;     // max |row sum - 1|
  std::optional<std::pair<double, double>> angles() const { return xi_; }

private:
  explicit TransitionMatrix(const Grid2x2& p) : p_(p) {}
  Grid2x2 p_;
  std::optional<std::pair<double, double>> xi_;
};

// Spec-named constructor for the trigonometric parametrization.
TransitionMatrix build_transition_from_angles(double xi1, double xi2);

// Distribution p_a(kl) of joint setting outcomes over the source ensemble.
class SettingDistribution {
public:
  static SettingDistribution symmetric();                    // p(12) = p(21) = 1/2
  static SettingDistribution anticorrelated(double p12);     // p(21) = 1 - p12
  static SettingDistribution from_probabilities(const Grid2x2& p);  // validates
  static SettingDistribution from_probabilities_unchecked(const Grid2x2& p);

  double operator()(int k, int l) const { return p_(k, l); }
  const Grid2x2& grid() const { return p_; }
  // Exact-zero semantics: constructed models carry literal zeros; the JSON
  // ingestion path snaps |p| <= 1e-12 in the diagonal cells before reaching here.
  bool is_anticorrelated() const { return p_(1, 1) == 0.0 && p_(2, 2) == 0.0; }
  bool is_symmetric() const { return is_anticorrelated() && p_(1, 2) == 0.5 && p_(2, 1) == 0.5; }

private:
  explicit SettingDistribution(const Grid2x2& p) : p_(p) {}
  Grid2x2 p_;
};

// Analyzer directions gamma, gamma' with the substitution alpha = gamma/2,
// beta = gamma'/2.
struct EPRScenario {
  double gamma;
  double gamma_prime;

  EPRScenario(double gamma, double gamma_prime);

  double alpha() const { return gamma / 2.0; }
  double beta() const { return gamma_prime / 2.0; }
  double delta() const { return gamma_prime - gamma; }
  // angles reduced into [0, 2pi) for reporting
  double reduced_gamma() const;
  double reduced_gamma_prime() const;
};

// Full specification of a composite-system experiment.
struct ContextualModel {
  SettingDistribution settings;
  TransitionMatrix transition;        // b/a
  TransitionMatrix transition_prime;  // b'/a'
  PhaseMatrix phases;
  bool outcome_independent = true;  // Eq-(F) factorization, always on in v1
  std::optional<EPRScenario> scenario;
};

ContextualModel epr_model(const EPRScenario& s);

struct ValidationCheck {
  std::string name;
  bool pass;
  double residual;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass;
  bool epr_admissible;
};

// Never throws; reports every invariant with its residual.
ValidationReport validate_model(const ContextualModel& m);

}  // namespace eprsim
