#include "eprsim/model.hpp"

#include <cmath>
#include <numbers>

namespace eprsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Trigonometric: return "Trigonometric";
    case Regime::Hyperbolic: return "Hyperbolic";
    case Regime::Mixed: return "Mixed";
  }
  return "?";
}

PhaseEntry PhaseEntry::trig(double theta) {
  if (!(theta >= 0.0 && theta < kTwoPi))
    throw DomainError("trigonometric phase must lie in [0, 2pi)");
  return PhaseEntry(Kind::Trig, +1, theta, std::cos(theta));
}

PhaseEntry PhaseEntry::hyp(int sign, double theta) {
  if (sign != +1 && sign != -1) throw DomainError("hyperbolic sign must be +1 or -1");
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw DomainError("hyperbolic phase must lie in (0, inf)");
  return PhaseEntry(Kind::Hyp, sign, theta, sign * std::cosh(theta));
}

PhaseEntry PhaseEntry::from_lambda(double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("entanglement coefficient must be finite");
  if (std::abs(lambda) <= 1.0) return PhaseEntry(Kind::Trig, +1, std::acos(lambda), lambda);
  return PhaseEntry(Kind::Hyp, lambda > 0.0 ? +1 : -1, std::acosh(std::abs(lambda)), lambda);
}

PhaseMatrix::PhaseMatrix(PhaseEntry e11, PhaseEntry e12, PhaseEntry e21, PhaseEntry e22)
    : entries_{e11, e12, e21, e22} {}

PhaseMatrix PhaseMatrix::epr_pattern() {
  return PhaseMatrix(PhaseEntry::trig(std::numbers::pi), PhaseEntry::trig(0.0),
                     PhaseEntry::trig(0.0), PhaseEntry::trig(std::numbers::pi));
}

PhaseMatrix PhaseMatrix::from_lambda(const Grid2x2& lambda) {
  return PhaseMatrix(PhaseEntry::from_lambda(lambda(1, 1)), PhaseEntry::from_lambda(lambda(1, 2)),
                     PhaseEntry::from_lambda(lambda(2, 1)), PhaseEntry::from_lambda(lambda(2, 2)));
}

Grid2x2 PhaseMatrix::lambda_grid() const {
  Grid2x2 g;
  for (auto [i, j] : kIndexPairs) g(i, j) = lambda(i, j);
  return g;
}

Regime PhaseMatrix::regime() const {
  int trig = 0;
  for (const auto& e : entries_) trig += e.kind() == PhaseEntry::Kind::Trig;
  if (trig == 4) return Regime::Trigonometric;
  if (trig == 0) return Regime::Hyperbolic;
  return Regime::Mixed;
}

TransitionMatrix TransitionMatrix::from_angles(double xi1, double xi2) {
  if (!(xi1 >= 0.0 && xi1 <= kHalfPi) || !(xi2 >= 0.0 && xi2 <= kHalfPi))
    throw DomainError("parametrization angles must lie in [0, pi/2]");
  const double c1 = std::cos(xi1), s1 = std::sin(xi1);
  const double c2 = std::cos(xi2), s2 = std::sin(xi2);
  TransitionMatrix t(Grid2x2::of(c1 * c1, s2 * s2, s1 * s1, c2 * c2));
  t.xi_ = {xi1, xi2};
  return t;
}

TransitionMatrix TransitionMatrix::from_probabilities(const Grid2x2& p) {
  for (auto [i, k] : kIndexPairs)
    if (!(p(i, k) >= 0.0 && p(i, k) <= 1.0))
      throw DomainError("transition probabilities must lie in [0, 1]");
  TransitionMatrix t(p);
  if (t.column_residual() > kAlgebraTol)
    throw DomainError("transition matrix is not column-stochastic");
  return t;
}

TransitionMatrix TransitionMatrix::from_probabilities_unchecked(const Grid2x2& p) {
  return TransitionMatrix(p);
}

double TransitionMatrix::column_residual() const {
  return std::max(std::abs(p_(1, 1) + p_(2, 1) - 1.0), std::abs(p_(1, 2) + p_(2, 2) - 1.0));
}

double TransitionMatrix::row_residual() const {
  return std::max(std::abs(p_(1, 1) + p_(1, 2) - 1.0), std::abs(p_(2, 1) + p_(2, 2) - 1.0));
}

bool TransitionMatrix::double_stochastic(double tol) const { return row_residual() <= tol; }

TransitionMatrix build_transition_from_angles(double xi1, double xi2) {
  return TransitionMatrix::from_angles(xi1, xi2);
}

SettingDistribution SettingDistribution::symmetric() {
  return SettingDistribution(Grid2x2::of(0.0, 0.5, 0.5, 0.0));
}

SettingDistribution SettingDistribution::anticorrelated(double p12) {
  if (!(p12 >= 0.0 && p12 <= 1.0)) throw DomainError("p_a(12) must lie in [0, 1]");
  return SettingDistribution(Grid2x2::of(0.0, p12, 1.0 - p12, 0.0));
}

SettingDistribution SettingDistribution::from_probabilities(const Grid2x2& p) {
  for (auto [k, l] : kIndexPairs)
    if (!(p(k, l) >= 0.0)) throw DomainError("setting probabilities must be nonnegative");
  if (std::abs(p.sum() - 1.0) > kAlgebraTol)
    throw DomainError("setting distribution must sum to 1");
  return SettingDistribution(p);
}

SettingDistribution SettingDistribution::from_probabilities_unchecked(const Grid2x2& p) {
  return SettingDistribution(p);
}

EPRScenario::EPRScenario(double gamma, double gamma_prime) : gamma(gamma), gamma_prime(gamma_prime) {
  if (!std::isfinite(gamma) || !std::isfinite(gamma_prime))
    throw DomainError("analyzer angles must be finite");
}

namespace {
double reduce_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

// cos^2/sin^2 depend on the angle only through its residue mod pi folded into
// [0, pi/2]; fold so from_angles accepts any analyzer direction.
double fold_half_angle(double x) {
  double r = std::fmod(x, std::numbers::pi);
  if (r < 0.0) r += std::numbers::pi;
  if (r > kHalfPi) r = std::numbers::pi - r;
  return r;
}
}  // namespace

double EPRScenario::reduced_gamma() const { return reduce_angle(gamma); }
double EPRScenario::reduced_gamma_prime() const { return reduce_angle(gamma_prime); }

ContextualModel epr_model(const EPRScenario& s) {
  const double a = fold_half_angle(s.alpha());
  const double b = fold_half_angle(s.beta());
  return ContextualModel{
      SettingDistribution::symmetric(),
      TransitionMatrix::from_angles(a, a),
      TransitionMatrix::from_angles(b, b),
      PhaseMatrix::epr_pattern(),
      true,
      s,
  };
}

ValidationReport validate_model(const ContextualModel& m) {
  ValidationReport report;
  auto add = [&](std::string name, double residual, double tol) {
    report.checks.push_back({std::move(name), residual <= tol, residual});
  };

  double neg = 0.0;
  for (auto [k, l] : kIndexPairs) neg = std::max(neg, -m.settings(k, l));
  add("settings_nonnegative", neg, 0.0);
  add("settings_normalized", std::abs(m.settings.grid().sum() - 1.0), kAlgebraTol);
  add("anticorrelation", std::max(m.settings(1, 1), m.settings(2, 2)), 0.0);

  double bounds = 0.0;
  for (auto [i, k] : kIndexPairs) {
    bounds = std::max(bounds, -m.transition(i, k));
    bounds = std::max(bounds, m.transition(i, k) - 1.0);
    bounds = std::max(bounds, -m.transition_prime(i, k));
    bounds = std::max(bounds, m.transition_prime(i, k) - 1.0);
  }
  add("transition_bounds", bounds, 0.0);
  add("transition_stochastic", m.transition.column_residual(), kAlgebraTol);
  add("transition_prime_stochastic", m.transition_prime.column_residual(), kAlgebraTol);

  // phase-domain consistency is enforced by PhaseEntry construction; the
  // regime classification is total, so only the lambda values are re-checked
  double regime = 0.0;
  for (auto [i, j] : kIndexPairs) {
    const auto& e = m.phases.entry(i, j);
    const double mag = std::abs(e.lambda());
    regime = std::max(regime, e.kind() == PhaseEntry::Kind::Trig ? mag - 1.0 : 1.0 - mag);
  }
  add("phase_regime", regime, kAlgebraTol);

  report.all_pass = true;
  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;

  bool admissible = m.settings.is_symmetric() && m.transition.double_stochastic() &&
                    m.transition_prime.double_stochastic();
  const Grid2x2 pattern = Grid2x2::of(-1.0, 1.0, 1.0, -1.0);
  for (auto [i, j] : kIndexPairs)
    admissible = admissible && std::abs(m.phases.lambda(i, j) - pattern(i, j)) <= kAlgebraTol;
  report.epr_admissible = admissible;
  return report;
}

}  // namespace eprsim
