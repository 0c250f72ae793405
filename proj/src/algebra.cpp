#include "eprsim/algebra.hpp"

#include <cmath>
#include <sstream>

namespace eprsim {

namespace {

void require_normalized_settings(const SettingDistribution& settings) {
  for (auto [k, l] : kIndexPairs)
    if (!(settings(k, l) >= 0.0))
      throw DomainError("setting distribution has a negative entry");
  if (std::abs(settings.grid().sum() - 1.0) > kAlgebraTol)
    throw DomainError("setting distribution is not normalized");
}

void require_stochastic(const TransitionMatrix& t, const char* which) {
  if (t.column_residual() > kAlgebraTol) {
    std::ostringstream msg;
    msg << which << " transition matrix is not column-stochastic (residual "
        << t.column_residual() << ")";
    throw DomainError(msg.str());
  }
}

std::string entry_name(int i, int j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

ProbabilityTable ProbabilityTable::checked(const Grid2x2& p) {
  Grid2x2 q = p;
  for (auto [i, j] : kIndexPairs) {
    double& x = q(i, j);
    if (!(x >= -kAlgebraTol && x <= 1.0 + kAlgebraTol))
      throw DomainError("probability table entry " + entry_name(i, j) + " outside [0, 1]");
    x = std::min(1.0, std::max(0.0, x));
  }
  if (std::abs(q.sum() - 1.0) > kAlgebraTol)
    throw DomainError("probability table does not sum to 1");
  return ProbabilityTable(q);
}

ProbabilityTable ProbabilityTable::uniform() {
  return ProbabilityTable(Grid2x2::of(0.25, 0.25, 0.25, 0.25));
}

void ContextTables::set(const SettingPair& kl, const ProbabilityTable& table) {
  tables_[Grid2x2::slot(kl.k, kl.l)] = table;
}

bool ContextTables::has(const SettingPair& kl) const {
  return tables_[Grid2x2::slot(kl.k, kl.l)].has_value();
}

const ProbabilityTable& ContextTables::at(const SettingPair& kl) const {
  const auto& slot = tables_[Grid2x2::slot(kl.k, kl.l)];
  if (!slot)
    throw DomainError("no table for context (" + std::to_string(kl.k) + "," +
                      std::to_string(kl.l) + ")");
  return *slot;
}

ContextTables ContextTables::product(const TransitionMatrix& t, const TransitionMatrix& tprime) {
  ContextTables ctx;
  for (auto [k, l] : kIndexPairs)
    ctx.set(SettingPair(k, l), product_context_table(t, tprime, SettingPair(k, l)));
  return ctx;
}

ProbabilityTable product_context_table(const TransitionMatrix& t, const TransitionMatrix& tprime,
                                       const SettingPair& kl) {
  require_stochastic(t, "b/a");
  require_stochastic(tprime, "b'/a'");
  Grid2x2 p;
  for (auto [i, j] : kIndexPairs) p(i, j) = t(i, kl.k) * tprime(j, kl.l);
  return ProbabilityTable::checked(p);
}

ProbabilityTable classical_total_probability(const SettingDistribution& settings,
                                             const ContextTables& ctx) {
  require_normalized_settings(settings);
  Grid2x2 p;
  for (auto [i, j] : kIndexPairs) {
    double acc = 0.0;
    for (auto [k, l] : kIndexPairs) {
      const double w = settings(k, l);
      if (w == 0.0) continue;
      acc += w * ctx.at(SettingPair(k, l))(i, j);
    }
    p(i, j) = acc;
  }
  return ProbabilityTable::checked(p);
}

Grid2x2 disturbance_term(const ProbabilityTable& observed, const SettingDistribution& settings,
                         const ContextTables& ctx) {
  const ProbabilityTable mixture = classical_total_probability(settings, ctx);
  Grid2x2 delta;
  for (auto [i, j] : kIndexPairs) delta(i, j) = observed(i, j) - mixture(i, j);
  return delta;
}

Grid2x2 renormalize_disturbance(const Grid2x2& delta_bar, const SettingDistribution& settings,
                                const TransitionMatrix& t, const TransitionMatrix& tprime) {
  require_normalized_settings(settings);
  if (!settings.is_anticorrelated())
    throw DomainError("entanglement coefficients are defined for anticorrelated settings");
  require_stochastic(t, "b/a");
  require_stochastic(tprime, "b'/a'");

  auto require_positive = [](double value, const std::string& name) {
    if (!(value > 0.0))
      throw SingularContext("renormalization factor " + name +
                            " vanishes; entanglement coefficient undefined");
  };
  require_positive(settings(1, 2), "p_a(12)");
  require_positive(settings(2, 1), "p_a(21)");

  Grid2x2 lambda;
  for (auto [i, j] : kIndexPairs) {
    require_positive(t(i, 1), "p_b/a(" + std::to_string(i) + "/1)");
    require_positive(t(i, 2), "p_b/a(" + std::to_string(i) + "/2)");
    require_positive(tprime(j, 1), "p_b'/a'(" + std::to_string(j) + "/1)");
    require_positive(tprime(j, 2), "p_b'/a'(" + std::to_string(j) + "/2)");
    const double root = std::sqrt(settings(1, 2) * settings(2, 1) * t(i, 1) * t(i, 2) *
                                  tprime(j, 1) * tprime(j, 2));
    lambda(i, j) = delta_bar(i, j) / (2.0 * root);
  }
  return lambda;
}

ProbabilityTable apply_phases(const SettingDistribution& settings, const TransitionMatrix& t,
                              const TransitionMatrix& tprime, const PhaseMatrix& phases) {
  require_normalized_settings(settings);
  if (!settings.is_anticorrelated())
    throw DomainError("phase transformation requires anticorrelated settings");
  require_stochastic(t, "b/a");
  require_stochastic(tprime, "b'/a'");

  const double pa12 = settings(1, 2);
  const double pa21 = settings(2, 1);
  Grid2x2 p;
  for (auto [i, j] : kIndexPairs) {
    const double mixture = pa12 * (t(i, 1) * tprime(j, 2)) + pa21 * (t(i, 2) * tprime(j, 1));
    const double root =
        std::sqrt(pa12 * pa21 * t(i, 1) * t(i, 2) * tprime(j, 1) * tprime(j, 2));
    p(i, j) = mixture + 2.0 * phases.lambda(i, j) * root;
    if (p(i, j) < -kAlgebraTol)
      throw InadmissiblePhases("phase assignment drives entry " + entry_name(i, j) +
                                   " below 0",
                               i, j, -p(i, j));
    if (p(i, j) > 1.0 + kAlgebraTol)
      throw InadmissiblePhases("phase assignment drives entry " + entry_name(i, j) +
                                   " above 1",
                               i, j, p(i, j) - 1.0);
  }
  const double norm_residual = std::abs(p.sum() - 1.0);
  if (norm_residual > kAlgebraTol)
    throw InadmissiblePhases("phase assignment breaks normalization (residual " +
                                 std::to_string(norm_residual) + ")",
                             0, 0, norm_residual);
  return ProbabilityTable::checked(p);
}

ProbabilityTable apply_phases(const ContextualModel& m) {
  return apply_phases(m.settings, m.transition, m.transition_prime, m.phases);
}

ProbabilityTable epr_probabilities(const EPRScenario& s) {
  const double half = s.delta() / 2.0;
  const double sd = std::sin(half);
  const double cd = std::cos(half);
  const double diag = 0.5 * sd * sd;
  const double off = 0.5 * cd * cd;
  return ProbabilityTable::checked(Grid2x2::of(diag, off, off, diag));
}

double correlation(const ProbabilityTable& table) {
  return (table(1, 1) + table(2, 2)) - (table(1, 2) + table(2, 1));
}

double chsh(double gamma1, double gamma2, double gamma1_prime, double gamma2_prime) {
  auto e = [](double g, double gp) { return correlation(epr_probabilities(EPRScenario(g, gp))); };
  return e(gamma1, gamma1_prime) - e(gamma1, gamma2_prime) + e(gamma2, gamma1_prime) +
         e(gamma2, gamma2_prime);
}

PhaseConstraint phase_constraint_residual(const PhaseMatrix& phases, double alpha, double beta) {
  if (phases.regime() != Regime::Trigonometric)
    throw DomainError("phase constraint applies to trigonometric phases only");
  // prefactor cos sin cos sin vanishes at multiples of pi/2 (up to rounding of
  // the angle constants themselves)
  const bool vacuous = std::abs(std::sin(2.0 * alpha)) <= 1e-15 ||
                       std::abs(std::sin(2.0 * beta)) <= 1e-15;
  if (vacuous) return {0.0, true};
  double sum = 0.0;
  for (auto [i, j] : kIndexPairs) sum += phases.entry(i, j).lambda();
  return {sum, false};
}

PhaseMatrix reconstruct_phases(const Grid2x2& lambda) { return PhaseMatrix::from_lambda(lambda); }

ProbabilityTable general_stochastic_probability(const SettingDistribution& settings,
                                                const TransitionMatrix& t,
                                                const TransitionMatrix& tprime,
                                                const PhaseMatrix& phases) {
  if (!settings.is_symmetric())
    throw DomainError("general stochastic expression assumes the symmetric case");
  if (!t.angles() || !tprime.angles())
    throw DomainError("general stochastic expression needs angle-parametrized matrices");
  if (phases.regime() != Regime::Trigonometric)
    throw DomainError("general stochastic expression covers trigonometric phases only");

  const auto [xi1, xi2] = *t.angles();
  const auto [xi1p, xi2p] = *tprime.angles();
  const double c1 = std::cos(xi1), s1 = std::sin(xi1);
  const double c2 = std::cos(xi2), s2 = std::sin(xi2);
  const double c1p = std::cos(xi1p), s1p = std::sin(xi1p);
  const double c2p = std::cos(xi2p), s2p = std::sin(xi2p);
  auto ct = [&](int i, int j) { return phases.entry(i, j).lambda(); };

  Grid2x2 p;
  p(1, 1) = 0.5 * (c1 * c1 * s2p * s2p + s2 * s2 * c1p * c1p) + ct(1, 1) * c1 * s2 * c1p * s2p;
  p(1, 2) = 0.5 * (c1 * c1 * c2p * c2p + s2 * s2 * s1p * s1p) + ct(1, 2) * c1 * s2 * s1p * c2p;
  p(2, 1) = 0.5 * (s1 * s1 * s2p * s2p + c2 * c2 * c1p * c1p) + ct(2, 1) * s1 * c2 * c1p * s2p;
  p(2, 2) = 0.5 * (s1 * s1 * c2p * c2p + c2 * c2 * s1p * s1p) + ct(2, 2) * s1 * c2 * s1p * c2p;

  for (auto [i, j] : kIndexPairs) {
    if (p(i, j) < -kAlgebraTol)
      throw InadmissiblePhases("phase assignment drives entry " + entry_name(i, j) + " below 0",
                               i, j, -p(i, j));
    if (p(i, j) > 1.0 + kAlgebraTol)
      throw InadmissiblePhases("phase assignment drives entry " + entry_name(i, j) + " above 1",
                               i, j, p(i, j) - 1.0);
  }
  const double norm_residual = std::abs(p.sum() - 1.0);
  if (norm_residual > kAlgebraTol)
    throw InadmissiblePhases("phase assignment breaks normalization (residual " +
                                 std::to_string(norm_residual) + ")",
                             0, 0, norm_residual);
  return ProbabilityTable::checked(p);
}

DisturbanceReport disturbance_report(const ContextualModel& m) {
  const ProbabilityTable observed = apply_phases(m);
  const ContextTables ctx = ContextTables::product(m.transition, m.transition_prime);
  const Grid2x2 delta = disturbance_term(observed, m.settings, ctx);
  const Grid2x2 lambda = renormalize_disturbance(delta, m.settings, m.transition, m.transition_prime);
  PhaseMatrix recovered = reconstruct_phases(lambda);
  const Regime regime = recovered.regime();

  std::optional<double> constraint;
  if (m.transition.angles() && m.transition_prime.angles() && m.transition.double_stochastic() &&
      m.transition_prime.double_stochastic() && regime == Regime::Trigonometric) {
    const auto pc = phase_constraint_residual(recovered, m.transition.angles()->first,
                                              m.transition_prime.angles()->first);
    if (!pc.vacuous) constraint = pc.residual;
  }
  return DisturbanceReport{delta, lambda, std::move(recovered), regime, constraint};
}

}  // namespace eprsim
