#pragma once

#include <optional>

#include "eprsim/model.hpp"
#include "eprsim/types.hpp"

namespace eprsim {

// Normalized 2x2 joint outcome distribution (unconditional p_b(ij) or a
// per-context table). Entries are clamped into [0,1] only within 1e-12 of the
// boundary; anything further out is rejected at construction.
class ProbabilityTable {
public:
  static ProbabilityTable checked(const Grid2x2& p);
  static ProbabilityTable uniform();

  double operator()(int i, int j) const { return p_(i, j); }
  const Grid2x2& grid() const { return p_; }

private:
  explicit ProbabilityTable(const Grid2x2& p) : p_(p) {}
  Grid2x2 p_;
};

// Per-context joint outcome tables p_b(ij | kl), indexed by setting pair.
class ContextTables {
public:
  ContextTables() = default;

  void set(const SettingPair& kl, const ProbabilityTable& table);
  bool has(const SettingPair& kl) const;
  const ProbabilityTable& at(const SettingPair& kl) const;  // throws DomainError if unset

  // outcome-independent tables: entry (i,j) = p(i/k) p'(j/l) for every context
  static ContextTables product(const TransitionMatrix& t, const TransitionMatrix& tprime);

private:
  std::array<std::optional<ProbabilityTable>, 4> tables_;
};

// Conventional total probability: p_b(ij) = sum_kl p_a(kl) p_b(ij|kl).
// Contexts with zero setting probability may be left unset.
ProbabilityTable classical_total_probability(const SettingDistribution& settings,
                                             const ContextTables& ctx);

// Factorized per-context table, entry (i,j) = p(i/k) p'(j/l).
ProbabilityTable product_context_table(const TransitionMatrix& t, const TransitionMatrix& tprime,
                                       const SettingPair& kl);

// Gap between the observed joint distribution and the classical mixture;
// rows of the result sum to zero.
Grid2x2 disturbance_term(const ProbabilityTable& observed, const SettingDistribution& settings,
                         const ContextTables& ctx);

// Entanglement coefficients: lambda(ij) = delta(ij) /
// (2 sqrt(p_a(12) p_a(21) p(i/1) p(i/2) p'(j/1) p'(j/2))).
// Requires anticorrelated settings and all six root factors positive.
Grid2x2 renormalize_disturbance(const Grid2x2& delta_bar, const SettingDistribution& settings,
                                const TransitionMatrix& t, const TransitionMatrix& tprime);

// General anticorrelated transformation: mixture of the two off-diagonal
// product contexts plus the interference term 2 lambda(ij) sqrt(...). Throws
// InadmissiblePhases when the phases do not yield a probability table.
ProbabilityTable apply_phases(const SettingDistribution& settings, const TransitionMatrix& t,
                              const TransitionMatrix& tprime, const PhaseMatrix& phases);
ProbabilityTable apply_phases(const ContextualModel& m);

// Closed-form EPR-Bohm table: p(ii) = sin^2((gamma'-gamma)/2) / 2,
// p(ij) = cos^2((gamma'-gamma)/2) / 2 for i != j.
ProbabilityTable epr_probabilities(const EPRScenario& s);

// E = p(11) + p(22) - p(12) - p(21) under the +1/-1 outcome value map.
double correlation(const ProbabilityTable& table);

// S = E(g1,g1') - E(g1,g2') + E(g2,g1') + E(g2,g2'), each E from the
// closed-form EPR table.
double chsh(double gamma1, double gamma2, double gamma1_prime, double gamma2_prime);

struct PhaseConstraint {
  double residual;  // sum_ij cos theta(ij); 0 when vacuous
  bool vacuous;     // alpha or beta in {0, pi/2}: the constraint prefactor vanishes
};

// Double-stochastic trigonometric phase dependency: for alpha, beta away from
// multiples of pi/2 an admissible phase set must have sum_ij cos theta(ij) = 0.
PhaseConstraint phase_constraint_residual(const PhaseMatrix& phases, double alpha, double beta);

// Total inverse of the lambda representation (|lambda| = 1 boundary goes to Trig).
PhaseMatrix reconstruct_phases(const Grid2x2& lambda);

// Trigonometric route written directly in the xi-parametrized form, e.g.
// p_b(11) = [cos^2 xi1 sin^2 xi2' + sin^2 xi2 cos^2 xi1']/2
//           + cos theta_11 cos xi1 sin xi2 cos xi1' sin xi2'.
// Requires symmetric settings, angle-parametrized matrices, trig phases.
// Kept independent of apply_phases so the two routes cross-check each other.
ProbabilityTable general_stochastic_probability(const SettingDistribution& settings,
                                                const TransitionMatrix& t,
                                                const TransitionMatrix& tprime,
                                                const PhaseMatrix& phases);

struct DisturbanceReport {
  Grid2x2 delta_bar;
  Grid2x2 lambda;
  PhaseMatrix phases;  // recovered from lambda
  Regime regime;
  // sum_ij cos theta(ij) when both matrices are angle-parametrized double
  // stochastic and all phases trigonometric; empty otherwise
  std::optional<double> constraint_residual;
};

// Full closed-form analysis of a model: observed = apply_phases(m), then the
// disturbance/renormalization/reconstruction chain.
DisturbanceReport disturbance_report(const ContextualModel& m);

}  // namespace eprsim
