#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eprsim/algebra.hpp"
#include "eprsim/model.hpp"

namespace eprsim {

// One composite system w = (omega, omega'): realized setting outcomes, the
// undisturbed (counterfactual) outcome pair, and the outcome pair after a
// selection-induced disturbance once the element has passed a filter.
struct CompositeSystem {
  std::uint64_t source_index;  // position in the source ensemble
  int a_val;
  int a_prime_val;
  OutcomePair hidden_b;
  std::optional<OutcomePair> selected_b;

  bool operator==(const CompositeSystem&) const = default;
};

enum class EnsembleKind { Source, HiddenSub, Selected };
enum class WhichOutcome { Hidden, Selected };

struct SampledEnsemble {
  EnsembleKind kind = EnsembleKind::Source;
  std::optional<SettingPair> context;  // set for HiddenSub/Selected
  std::uint64_t seed = 0;
  std::vector<CompositeSystem> elements;

  std::size_t size() const { return elements.size(); }
};

// Per-context distribution of the undisturbed outcome pairs. The default is
// the target unconditional table p_b in every context, which realizes
// delta = p_b - mixture; a custom allocation must reproduce p_b as the
// p_a-weighted mixture of its per-context tables.
class HiddenAllocation {
public:
  static HiddenAllocation shared(const ProbabilityTable& target);
  static HiddenAllocation per_context(const SettingDistribution& settings,
                                      const ContextTables& tables,
                                      const ProbabilityTable& target);  // validates mixture identity

  const ProbabilityTable& table(const SettingPair& kl) const;

private:
  explicit HiddenAllocation(ContextTables tables) : tables_(std::move(tables)) {}
  ContextTables tables_;
};

// Draws M composite systems i.i.d.: setting pairs from m.settings (stream 0),
// hidden outcome pairs from the hidden allocation (stream 1). The default
// allocation is the unconditional target table: apply_phases(m) for
// anticorrelated models, the classical mixture for correlated ones with all
// coefficients zero.
SampledEnsemble sample_source(const ContextualModel& m, std::size_t M, std::uint64_t seed,
                              const std::optional<HiddenAllocation>& hidden = std::nullopt);

// Splits off context (k,l): `hidden` keeps the undisturbed outcome pairs,
// `selected` re-draws them from the product context table on the context's
// selection stream. Counts always match (the filter only re-labels outcomes).
std::pair<SampledEnsemble, SampledEnsemble> select_context(const SampledEnsemble& src,
                                                           const SettingPair& kl,
                                                           const ContextualModel& m,
                                                           std::uint64_t seed);

ProbabilityTable frequency_table(const SampledEnsemble& e, WhichOutcome which);

struct TracePoint {
  std::uint64_t M;
  double value;
};

struct FrequencyTrace {
  std::string target;
  std::vector<TracePoint> points;
};

struct Verdict {
  enum class Kind { Stabilizes, Fluctuates };
  Kind kind;
  double limit;     // final-checkpoint estimate
  double band_min;  // min/max over the tail window (Fluctuates)
  double band_max;
};

// Dyadic checkpoints 2^t, t = first..floor(log2(M)).
std::vector<std::uint64_t> dyadic_checkpoints(std::uint64_t M, int first = 6);

// Stabilizes when the last `window` successive checkpoint differences stay
// below epsilon; otherwise reports the min/max band over the tail window.
Verdict stabilization_test(const FrequencyTrace& trace, double epsilon, int window);

struct EmpiricalDisturbance {
  std::vector<std::uint64_t> checkpoints;
  std::array<std::vector<double>, 4> delta_series;  // per outcome pair, row-major
  Grid2x2 delta_final;
  Grid2x2 lambda_hat;
  SettingDistribution nu_a;             // empirical setting frequencies
  TransitionMatrix transition_hat;      // empirical contextual marginals (selected)
  TransitionMatrix transition_prime_hat;
};

// Finite-M disturbance delta^(M)(ij) = sum_kl nu_a(kl) [nu0(ij|kl) - nu(ij|kl)]
// tracked at dyadic checkpoints, with lambda recovered from the final value
// through the empirical marginals.
EmpiricalDisturbance empirical_disturbance(const ContextualModel& m, std::size_t M_max,
                                           std::uint64_t seed,
                                           const std::optional<HiddenAllocation>& hidden = std::nullopt);

// Two per-context hidden joint distributions with matching single-subsystem
// marginals; the sampler alternates between them on doubling blocks so that
// quadruple frequencies never settle while every observable one does.
struct QuadrupleSchedulePair {
  SettingDistribution settings;
  ProbabilityTable qa_12, qa_21;  // schedule A, contexts (1,2) and (2,1)
  ProbabilityTable qb_12, qb_21;  // schedule B
  OutcomePair target_b{1, 1};
  SettingPair target_a{1, 2};

  static QuadrupleSchedulePair default_pair();
  void validate() const;  // throws DomainError naming any marginal mismatch
};

// Block t has length 2^t; even blocks draw hidden pairs from schedule A, odd
// ones from schedule B.
SampledEnsemble fluctuating_quadruple_source(const QuadrupleSchedulePair& pair, std::size_t M,
                                             std::uint64_t seed);

struct NamedTrace {
  FrequencyTrace trace;
  Verdict verdict;
  bool quadruple;  // true for the targeted hidden quadruple frequency
};

struct FluctuationDemo {
  std::vector<NamedTrace> traces;  // quadruple first, then observables
};

FluctuationDemo run_fluctuation_demo(const QuadrupleSchedulePair& pair, std::size_t M,
                                     std::uint64_t seed, double epsilon, int window);

// Columnar export: index,a,a_prime,hidden_b,hidden_b_prime,selected_b,
// selected_b_prime,context (selected cells empty when absent).
std::string ensemble_csv(const SampledEnsemble& e);

}  // namespace eprsim
