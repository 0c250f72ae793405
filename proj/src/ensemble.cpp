#include "eprsim/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "eprsim/rng.hpp"

namespace eprsim {

namespace {

// one categorical draw over the four cells of a grid, row-major order;
// cells with weight exactly 0 are unreachable
std::pair<int, int> draw_pair(const Grid2x2& weights, double u) {
  double acc = 0.0;
  for (auto [i, j] : kIndexPairs) {
    acc += weights(i, j);
    if (u < acc) return {i, j};
  }
  return {2, 2};
}

// doubling blocks: block t covers source indices [2^t - 1, 2^{t+1} - 1)
int block_of(std::uint64_t n) { return std::bit_width(n + 1) - 1; }

std::string context_label(int k, int l) { return std::to_string(k) + std::to_string(l); }

}  // namespace

HiddenAllocation HiddenAllocation::shared(const ProbabilityTable& target) {
  ContextTables tables;
  for (auto [k, l] : kIndexPairs) tables.set(SettingPair(k, l), target);
  return HiddenAllocation(std::move(tables));
}

HiddenAllocation HiddenAllocation::per_context(const SettingDistribution& settings,
                                               const ContextTables& tables,
                                               const ProbabilityTable& target) {
  for (auto [i, j] : kIndexPairs) {
    double mix = 0.0;
    for (auto [k, l] : kIndexPairs) {
      const double w = settings(k, l);
      if (w == 0.0) continue;
      if (!tables.has(SettingPair(k, l)))
        throw InfeasibleHiddenAllocation("hidden allocation misses context (" +
                                         context_label(k, l) + ")");
      mix += w * tables.at(SettingPair(k, l))(i, j);
    }
    if (std::abs(mix - target(i, j)) > kAlgebraTol) {
      std::ostringstream msg;
      msg << "hidden allocation does not reproduce the target table at entry (" << i << "," << j
          << "): mixture " << mix << " vs target " << target(i, j);
      throw InfeasibleHiddenAllocation(msg.str());
    }
  }
  return HiddenAllocation(tables);
}

const ProbabilityTable& HiddenAllocation::table(const SettingPair& kl) const {
  return tables_.at(kl);
}

namespace {

// target unconditional table: the phase transformation for anticorrelated
// models, the plain total-probability mixture for correlated ones with no
// disturbance (correlated models with nonzero coefficients have no defined
// target)
ProbabilityTable target_table(const ContextualModel& m) {
  if (m.settings.is_anticorrelated()) return apply_phases(m);
  for (auto [i, j] : kIndexPairs)
    if (m.phases.lambda(i, j) != 0.0)
      throw DomainError(
          "correlated settings with nonzero entanglement coefficients have no target table");
  return classical_total_probability(
      m.settings, ContextTables::product(m.transition, m.transition_prime));
}

}  // namespace

SampledEnsemble sample_source(const ContextualModel& m, std::size_t M, std::uint64_t seed,
                              const std::optional<HiddenAllocation>& hidden) {
  if (M < 1) throw DomainError("ensemble size must be at least 1");
  const HiddenAllocation alloc = hidden ? *hidden : HiddenAllocation::shared(target_table(m));

  SplitMix64 settings_rng = substream(seed, stream::settings);
  SplitMix64 hidden_rng = substream(seed, stream::hidden);

  SampledEnsemble out;
  out.kind = EnsembleKind::Source;
  out.seed = seed;
  out.elements.reserve(M);
  for (std::size_t n = 0; n < M; ++n) {
    const auto [k, l] = draw_pair(m.settings.grid(), settings_rng.next_unit());
    const auto [i, j] = draw_pair(alloc.table(SettingPair(k, l)).grid(), hidden_rng.next_unit());
    out.elements.push_back(CompositeSystem{n, k, l, OutcomePair(i, j), std::nullopt});
  }
  return out;
}

std::pair<SampledEnsemble, SampledEnsemble> select_context(const SampledEnsemble& src,
                                                           const SettingPair& kl,
                                                           const ContextualModel& m,
                                                           std::uint64_t seed) {
  if (src.kind != EnsembleKind::Source)
    throw DomainError("context selection starts from a source ensemble");

  const ProbabilityTable table = product_context_table(m.transition, m.transition_prime, kl);
  SplitMix64 selection_rng = substream(seed, stream::selection(kl.k, kl.l));

  SampledEnsemble hidden{EnsembleKind::HiddenSub, kl, seed, {}};
  SampledEnsemble selected{EnsembleKind::Selected, kl, seed, {}};
  for (const CompositeSystem& w : src.elements) {
    if (w.a_val != kl.k || w.a_prime_val != kl.l) continue;
    hidden.elements.push_back(w);
    const auto [i, j] = draw_pair(table.grid(), selection_rng.next_unit());
    CompositeSystem disturbed = w;
    disturbed.selected_b = OutcomePair(i, j);
    selected.elements.push_back(disturbed);
  }
  if (hidden.elements.empty())
    throw EmptyContext("context (" + context_label(kl.k, kl.l) + ") has no elements");
  return {std::move(hidden), std::move(selected)};
}

ProbabilityTable frequency_table(const SampledEnsemble& e, WhichOutcome which) {
  if (e.elements.empty()) throw DomainError("cannot take frequencies of an empty ensemble");
  Grid2x2 counts;
  for (const CompositeSystem& w : e.elements) {
    if (which == WhichOutcome::Selected) {
      if (!w.selected_b)
        throw DomainError("selected outcomes requested on an ensemble without selections");
      counts(w.selected_b->i, w.selected_b->j) += 1.0;
    } else {
      counts(w.hidden_b.i, w.hidden_b.j) += 1.0;
    }
  }
  Grid2x2 freq;
  const double M = static_cast<double>(e.elements.size());
  for (auto [i, j] : kIndexPairs) freq(i, j) = counts(i, j) / M;
  return ProbabilityTable::checked(freq);
}

std::vector<std::uint64_t> dyadic_checkpoints(std::uint64_t M, int first) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = std::uint64_t{1} << first; m <= M; m <<= 1) out.push_back(m);
  return out;
}

Verdict stabilization_test(const FrequencyTrace& trace, double epsilon, int window) {
  if (!(epsilon > 0.0)) throw DomainError("stabilization epsilon must be positive");
  if (window < 1) throw DomainError("stabilization window must be at least 1");
  const auto& pts = trace.points;
  if (pts.size() < static_cast<std::size_t>(window) + 1)
    throw DomainError("trace has too few checkpoints for the requested window");
  for (std::size_t n = 0; n + 1 < pts.size(); ++n)
    if (pts[n + 1].M <= pts[n].M) throw DomainError("trace checkpoints must be increasing");
  for (const TracePoint& p : pts)
    if (!(p.value >= 0.0 && p.value <= 1.0)) throw DomainError("trace frequencies must lie in [0, 1]");

  const std::size_t tail = pts.size() - static_cast<std::size_t>(window) - 1;
  bool stable = true;
  double lo = pts[tail].value, hi = pts[tail].value;
  for (std::size_t n = tail; n + 1 < pts.size(); ++n) {
    stable = stable && std::abs(pts[n + 1].value - pts[n].value) < epsilon;
    lo = std::min(lo, pts[n + 1].value);
    hi = std::max(hi, pts[n + 1].value);
  }
  const double last = pts.back().value;
  if (stable) return Verdict{Verdict::Kind::Stabilizes, last, last, last};
  return Verdict{Verdict::Kind::Fluctuates, last, lo, hi};
}

EmpiricalDisturbance empirical_disturbance(const ContextualModel& m, std::size_t M_max,
                                           std::uint64_t seed,
                                           const std::optional<HiddenAllocation>& hidden) {
  if (!m.settings.is_anticorrelated())
    throw DomainError("empirical disturbance requires anticorrelated settings");
  if (M_max < 64) throw DomainError("need at least 64 samples for dyadic checkpoints");

  const HiddenAllocation alloc = hidden ? *hidden : HiddenAllocation::shared(apply_phases(m));
  const ProbabilityTable table_12 =
      product_context_table(m.transition, m.transition_prime, SettingPair(1, 2));
  const ProbabilityTable table_21 =
      product_context_table(m.transition, m.transition_prime, SettingPair(2, 1));

  SplitMix64 settings_rng = substream(seed, stream::settings);
  SplitMix64 hidden_rng = substream(seed, stream::hidden);
  SplitMix64 sel_12 = substream(seed, stream::selection(1, 2));
  SplitMix64 sel_21 = substream(seed, stream::selection(2, 1));

  // per context: element count, hidden counts, selected counts
  std::uint64_t n12 = 0, n21 = 0;
  Grid2x2 hid12, hid21, sel12c, sel21c;

  const std::vector<std::uint64_t> checkpoints = dyadic_checkpoints(M_max);
  std::array<std::vector<double>, 4> delta_series;
  std::size_t next_checkpoint = 0;

  for (std::size_t n = 0; n < M_max; ++n) {
    const auto [k, l] = draw_pair(m.settings.grid(), settings_rng.next_unit());
    const auto [i, j] = draw_pair(alloc.table(SettingPair(k, l)).grid(), hidden_rng.next_unit());
    if (k == 1) {
      ++n12;
      hid12(i, j) += 1.0;
      const auto [si, sj] = draw_pair(table_12.grid(), sel_12.next_unit());
      sel12c(si, sj) += 1.0;
    } else {
      ++n21;
      hid21(i, j) += 1.0;
      const auto [si, sj] = draw_pair(table_21.grid(), sel_21.next_unit());
      sel21c(si, sj) += 1.0;
    }
    if (next_checkpoint < checkpoints.size() && n + 1 == checkpoints[next_checkpoint]) {
      const double M = static_cast<double>(n + 1);
      // nu_a(kl) nu(ij|kl) telescopes to a plain count ratio
      for (auto [ii, jj] : kIndexPairs)
        delta_series[Grid2x2::slot(ii, jj)].push_back(
            ((hid12(ii, jj) - sel12c(ii, jj)) + (hid21(ii, jj) - sel21c(ii, jj))) / M);
      ++next_checkpoint;
    }
  }

  Grid2x2 delta_final;
  for (auto [i, j] : kIndexPairs)
    delta_final(i, j) = delta_series[Grid2x2::slot(i, j)].back();

  if (n12 == 0 || n21 == 0)
    throw EmptyContext("a selection context received no elements; cannot estimate marginals");
  const double M = static_cast<double>(M_max);
  SettingDistribution nu_a = SettingDistribution::from_probabilities(
      Grid2x2::of(0.0, static_cast<double>(n12) / M, static_cast<double>(n21) / M, 0.0));

  // empirical contextual marginals: context (1,2) estimates p(i/1) and p'(j/2),
  // context (2,1) estimates p(i/2) and p'(j/1)
  Grid2x2 that, tphat;
  for (int i = 1; i <= 2; ++i) {
    that(i, 1) = (sel12c(i, 1) + sel12c(i, 2)) / static_cast<double>(n12);
    that(i, 2) = (sel21c(i, 1) + sel21c(i, 2)) / static_cast<double>(n21);
    tphat(i, 2) = (sel12c(1, i) + sel12c(2, i)) / static_cast<double>(n12);
    tphat(i, 1) = (sel21c(1, i) + sel21c(2, i)) / static_cast<double>(n21);
  }
  TransitionMatrix transition_hat = TransitionMatrix::from_probabilities(that);
  TransitionMatrix transition_prime_hat = TransitionMatrix::from_probabilities(tphat);
  Grid2x2 lambda_hat =
      renormalize_disturbance(delta_final, nu_a, transition_hat, transition_prime_hat);
  return EmpiricalDisturbance{std::move(checkpoints), std::move(delta_series), delta_final,
                              lambda_hat,             nu_a,                    transition_hat,
                              transition_prime_hat};
}

QuadrupleSchedulePair QuadrupleSchedulePair::default_pair() {
  // joint tables differ by +-0.4 on the diagonal with compensating cells, so
  // every single-subsystem marginal is (1/2, 1/2) under both schedules and the
  // p_a-weighted mixture of the two contexts is schedule-invariant as well
  const ProbabilityTable peaked =
      ProbabilityTable::checked(Grid2x2::of(0.4, 0.1, 0.1, 0.4));
  const ProbabilityTable flat = ProbabilityTable::checked(Grid2x2::of(0.0, 0.5, 0.5, 0.0));
  return QuadrupleSchedulePair{SettingDistribution::symmetric(), peaked, flat,
                               flat,                             peaked,
                               OutcomePair(1, 1),                SettingPair(1, 2)};
}

void QuadrupleSchedulePair::validate() const {
  if (!settings.is_anticorrelated())
    throw DomainError("quadruple schedule requires anticorrelated settings");
  auto check = [](const ProbabilityTable& qa, const ProbabilityTable& qb, const char* ctx) {
    for (int i = 1; i <= 2; ++i) {
      const double a_row = qa(i, 1) + qa(i, 2), b_row = qb(i, 1) + qb(i, 2);
      if (std::abs(a_row - b_row) > kAlgebraTol) {
        std::ostringstream msg;
        msg << "b-marginal mismatch between the two schedules in context " << ctx << ": nu_b(" << i
            << ") " << a_row << " vs " << b_row;
        throw DomainError(msg.str());
      }
      const double a_col = qa(1, i) + qa(2, i), b_col = qb(1, i) + qb(2, i);
      if (std::abs(a_col - b_col) > kAlgebraTol) {
        std::ostringstream msg;
        msg << "b'-marginal mismatch between the two schedules in context " << ctx << ": nu_b'("
            << i << ") " << a_col << " vs " << b_col;
        throw DomainError(msg.str());
      }
    }
  };
  check(qa_12, qb_12, "(12)");
  check(qa_21, qb_21, "(21)");
}

SampledEnsemble fluctuating_quadruple_source(const QuadrupleSchedulePair& pair, std::size_t M,
                                             std::uint64_t seed) {
  if (M < 1) throw DomainError("ensemble size must be at least 1");
  pair.validate();

  SplitMix64 settings_rng = substream(seed, stream::settings);
  SplitMix64 hidden_rng = substream(seed, stream::hidden);

  SampledEnsemble out;
  out.kind = EnsembleKind::Source;
  out.seed = seed;
  out.elements.reserve(M);
  for (std::size_t n = 0; n < M; ++n) {
    const auto [k, l] = draw_pair(pair.settings.grid(), settings_rng.next_unit());
    const bool schedule_a = block_of(n) % 2 == 0;
    const ProbabilityTable& q = k == 1 ? (schedule_a ? pair.qa_12 : pair.qb_12)
                                       : (schedule_a ? pair.qa_21 : pair.qb_21);
    const auto [i, j] = draw_pair(q.grid(), hidden_rng.next_unit());
    out.elements.push_back(CompositeSystem{n, k, l, OutcomePair(i, j), std::nullopt});
  }
  return out;
}

FluctuationDemo run_fluctuation_demo(const QuadrupleSchedulePair& pair, std::size_t M,
                                     std::uint64_t seed, double epsilon, int window) {
  if (M < 64) throw DomainError("need at least 64 samples for dyadic checkpoints");
  const SampledEnsemble src = fluctuating_quadruple_source(pair, M, seed);
  const auto checkpoints = dyadic_checkpoints(M);

  const SettingPair contexts[2] = {SettingPair(1, 2), SettingPair(2, 1)};
  std::uint64_t quad = 0;
  std::uint64_t n_ctx[2] = {0, 0};
  std::uint64_t b_count[2][2] = {{0, 0}, {0, 0}};   // [ctx][i-1]: hidden b = b_i
  std::uint64_t bp_count[2][2] = {{0, 0}, {0, 0}};  // [ctx][j-1]: hidden b' = b'_j

  FrequencyTrace quad_trace;
  {
    std::ostringstream name;
    name << "nu_ba(" << pair.target_b.i << pair.target_b.j << pair.target_a.k << pair.target_a.l
         << ")";
    quad_trace.target = name.str();
  }
  FrequencyTrace a_trace[2];
  FrequencyTrace b_trace[2][2];
  FrequencyTrace bp_trace[2][2];
  for (int c = 0; c < 2; ++c) {
    const std::string ctx = context_label(contexts[c].k, contexts[c].l);
    a_trace[c].target = "nu_a(" + ctx + ")";
    for (int v = 0; v < 2; ++v) {
      b_trace[c][v].target = "nu_b(" + std::to_string(v + 1) + "|" + ctx + ")";
      bp_trace[c][v].target = "nu_bprime(" + std::to_string(v + 1) + "|" + ctx + ")";
    }
  }

  std::size_t next_checkpoint = 0;
  for (std::size_t n = 0; n < src.elements.size(); ++n) {
    const CompositeSystem& w = src.elements[n];
    const int c = w.a_val == 1 ? 0 : 1;
    ++n_ctx[c];
    ++b_count[c][w.hidden_b.i - 1];
    ++bp_count[c][w.hidden_b.j - 1];
    if (w.hidden_b == pair.target_b && w.a_val == pair.target_a.k &&
        w.a_prime_val == pair.target_a.l)
      ++quad;
    if (next_checkpoint < checkpoints.size() && n + 1 == checkpoints[next_checkpoint]) {
      const std::uint64_t m = n + 1;
      const double M_d = static_cast<double>(m);
      quad_trace.points.push_back({m, static_cast<double>(quad) / M_d});
      for (int cc = 0; cc < 2; ++cc) {
        a_trace[cc].points.push_back({m, static_cast<double>(n_ctx[cc]) / M_d});
        const double denom = n_ctx[cc] > 0 ? static_cast<double>(n_ctx[cc]) : 1.0;
        for (int v = 0; v < 2; ++v) {
          b_trace[cc][v].points.push_back({m, static_cast<double>(b_count[cc][v]) / denom});
          bp_trace[cc][v].points.push_back({m, static_cast<double>(bp_count[cc][v]) / denom});
        }
      }
      ++next_checkpoint;
    }
  }

  FluctuationDemo demo;
  demo.traces.push_back({quad_trace, stabilization_test(quad_trace, epsilon, window), true});
  for (int c = 0; c < 2; ++c) {
    demo.traces.push_back({a_trace[c], stabilization_test(a_trace[c], epsilon, window), false});
    for (int v = 0; v < 2; ++v) {
      demo.traces.push_back({b_trace[c][v], stabilization_test(b_trace[c][v], epsilon, window), false});
      demo.traces.push_back(
          {bp_trace[c][v], stabilization_test(bp_trace[c][v], epsilon, window), false});
    }
  }
  return demo;
}

std::string ensemble_csv(const SampledEnsemble& e) {
  std::ostringstream out;
  out << "index,a,a_prime,hidden_b,hidden_b_prime,selected_b,selected_b_prime,context\n";
  for (const CompositeSystem& w : e.elements) {
    out << w.source_index << ',' << w.a_val << ',' << w.a_prime_val << ',' << w.hidden_b.i << ','
        << w.hidden_b.j << ',';
    if (w.selected_b)
      out << w.selected_b->i << ',' << w.selected_b->j;
    else
      out << ',';
    out << ',' << w.a_val << w.a_prime_val << '\n';
  }
  return out.str();
}

}  // namespace eprsim
