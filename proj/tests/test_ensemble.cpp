#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "eprsim/ensemble.hpp"
#include "eprsim/rng.hpp"

using namespace eprsim;

namespace {
constexpr double pi = std::numbers::pi;

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }
}  // namespace

TEST_CASE("substream derivation follows the documented rule") {
  // stream id n is seeded with the (n+1)-th output of the master generator
  CHECK(derive_seed(0, 0) == SplitMix64(0).next());
  SplitMix64 root(42);
  root.next();
  const std::uint64_t second_output = root.next();
  CHECK(derive_seed(42, 1) == second_output);
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(stream::selection(1, 2) == 3);
  CHECK(stream::selection(2, 1) == 4);
}

TEST_CASE("sampling determinism and marginals") {
  const ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));

  SUBCASE("identical seeds reproduce the ensemble element-for-element") {
    const SampledEnsemble a = sample_source(m, 4096, 777);
    const SampledEnsemble b = sample_source(m, 4096, 777);
    CHECK(a.elements == b.elements);
    const SampledEnsemble c = sample_source(m, 4096, 778);
    CHECK(a.elements != c.elements);
  }

  SUBCASE("anticorrelated settings never emit equal setting outcomes") {
    const SampledEnsemble src = sample_source(m, 65536, 1);
    for (const CompositeSystem& w : src.elements) CHECK(w.a_val != w.a_prime_val);
  }

  SUBCASE("setting frequency within 3 sigma at M = 10^6") {
    const SampledEnsemble src = sample_source(m, 1000000, 2);
    std::size_t n12 = 0;
    for (const CompositeSystem& w : src.elements) n12 += w.a_val == 1;
    const double nu = static_cast<double>(n12) / 1e6;
    CHECK(close(nu, 0.5, 0.002));  // 3 sigma = 3 * (1/2) / sqrt(M) = 0.0015, rounded up
  }
}

TEST_CASE("context selection") {
  const ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));
  const SampledEnsemble src = sample_source(m, 1 << 20, 3);

  SUBCASE("empty context under anticorrelation") {
    CHECK_THROWS_AS(select_context(src, SettingPair(1, 1), m, 3), EmptyContext);
  }

  SUBCASE("count identity and context purity") {
    for (const SettingPair kl : {SettingPair(1, 2), SettingPair(2, 1)}) {
      const auto [hidden, selected] = select_context(src, kl, m, 3);
      CHECK(hidden.size() == selected.size());
      CHECK(hidden.kind == EnsembleKind::HiddenSub);
      CHECK(selected.kind == EnsembleKind::Selected);
      for (const CompositeSystem& w : hidden.elements) {
        CHECK(w.a_val == kl.k);
        CHECK(w.a_prime_val == kl.l);
        CHECK_FALSE(w.selected_b.has_value());
      }
      for (const CompositeSystem& w : selected.elements) CHECK(w.selected_b.has_value());
    }
  }

  SUBCASE("selected frequencies follow the product table, hidden ones the target") {
    // at gamma = gamma' = pi/2 the product table is uniform; the target
    // unconditional table has exact zeros on the diagonal
    const auto [hidden, selected] = select_context(src, SettingPair(1, 2), m, 3);
    const ProbabilityTable sel_freq = frequency_table(selected, WhichOutcome::Selected);
    CHECK(close(sel_freq(1, 1), 0.25, 0.0013 * 2));  // ~3 sigma at M/2 elements
    const ProbabilityTable hid_freq = frequency_table(hidden, WhichOutcome::Hidden);
    CHECK(hid_freq(1, 1) == 0.0);
    CHECK(hid_freq(2, 2) == 0.0);
    CHECK(close(hid_freq(1, 2), 0.5, 0.004));
  }

  SUBCASE("selection refuses non-source input") {
    const auto [hidden, selected] = select_context(src, SettingPair(1, 2), m, 3);
    CHECK_THROWS_AS(select_context(hidden, SettingPair(1, 2), m, 3), DomainError);
  }
}

TEST_CASE("frequency tables") {
  const ContextualModel m = epr_model(EPRScenario(0.0, pi / 2));

  SUBCASE("indicator for constant ensembles") {
    SampledEnsemble e;
    for (std::uint64_t n = 0; n < 4; ++n)
      e.elements.push_back(CompositeSystem{n, 1, 2, OutcomePair(1, 2), std::nullopt});
    const ProbabilityTable f = frequency_table(e, WhichOutcome::Hidden);
    CHECK(f(1, 2) == 1.0);
    CHECK(f(1, 1) == 0.0);
  }

  SUBCASE("single element is an indicator") {
    const SampledEnsemble one = sample_source(m, 1, 9);
    const ProbabilityTable f = frequency_table(one, WhichOutcome::Hidden);
    CHECK(close(f.grid().sum(), 1.0, 0.0));
  }

  SUBCASE("selected outcomes unavailable on a source ensemble") {
    const SampledEnsemble src = sample_source(m, 16, 9);
    CHECK_THROWS_AS(frequency_table(src, WhichOutcome::Selected), DomainError);
  }

  SUBCASE("hidden table converges to the closed form (3 sigma, M = 2^20)") {
    const SampledEnsemble src = sample_source(m, 1 << 20, 10);
    const ProbabilityTable f = frequency_table(src, WhichOutcome::Hidden);
    for (auto [i, j] : kIndexPairs) CHECK(close(f(i, j), 0.25, 0.0013));
  }
}

TEST_CASE("Bayes counting identity holds exactly on finite ensembles") {
  const ContextualModel m = epr_model(EPRScenario(pi / 3, 5 * pi / 7));
  const SampledEnsemble src = sample_source(m, 40000, 11);
  const ProbabilityTable overall = frequency_table(src, WhichOutcome::Hidden);
  Grid2x2 mixture;
  for (const SettingPair kl : {SettingPair(1, 2), SettingPair(2, 1)}) {
    const auto [hidden, selected] = select_context(src, kl, m, 11);
    const ProbabilityTable part = frequency_table(hidden, WhichOutcome::Hidden);
    const double nu_a = static_cast<double>(hidden.size()) / static_cast<double>(src.size());
    for (auto [i, j] : kIndexPairs) mixture(i, j) += nu_a * part(i, j);
  }
  for (auto [i, j] : kIndexPairs) CHECK(close(mixture(i, j), overall(i, j), 1e-14));
}

TEST_CASE("hidden allocation feasibility") {
  const ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));
  const ProbabilityTable target = apply_phases(m);

  SUBCASE("default shared allocation reproduces the target trivially") {
    const HiddenAllocation alloc = HiddenAllocation::shared(target);
    CHECK(alloc.table(SettingPair(1, 2))(1, 2) == target(1, 2));
  }

  SUBCASE("feasible per-context split passes and samples correctly") {
    // move diagonal-free mass around while keeping the symmetric mixture
    const ProbabilityTable up = ProbabilityTable::checked(Grid2x2::of(0.0, 0.6, 0.4, 0.0));
    const ProbabilityTable down = ProbabilityTable::checked(Grid2x2::of(0.0, 0.4, 0.6, 0.0));
    ContextTables tables;
    tables.set(SettingPair(1, 2), up);
    tables.set(SettingPair(2, 1), down);
    const HiddenAllocation alloc = HiddenAllocation::per_context(m.settings, tables, target);
    const SampledEnsemble src = sample_source(m, 1 << 18, 12, alloc);
    const ProbabilityTable f = frequency_table(src, WhichOutcome::Hidden);
    CHECK(close(f(1, 2), 0.5, 0.005));
    CHECK(f(1, 1) == 0.0);
  }

  SUBCASE("infeasible split is rejected with the mixture mismatch") {
    const ProbabilityTable biased = ProbabilityTable::checked(Grid2x2::of(0.0, 0.6, 0.4, 0.0));
    ContextTables tables;
    tables.set(SettingPair(1, 2), biased);
    tables.set(SettingPair(2, 1), biased);
    CHECK_THROWS_AS(HiddenAllocation::per_context(m.settings, tables, target),
                    InfeasibleHiddenAllocation);
  }
}

TEST_CASE("stabilization test") {
  SUBCASE("constant trace stabilizes at the constant") {
    FrequencyTrace t{"const", {}};
    for (int n = 6; n <= 12; ++n) t.points.push_back({std::uint64_t{1} << n, 0.37});
    const Verdict v = stabilization_test(t, 0.01, 3);
    CHECK(v.kind == Verdict::Kind::Stabilizes);
    CHECK(v.limit == 0.37);
  }

  SUBCASE("alternating trace fluctuates with the visited band") {
    FrequencyTrace t{"alt", {}};
    for (int n = 6; n <= 12; ++n)
      t.points.push_back({std::uint64_t{1} << n, n % 2 == 0 ? 0.3 : 0.1});
    const Verdict v = stabilization_test(t, 0.01, 3);
    CHECK(v.kind == Verdict::Kind::Fluctuates);
    CHECK(v.band_min == 0.1);
    CHECK(v.band_max == 0.3);
  }

  SUBCASE("too few checkpoints") {
    FrequencyTrace t{"short", {{64, 0.5}, {128, 0.5}}};
    CHECK_THROWS_AS(stabilization_test(t, 0.01, 3), DomainError);
  }

  SUBCASE("non-increasing checkpoints rejected") {
    FrequencyTrace t{"bad", {{64, 0.5}, {64, 0.5}, {128, 0.5}, {256, 0.5}}};
    CHECK_THROWS_AS(stabilization_test(t, 0.01, 3), DomainError);
  }

  SUBCASE("Bernoulli counting trace stabilizes at one half") {
    SplitMix64 rng(0x5eed0009);
    FrequencyTrace t{"bernoulli", {}};
    std::uint64_t ones = 0;
    const auto checkpoints = dyadic_checkpoints(1 << 20);
    std::size_t next = 0;
    for (std::uint64_t n = 0; n < (1u << 20); ++n) {
      ones += rng.next_unit() < 0.5;
      if (next < checkpoints.size() && n + 1 == checkpoints[next]) {
        t.points.push_back({n + 1, static_cast<double>(ones) / static_cast<double>(n + 1)});
        ++next;
      }
    }
    const Verdict v = stabilization_test(t, 0.01, 3);
    CHECK(v.kind == Verdict::Kind::Stabilizes);
    CHECK(close(v.limit, 0.5, 0.01));
  }
}

TEST_CASE("empirical disturbance recovers the closed-form coefficients") {
  SUBCASE("maximal entanglement at gamma = gamma' = pi/2") {
    const ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));
    const EmpiricalDisturbance emp = empirical_disturbance(m, 1 << 20, 13);
    CHECK(close(emp.lambda_hat(1, 1), -1.0, 0.02));
    CHECK(close(emp.lambda_hat(1, 2), +1.0, 0.02));
    CHECK(close(emp.lambda_hat(2, 1), +1.0, 0.02));
    CHECK(close(emp.lambda_hat(2, 2), -1.0, 0.02));
    // delta(11) -> -(1/4) sin(gamma) sin(gamma') = -1/4
    CHECK(close(emp.delta_final(1, 1), -0.25, 0.005));
    CHECK(close(emp.delta_final(1, 2), +0.25, 0.005));
    double sum = 0.0;
    for (auto [i, j] : kIndexPairs) sum += emp.delta_final(i, j);
    CHECK(close(sum, 0.0, 1e-12));
  }

  SUBCASE("classical model shows only sampling noise") {
    ContextualModel m = epr_model(EPRScenario(pi / 2, 2 * pi / 5));
    m.phases = PhaseMatrix::from_lambda(Grid2x2{});  // lambda = 0: hidden = mixture
    const EmpiricalDisturbance emp = empirical_disturbance(m, 1 << 20, 14);
    for (auto [i, j] : kIndexPairs) {
      CHECK(close(emp.lambda_hat(i, j), 0.0, 0.02));
      CHECK(close(emp.delta_final(i, j), 0.0, 0.005));
    }
  }

  SUBCASE("checkpoint series is dyadic and deterministic") {
    const ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));
    const EmpiricalDisturbance a = empirical_disturbance(m, 1 << 12, 15);
    const EmpiricalDisturbance b = empirical_disturbance(m, 1 << 12, 15);
    CHECK(a.checkpoints == dyadic_checkpoints(1 << 12));
    CHECK(a.delta_series[0] == b.delta_series[0]);
  }

  SUBCASE("preconditions") {
    ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));
    CHECK_THROWS_AS(empirical_disturbance(m, 32, 16), DomainError);
    m.settings = SettingDistribution::from_probabilities(Grid2x2::of(0.5, 0.0, 0.0, 0.5));
    CHECK_THROWS_AS(empirical_disturbance(m, 1 << 10, 16), DomainError);
  }
}

TEST_CASE("stabilizing frequencies land within 4 sigma in at least 99 of 100 seeds") {
  const std::size_t M = std::size_t{1} << 16;
  const EPRScenario s(pi / 3, 2 * pi / 3);
  const ContextualModel m = epr_model(s);
  const ProbabilityTable target = epr_probabilities(s);

  auto four_sigma = [&](double p) { return 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(M)); };

  int good_seeds = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const SampledEnsemble src = sample_source(m, M, derive_seed(0x5eed000b, seed));
    const ProbabilityTable freq = frequency_table(src, WhichOutcome::Hidden);
    bool ok = true;
    for (auto [i, j] : kIndexPairs)
      ok = ok && std::abs(freq(i, j) - target(i, j)) < four_sigma(target(i, j));
    std::size_t n12 = 0;
    for (const CompositeSystem& w : src.elements) n12 += w.a_val == 1;
    ok = ok && std::abs(static_cast<double>(n12) / static_cast<double>(M) - 0.5) < four_sigma(0.5);
    good_seeds += ok;
  }
  CHECK(good_seeds >= 99);
}

TEST_CASE("correlated classical models sample against the plain mixture") {
  ContextualModel m = epr_model(EPRScenario(pi / 3, pi / 5));
  m.settings = SettingDistribution::from_probabilities(Grid2x2::of(0.25, 0.25, 0.25, 0.25));
  m.scenario.reset();

  SUBCASE("nonzero coefficients have no target") {
    CHECK_THROWS_AS(sample_source(m, 128, 30), DomainError);
  }

  SUBCASE("zero coefficients fall back to the total-probability mixture") {
    m.phases = PhaseMatrix::from_lambda(Grid2x2{});
    const ProbabilityTable mixture = classical_total_probability(
        m.settings, ContextTables::product(m.transition, m.transition_prime));
    const SampledEnsemble src = sample_source(m, 1 << 18, 30);
    const ProbabilityTable freq = frequency_table(src, WhichOutcome::Hidden);
    for (auto [i, j] : kIndexPairs) CHECK(close(freq(i, j), mixture(i, j), 0.005));
    // all four contexts are populated and selectable
    for (auto [k, l] : kIndexPairs) {
      const auto [hidden, selected] = select_context(src, SettingPair(k, l), m, 30);
      CHECK(hidden.size() == selected.size());
      CHECK(hidden.size() > 0);
    }
  }
}

TEST_CASE("fluctuating quadruple source") {
  const QuadrupleSchedulePair pair = QuadrupleSchedulePair::default_pair();

  SUBCASE("default pair satisfies the marginal match") { pair.validate(); }

  SUBCASE("marginal mismatch is rejected and named") {
    QuadrupleSchedulePair bad = pair;
    bad.qb_12 = ProbabilityTable::checked(Grid2x2::of(0.3, 0.3, 0.2, 0.2));
    try {
      bad.validate();
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("marginal mismatch") != std::string::npos);
    }
  }

  SUBCASE("identical schedules stabilize everything (degenerate case)") {
    QuadrupleSchedulePair same = pair;
    same.qb_12 = same.qa_12;
    same.qb_21 = same.qa_21;
    const FluctuationDemo demo = run_fluctuation_demo(same, 1 << 18, 17, 0.01, 3);
    for (const NamedTrace& t : demo.traces)
      CHECK(t.verdict.kind == Verdict::Kind::Stabilizes);
  }

  SUBCASE("default pair: quadruple fluctuates, observables stabilize") {
    const FluctuationDemo demo = run_fluctuation_demo(pair, 1 << 18, 18, 0.01, 3);
    REQUIRE(!demo.traces.empty());
    const NamedTrace& quad = demo.traces.front();
    CHECK(quad.quadruple);
    CHECK(quad.trace.target == "nu_ba(1112)");
    CHECK(quad.verdict.kind == Verdict::Kind::Fluctuates);
    CHECK(quad.verdict.band_max - quad.verdict.band_min >= 0.05);
    for (std::size_t n = 1; n < demo.traces.size(); ++n)
      CHECK(demo.traces[n].verdict.kind == Verdict::Kind::Stabilizes);
  }

  SUBCASE("source is deterministic per seed") {
    const SampledEnsemble a = fluctuating_quadruple_source(pair, 4096, 19);
    const SampledEnsemble b = fluctuating_quadruple_source(pair, 4096, 19);
    CHECK(a.elements == b.elements);
  }
}

TEST_CASE("ensemble CSV export") {
  const ContextualModel m = epr_model(EPRScenario(pi / 2, pi / 2));
  const SampledEnsemble src = sample_source(m, 8, 20);
  const std::string csv = ensemble_csv(src);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "index,a,a_prime,hidden_b,hidden_b_prime,selected_b,selected_b_prime,context");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 8);
  CHECK(ensemble_csv(src) == csv);  // byte-stable

  const auto [hidden, selected] = select_context(src, SettingPair(1, 2), m, 20);
  const std::string sel_csv = ensemble_csv(selected);
  CHECK(sel_csv.find(",,") == std::string::npos);  // selected columns filled
}
