#include <doctest.h>

#include <cmath>

#include "quickstop/evaluation.hpp"
#include "quickstop/fixtures.hpp"
#include "quickstop/io.hpp"
#include "support.hpp"

using namespace quickstop;
using quickstop::testing::class_trace;
using quickstop::testing::classes;
using quickstop::testing::random_model;

namespace {

Policy weibo_policy(double c) {
  return make_policy(fixtures::weibo_model(), CostConfig{10.0, 10.0, c, 0.5});
}

Policy collapsed_policy() {
  Policy p;
  p.model = fixtures::weibo_model();
  p.thresholds.lower.assign(4, 0.5);
  p.thresholds.upper.assign(4, 0.5);
  return p;
}

void check_identities(const MetricsReport& m) {
  const auto& n = m.counts;
  CHECK(n.news + n.misinformation == n.traces);
  CHECK(n.declared_news + n.declared_misinformation == n.traces);
  CHECK(n.correct + n.false_positives + n.false_negatives == n.traces);
  CHECK(m.false_positive_rate * n.news + m.false_negative_rate * n.misinformation + n.correct ==
        doctest::Approx(static_cast<double>(n.traces)));
  CHECK(m.accuracy == doctest::Approx(1.0 - (m.false_positive_rate * n.news +
                                             m.false_negative_rate * n.misinformation) /
                                                n.traces));
  for (double r : {m.accuracy, m.false_positive_rate, m.false_negative_rate, m.forced_decision_fraction}) {
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

}  // namespace

TEST_CASE("all-correct toy set") {
  const Policy p = weibo_policy(0.8);
  const std::vector<Trace> traces{
      class_trace("m1", Hypothesis::Misinformation, ClassEvents(30, EdgeClass(3))),
      class_trace("m2", Hypothesis::Misinformation, ClassEvents(30, EdgeClass(3))),
      class_trace("n1", Hypothesis::News, ClassEvents(30, EdgeClass(0)))};
  const auto m = evaluate(p, traces, 0.5);
  CHECK(m.accuracy == 1.0);
  CHECK(m.false_positive_rate == 0.0);
  CHECK(m.false_negative_rate == 0.0);
  CHECK(m.counts.forced == 0);
  check_identities(m);
  const double t_mis = static_cast<double>(decide_trace(p, 0.5, traces[0].classes()).stopping_time);
  CHECK(m.mean_detection_time_misinformation == t_mis);
  CHECK(m.mean_realized_cost == doctest::Approx(2.0 * 0.8 * t_mis / 3.0));
}

TEST_CASE("collapsed policy decides every trace on its first event") {
  const auto traces = sample_markov_mixture(fixtures::weibo_model(), 300, 20, 0.5, 3);
  for (double prior : {0.4, 0.6}) {
    const auto m = evaluate(collapsed_policy(), traces, prior);
    const bool says_mis = prior >= 0.5;
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(says_mis ? m.counts.misinformation
                                                                     : m.counts.news) /
                                        m.counts.traces));
    if (says_mis) {
      CHECK(m.mean_detection_time_misinformation == 1.0);
      CHECK(std::isnan(m.mean_detection_time_news));
    } else {
      CHECK(m.mean_detection_time_news == 1.0);
      CHECK(std::isnan(m.mean_detection_time_misinformation));
    }
    check_identities(m);
  }
}

TEST_CASE("evaluation errors") {
  const Policy p = weibo_policy(0.3);
  CHECK_THROWS_AS(evaluate(p, std::vector<Trace>{}, 0.5), DataError);
  Trace unlabeled = class_trace("u", Hypothesis::News, classes({0, 1}));
  unlabeled.label.reset();
  CHECK_THROWS_AS(evaluate(p, std::vector<Trace>{unlabeled}, 0.5), DataError);
}

TEST_CASE("misinformation is flagged faster than news is cleared") {
  const auto traces = sample_markov_mixture(fixtures::weibo_model(), 2000, 200, 0.5, 21);
  const auto m = evaluate(weibo_policy(0.05), traces, 0.5);
  check_identities(m);
  CHECK(m.mean_detection_time_misinformation < m.mean_detection_time_news);
  CHECK(m.false_negative_rate <= m.false_positive_rate);
  CHECK(m.accuracy > 0.9);
}

TEST_CASE("oracle at horizon one") {
  const Policy p = weibo_policy(0.05);
  for (double prior : {0.2, 0.5, 0.7}) {
    const auto r = brute_force_optimal(p, prior, 1);
    const double expected = p.costs.terminal_cost(prior) + p.costs.step * prior;
    CHECK(r.optimal_cost == doctest::Approx(expected).epsilon(1e-14));
    CHECK(r.policy_cost == doctest::Approx(expected).epsilon(1e-14));
    CHECK(r.gap == doctest::Approx(0.0));
  }
}

TEST_CASE("oracle with prohibitive observation cost") {
  const Policy p = make_policy(fixtures::weibo_model(), CostConfig{10.0, 10.0, 1e4, 0.5});
  const auto r = brute_force_optimal(p, 0.3, 5);
  CHECK(r.gap == 0.0);
  CHECK(r.forced_probability == 0.0);
  CHECK(r.optimal_cost == doctest::Approx(10.0 * 0.3 + 1e4 * 0.3));
}

TEST_CASE("threshold policy is near-optimal on random binary models") {
  RandomStream rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(2, rng);
    const CostConfig costs{10.0, 10.0, 0.2 + 0.8 * rng.uniform(), 0.5};
    const Policy p = make_policy(m, costs);
    const auto r = brute_force_optimal(p, 0.5, 8);
    CHECK(r.gap >= -1e-9);
    CHECK(r.gap <= 5 * p.solver.grid_step * 10.0 + r.truncation_slack + 1e-12);
    CHECK(r.forced_probability >= 0.0);
    CHECK(r.forced_probability <= 1.0 + 1e-12);
  }
}

TEST_CASE("oracle dominance") {
  RandomStream rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(2));
    const auto m = random_model(c, rng);
    Policy p = make_policy(m, CostConfig{10.0, 10.0, rng.uniform(), 0.5}, SolverConfig{1e-2});
    // Arbitrary thresholds too: the optimum must dominate any rule.
    if (trial % 2) {
      for (int z = 0; z < c; ++z) {
        p.thresholds.lower[z] = 0.5 * rng.uniform();
        p.thresholds.upper[z] = 0.5 + 0.5 * rng.uniform();
      }
    }
    const auto r = brute_force_optimal(p, 0.1 + 0.8 * rng.uniform(), 6);
    CHECK(r.policy_cost >= r.optimal_cost - 1e-9);
  }
}

TEST_CASE("oracle horizon limits") {
  const Policy p = weibo_policy(0.3);
  CHECK_NOTHROW(brute_force_optimal(p, 0.5, 6));
  CHECK_THROWS_AS(brute_force_optimal(p, 0.5, 12), InvalidArgument);
  CHECK_THROWS_AS(brute_force_optimal(p, 0.5, 0), InvalidArgument);
  CHECK_THROWS_AS(brute_force_optimal(p, 1.0, 3), InvalidArgument);
}

TEST_CASE("realized cost estimates the horizon-truncated expected cost") {
  const int horizon = 6;
  const Policy p = weibo_policy(0.3);
  const auto oracle = brute_force_optimal(p, 0.5, horizon);
  const auto traces = sample_markov_mixture(p.model, 40000, horizon, 0.5, 5);
  const auto m = evaluate(p, traces, 0.5);
  // Per-trace realized cost is bounded by max(c_I, c_II) + c L.
  const double bound = 10.0 + 0.3 * horizon;
  const double tolerance = 4.0 * bound / std::sqrt(static_cast<double>(traces.size()));
  CHECK(std::abs(m.mean_realized_cost - oracle.policy_cost) < tolerance);
}

TEST_CASE("cost sweep") {
  const auto model = fixtures::weibo_model();
  const auto traces = sample_markov_mixture(model, 600, 100, 0.5, 31);
  const CostConfig base{10.0, 10.0, 0.05, 0.5};
  const auto rows = cost_sweep(model, base, {0.0, 0.1, 0.4, 1.2}, traces);
  REQUIRE(rows.size() == 4);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r].metrics.counts.traces == 600);
    // Narrower continuation region: every trace stops no later.
    const double t_prev = rows[r - 1].metrics.mean_detection_time_misinformation *
                              rows[r - 1].metrics.counts.declared_misinformation +
                          rows[r - 1].metrics.mean_detection_time_news *
                              rows[r - 1].metrics.counts.declared_news;
    const double t_cur = rows[r].metrics.mean_detection_time_misinformation *
                             rows[r].metrics.counts.declared_misinformation +
                         rows[r].metrics.mean_detection_time_news * rows[r].metrics.counts.declared_news;
    CHECK(t_cur <= t_prev);
  }
  for (const auto& row : rows) CHECK(rows[0].metrics.accuracy >= row.metrics.accuracy);

  std::ostringstream csv;
  io::write_cost_sweep_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(std::count(header.begin(), header.end(), ',') + 1 ==
        static_cast<long>(io::metrics_columns().size()) + 1);
  CHECK(header.rfind("c,", 0) == 0);
  int data_rows = 0;
  for (std::string line; std::getline(lines, line);) ++data_rows;
  CHECK(data_rows == 4);

  CHECK_THROWS_AS(cost_sweep(model, base, {}, traces), InvalidArgument);
}

TEST_CASE("noise sweep") {
  NoiseSweepConfig cfg;
  cfg.synthetic.trace_count = 300;
  cfg.misclass_probs = {0.0, 0.25, 0.5};
  const auto rows = noise_sweep(cfg);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].misclass_prob == cfg.misclass_probs[i]);
    CHECK(rows[i].metrics.counts.traces == 300);
    check_identities(rows[i].metrics);
  }
  CHECK(rows[0].metrics.accuracy >= rows[2].metrics.accuracy);
  // The clean model puts misinformation mass toward class 3.
  CHECK(rows[0].model.alpha1()(3, 3) > rows[0].model.alpha0()(3, 3));
  CHECK(rows[0].model.alpha0()(0, 0) > rows[0].model.alpha1()(0, 0));

  std::ostringstream csv;
  io::write_noise_sweep_csv(csv, rows);
  CHECK(csv.str().rfind("misclass_prob,", 0) == 0);
}
