#include <doctest.h>

#include <cmath>

#include "quickstop/belief.hpp"
#include "quickstop/detector.hpp"
#include "quickstop/fixtures.hpp"
#include "support.hpp"

using namespace quickstop;
using quickstop::testing::random_classes;

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

// First index (1-based edge count) at which the log-odds path leaves the
// continuation region; 0 if it never does.
long llr_stopping_time(const Policy& p, double prior, const ClassEvents& seq) {
  const double base = std::log(prior / (1.0 - prior));
  for (std::size_t k = 1; k <= seq.size(); ++k) {
    const std::span<const EdgeClass> prefix(seq.data(), k);
    const double odds = base + log_likelihood_ratio(prefix, p.model);
    const double pi = 1.0 / (1.0 + std::exp(-odds));
    const int z = seq[k - 1].value();
    if (pi >= p.thresholds.upper[z] || pi <= p.thresholds.lower[z]) return static_cast<long>(k);
  }
  return 0;
}

}  // namespace

TEST_CASE("new detector") {
  const Policy p = weibo_policy(0.05);
  const auto s = new_detector(p, 0.5);
  CHECK(s.belief == 0.5);
  CHECK(s.running());
  CHECK(s.observations == 0);
  CHECK(s.last_class == -1);
  CHECK(new_detector(p, 0.37).belief == 0.37);
  CHECK_THROWS_AS(new_detector(p, 0.0), InvalidArgument);
  CHECK_THROWS_AS(new_detector(p, 1.0), InvalidArgument);
}

TEST_CASE("collapsed thresholds decide on the first event") {
  const Policy p = collapsed_policy();
  auto s = observe(p, new_detector(p, 0.6), EdgeClass(0));
  CHECK(s.status == DetectorStatus::DeclaredMisinformation);
  CHECK(s.observations == 1);

  RandomStream rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto seq = random_classes(4, 1 + static_cast<int>(rng.below(30)), rng);
    const double prior = 0.05 + 0.9 * rng.uniform();
    const auto out = run_trace(p, prior, seq);
    REQUIRE(std::holds_alternative<Verdict>(out));
    const auto& v = std::get<Verdict>(out);
    CHECK(v.stopping_time == 1);
    CHECK(v.decision == (prior >= 0.5 ? Hypothesis::Misinformation : Hypothesis::News));
  }
}

TEST_CASE("repeated class 3 raises belief until misinformation is declared") {
  const Policy p = weibo_policy(0.05);
  const ClassEvents seq(200, EdgeClass(3));
  auto s = new_detector(p, 0.5);
  s = observe(p, s, seq[0]);
  CHECK(s.belief == 0.5);
  long k = 1;
  while (s.running()) {
    const double before = s.belief;
    s = observe(p, s, seq[k]);
    ++k;
    CHECK(s.belief > before);
    const std::span<const EdgeClass> prefix(seq.data(), k);
    CHECK(s.belief == doctest::Approx(posterior_batch(0.5, prefix, p.model)).epsilon(1e-12));
  }
  CHECK(s.status == DetectorStatus::DeclaredMisinformation);
  CHECK(s.observations == llr_stopping_time(p, 0.5, seq));
}

TEST_CASE("class 0 runs take longer to clear than class 3 runs take to flag") {
  // At c = 0.8 the news thresholds are strictly positive.
  const Policy p = weibo_policy(0.8);
  REQUIRE(p.thresholds.lower[0] > 0.0);
  const ClassEvents news(200, EdgeClass(0));
  const ClassEvents mis(200, EdgeClass(3));
  const Verdict vn = decide_trace(p, 0.5, news);
  const Verdict vm = decide_trace(p, 0.5, mis);
  CHECK(vn.decision == Hypothesis::News);
  CHECK_FALSE(vn.forced);
  CHECK(vm.decision == Hypothesis::Misinformation);
  CHECK_FALSE(vm.forced);
  CHECK(vn.stopping_time == llr_stopping_time(p, 0.5, news));
  CHECK(vm.stopping_time == llr_stopping_time(p, 0.5, mis));
  CHECK(vn.stopping_time > vm.stopping_time);
}

TEST_CASE("cheap observations never clear news from evidence alone") {
  // The optimal news threshold at c = 0.05 is below the grid resolution.
  const Policy p = weibo_policy(0.05);
  for (int z = 0; z < 4; ++z) CHECK(p.thresholds.lower[z] == 0.0);
  const ClassEvents news(200, EdgeClass(0));
  const auto out = run_trace(p, 0.5, news);
  REQUIRE(std::holds_alternative<Undecided>(out));
  const Verdict v = verdict_of(p, std::get<Undecided>(out).state);
  CHECK(v.forced);
  CHECK(v.decision == Hypothesis::News);
  CHECK(v.stopping_time == 200);
}

TEST_CASE("empty trace stays undecided at the prior") {
  const Policy p = weibo_policy(0.05);
  const auto out = run_trace(p, 0.3, ClassEvents{});
  REQUIRE(std::holds_alternative<Undecided>(out));
  const auto& s = std::get<Undecided>(out).state;
  CHECK(s.belief == 0.3);
  CHECK(s.observations == 0);
  CHECK(s.running());
}

TEST_CASE("terminal states are final") {
  const Policy p = collapsed_policy();
  const auto s = observe(p, new_detector(p, 0.6), EdgeClass(2));
  CHECK_THROWS_AS(observe(p, s, EdgeClass(2)), InvalidArgument);
  CHECK_THROWS_AS(observe(p, new_detector(p, 0.6), EdgeClass(4)), InvalidArgument);
}

TEST_CASE("verdicts respect the thresholds on random traces") {
  RandomStream rng(5);
  const Policy policies[] = {weibo_policy(0.05), weibo_policy(0.3), weibo_policy(0.8)};
  for (int i = 0; i < 10000; ++i) {
    const Policy& p = policies[i % 3];
    const auto seq = random_classes(4, 1 + static_cast<int>(rng.below(80)), rng);
    const auto out = run_trace(p, 0.5, seq);
    if (const auto* v = std::get_if<Verdict>(&out)) {
      const int z = seq[v->stopping_time - 1].value();
      if (v->decision == Hypothesis::Misinformation) {
        REQUIRE(v->final_belief >= p.thresholds.upper[z]);
      } else {
        REQUIRE(v->final_belief <= p.thresholds.lower[z]);
        REQUIRE(v->final_belief < p.thresholds.upper[z]);
      }
      CHECK_FALSE(v->forced);
    } else {
      const auto& s = std::get<Undecided>(out).state;
      REQUIRE(s.observations == static_cast<long>(seq.size()));
      const int z = seq.back().value();
      REQUIRE(s.belief > p.thresholds.lower[z]);
      REQUIRE(s.belief < p.thresholds.upper[z]);
    }
  }
}

TEST_CASE("replay determinism and batch agreement") {
  RandomStream rng(7);
  const Policy p = weibo_policy(0.3);
  for (int i = 0; i < 500; ++i) {
    const auto seq = random_classes(4, 1 + static_cast<int>(rng.below(60)), rng);
    const double prior = 0.2 + 0.6 * rng.uniform();
    auto s = new_detector(p, prior);
    std::size_t k = 0;
    while (k < seq.size() && s.running()) {
      s = observe(p, s, seq[k]);
      ++k;
      REQUIRE(s.observations == static_cast<long>(k));
      const std::span<const EdgeClass> prefix(seq.data(), k);
      REQUIRE(std::abs(s.belief - posterior_batch(prior, prefix, p.model)) <= 1e-9);
    }
    const auto out = run_trace(p, prior, seq);
    if (s.running()) {
      REQUIRE(std::holds_alternative<Undecided>(out));
      CHECK(std::get<Undecided>(out).state == s);
    } else {
      REQUIRE(std::holds_alternative<Verdict>(out));
      CHECK(std::get<Verdict>(out) == verdict_of(p, s));
    }
    CHECK(decide_trace(p, prior, seq) == decide_trace(p, prior, seq));
  }
}

TEST_CASE("detector state has constant size") {
  static_assert(std::is_trivially_copyable_v<DetectorState>);
  static_assert(sizeof(DetectorState) <= 32);
  const Policy p = weibo_policy(0.05);
  const ClassEvents seq(5000, EdgeClass(1));
  const auto out = run_trace(p, 0.5, seq);
  if (const auto* u = std::get_if<Undecided>(&out)) CHECK(u->state.observations == 5000);
}
