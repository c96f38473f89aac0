#include "quickstop/evaluation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "quickstop/belief.hpp"
#include "quickstop/error.hpp"
#include "quickstop/random.hpp"
#include "quickstop/training.hpp"

namespace quickstop {

MetricsReport evaluate(const Policy& policy, std::span<const Trace> traces, double prior) {
  if (traces.empty()) throw DataError("no traces to evaluate");
  MetricsReport r;
  MetricsCounts& n = r.counts;
  double time_news = 0.0;
  double time_mis = 0.0;
  double cost = 0.0;
  const CostConfig& c = policy.costs;
  for (const Trace& t : traces) {
    if (!t.label) throw DataError("trace '" + t.id + "' has no label");
    if (!t.has_classes()) throw DataError("trace '" + t.id + "' is not classified");
    const Verdict v = decide_trace(policy, prior, t.classes());
    const bool truth_mis = *t.label == Hypothesis::Misinformation;
    const bool said_mis = v.decision == Hypothesis::Misinformation;
    ++n.traces;
    truth_mis ? ++n.misinformation : ++n.news;
    if (v.forced) ++n.forced;
    if (said_mis) {
      ++n.declared_misinformation;
      time_mis += static_cast<double>(v.stopping_time);
    } else {
      ++n.declared_news;
      time_news += static_cast<double>(v.stopping_time);
    }
    if (truth_mis == said_mis) {
      ++n.correct;
    } else if (said_mis) {
      ++n.false_positives;
      cost += c.type1;
    } else {
      ++n.false_negatives;
      cost += c.type2;
    }
    if (truth_mis) cost += c.step * static_cast<double>(v.stopping_time);
  }
  const double total = static_cast<double>(n.traces);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.accuracy = static_cast<double>(n.correct) / total;
  r.false_positive_rate = n.news ? static_cast<double>(n.false_positives) / n.news : 0.0;
  r.false_negative_rate = n.misinformation ? static_cast<double>(n.false_negatives) / n.misinformation : 0.0;
  r.mean_detection_time_news = n.declared_news ? time_news / n.declared_news : nan;
  r.mean_detection_time_misinformation =
      n.declared_misinformation ? time_mis / n.declared_misinformation : nan;
  r.forced_decision_fraction = static_cast<double>(n.forced) / total;
  r.mean_realized_cost = cost / total;
  return r;
}

namespace {

class HistoryTree {
 public:
  HistoryTree(const Policy& policy, int horizon) : policy_(policy), horizon_(horizon) {}

  double stop_cost(double pi, int k) const {
    return policy_.costs.terminal_cost(pi) + policy_.costs.step * k * pi;
  }

  // Optimal expected cost from state (pi, z) at time k, forced stop at horizon.
  double optimal(double pi, int z, int k) const {
    const double stop = stop_cost(pi, k);
    if (k == horizon_) return stop;
    double cont = 0.0;
    for (int zn = 0; zn < policy_.model.class_count(); ++zn) {
      const double p = predictive(pi, EdgeClass(z), EdgeClass(zn), policy_.model);
      if (!(p > 0.0)) continue;
      cont += p * optimal(posterior_step(pi, EdgeClass(z), EdgeClass(zn), policy_.model), zn, k + 1);
    }
    return std::fmin(stop, cont);
  }

  struct PolicyValue {
    double cost;
    double forced;  // probability of reaching the horizon still running
  };

  PolicyValue threshold(double pi, int z, int k) const {
    const auto& t = policy_.thresholds;
    const bool declares = pi >= t.upper[z] || pi <= t.lower[z];
    if (declares) return {stop_cost(pi, k), 0.0};
    if (k == horizon_) return {stop_cost(pi, k), 1.0};
    PolicyValue acc{0.0, 0.0};
    for (int zn = 0; zn < policy_.model.class_count(); ++zn) {
      const double p = predictive(pi, EdgeClass(z), EdgeClass(zn), policy_.model);
      if (!(p > 0.0)) continue;
      const PolicyValue child =
          threshold(posterior_step(pi, EdgeClass(z), EdgeClass(zn), policy_.model), zn, k + 1);
      acc.cost += p * child.cost;
      acc.forced += p * child.forced;
    }
    return acc;
  }

 private:
  const Policy& policy_;
  int horizon_;
};

}  // namespace

OracleResult brute_force_optimal(const Policy& policy, double prior, int horizon) {
  if (horizon < 1) throw InvalidArgument("oracle horizon must be at least 1");
  if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("oracle prior must lie in (0,1)");
  const int c = policy.model.class_count();
  if (horizon * std::log10(static_cast<double>(c)) > 7.0 + 1e-12) {
    throw InvalidArgument("oracle horizon too large: C^L exceeds 1e7");
  }
  HistoryTree tree(policy, horizon);
  OracleResult r;
  r.horizon = horizon;
  // Z_1 is uniform and leaves the belief at the prior.
  for (int z = 0; z < c; ++z) {
    r.optimal_cost += tree.optimal(prior, z, 1) / c;
    const auto v = tree.threshold(prior, z, 1);
    r.policy_cost += v.cost / c;
    r.forced_probability += v.forced / c;
  }
  r.gap = r.policy_cost - r.optimal_cost;
  const double g_max = policy.costs.type1 * policy.costs.type2 / (policy.costs.type1 + policy.costs.type2);
  r.truncation_slack = r.forced_probability * g_max;
  return r;
}

std::vector<CostSweepRow> cost_sweep(const TransitionModel& model, const CostConfig& base,
                                     const std::vector<double>& step_costs,
                                     std::span<const Trace> traces, const SolverConfig& solver) {
  if (step_costs.empty()) throw InvalidArgument("cost sweep needs at least one c value");
  std::vector<CostSweepRow> rows;
  rows.reserve(step_costs.size());
  for (double c : step_costs) {
    CostConfig costs = base;
    costs.step = c;
    const Policy policy = make_policy(model, costs, solver);
    rows.push_back({c, evaluate(policy, traces, costs.prior)});
  }
  return rows;
}

std::vector<Trace> sample_markov_mixture(const TransitionModel& model, int trace_count, int length,
                                         double prior, std::uint64_t seed) {
  if (trace_count < 1) throw InvalidArgument("trace count must be positive");
  RandomStream labels = RandomStream::derive(seed, 0x6d6978);
  std::vector<Trace> out;
  out.reserve(trace_count);
  for (int i = 0; i < trace_count; ++i) {
    const Hypothesis h = labels.bernoulli(prior) ? Hypothesis::Misinformation : Hypothesis::News;
    Trace t = sample_markov_trace(model, h, length, RandomStream::derive(seed, 1000 + i).next());
    t.id = "mix-" + std::to_string(i);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<NoiseSweepRow> noise_sweep(const NoiseSweepConfig& config) {
  config.synthetic.validate();
  config.costs.validate();
  const SyntheticNetwork network = generate_network(config.synthetic);
  const std::uint64_t seed = config.synthetic.seed;
  const auto train = simulate_cascades(network, config.synthetic, RandomStream::derive(seed, 0x747261).next());
  const auto test = simulate_cascades(network, config.synthetic, RandomStream::derive(seed, 0x746573).next());

  auto noisy = [&](const std::vector<SpreadTrace>& cascades, double p, std::uint64_t salt) {
    std::vector<Trace> out;
    out.reserve(cascades.size());
    for (std::size_t i = 0; i < cascades.size(); ++i) {
      const Trace clean = to_trace(cascades[i], std::to_string(i));
      out.push_back(inject_noise(clean, p, 4, RandomStream::derive(seed ^ salt, i).next()));
    }
    return out;
  };

  std::vector<NoiseSweepRow> rows;
  for (double p : config.misclass_probs) {
    const auto train_set = noisy(train, p, 0x6e31);
    const auto test_set = noisy(test, p, 0x6e32);
    const TrainingReport report = estimate_transitions(train_set, 4, config.smoothing);
    if (!report.model) throw DataError("noisy training set leaves transition rows undefined");
    Policy policy = make_policy(*report.model, config.costs, config.solver);
    rows.push_back({p, evaluate(policy, test_set, config.costs.prior), policy.model, policy.thresholds});
  }
  return rows;
}

}  // namespace quickstop
