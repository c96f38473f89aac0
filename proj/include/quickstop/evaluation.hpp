#pragma once

#include <span>
#include <vector>

#include "quickstop/detector.hpp"
#include "quickstop/policy.hpp"
#include "quickstop/simulator.hpp"
#include "quickstop/types.hpp"

namespace quickstop {

struct MetricsCounts {
  long traces = 0;
  long news = 0;
  long misinformation = 0;
  long correct = 0;
  long false_positives = 0;
  long false_negatives = 0;
  long forced = 0;
  long declared_news = 0;
  long declared_misinformation = 0;

  friend bool operator==(const MetricsCounts&, const MetricsCounts&) = default;
};

/// Detection times average T over traces declared news (resp.
/// misinformation) and are NaN when no trace received that verdict.
struct MetricsReport {
  double accuracy = 0.0;
  double false_positive_rate = 0.0;
  double false_negative_rate = 0.0;
  double mean_detection_time_news = 0.0;
  double mean_detection_time_misinformation = 0.0;
  double forced_decision_fraction = 0.0;
  double mean_realized_cost = 0.0;
  MetricsCounts counts;
};

/// Runs the detector over labeled class-bearing traces. Realized cost per
/// trace: c_I on a false positive, c_II on a false negative, plus c T when
/// the trace is misinformation.
MetricsReport evaluate(const Policy& policy, std::span<const Trace> traces, double prior);

struct OracleResult {
  int horizon = 0;
  double optimal_cost = 0.0;     // best stopping rule forced to stop by the horizon
  double policy_cost = 0.0;      // threshold policy, also forced to stop at the horizon
  double gap = 0.0;              // policy_cost - optimal_cost
  double forced_probability = 0.0;  // Pr(threshold policy still running at the horizon)
  // Upper bound on what forcing the threshold policy to stop can cost:
  // forced_probability * max g.
  double truncation_slack = 0.0;
};

/// Exact backward induction over every class history of length <= horizon.
/// Requires C^horizon <= 1e7.
OracleResult brute_force_optimal(const Policy& policy, double prior, int horizon);

struct CostSweepRow {
  double step_cost;
  MetricsReport metrics;
};

/// Re-solves the policy for each c and evaluates it on the same traces.
std::vector<CostSweepRow> cost_sweep(const TransitionModel& model, const CostConfig& base,
                                     const std::vector<double>& step_costs,
                                     std::span<const Trace> traces, const SolverConfig& solver = {});

/// Labeled traces from the model's own generative mixture.
std::vector<Trace> sample_markov_mixture(const TransitionModel& model, int trace_count, int length,
                                         double prior, std::uint64_t seed);

struct NoiseSweepConfig {
  SyntheticConfig synthetic;
  CostConfig costs{10.0, 10.0, 0.3, 0.5};
  SolverConfig solver;
  double smoothing = 1.0;
  std::vector<double> misclass_probs{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
};

struct NoiseSweepRow {
  double misclass_prob;
  MetricsReport metrics;
  TransitionModel model;
  PolicyThresholds thresholds;
};

/// End-to-end synthetic pipeline per noise level: simulate a training and
/// a test set on one network, inject classification noise into both,
/// estimate transitions from the noisy training set, solve, evaluate.
/// Base traces and per-event noise draws are shared across levels.
std::vector<NoiseSweepRow> noise_sweep(const NoiseSweepConfig& config);

}  // namespace quickstop
