#pragma once

#include <span>
#include <type_traits>
#include <variant>

#include "quickstop/policy.hpp"
#include "quickstop/types.hpp"

namespace quickstop {

enum class DetectorStatus { Running, DeclaredNews, DeclaredMisinformation };

/// Entire online state of one trace: belief, latest class, event count.
struct DetectorState {
  double belief = 0.5;
  int last_class = -1;  // -1 until the first event
  long observations = 0;
  DetectorStatus status = DetectorStatus::Running;

  bool running() const noexcept { return status == DetectorStatus::Running; }

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

static_assert(std::is_trivially_copyable_v<DetectorState>);

struct Verdict {
  Hypothesis decision = Hypothesis::News;
  long stopping_time = 0;  // number of observed edges
  double final_belief = 0.0;
  // Trace ended inside the continuation region; decided by the terminal rule.
  bool forced = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct Undecided {
  DetectorState state;
};

using TraceOutcome = std::variant<Verdict, Undecided>;

DetectorState new_detector(const Policy& policy, double prior);

/// Consumes one edge class. The first event only records the class; later
/// events apply the Bayes update before the threshold test.
DetectorState observe(const Policy& policy, const DetectorState& state, EdgeClass z);

/// Verdict for a terminal state, or the terminal-rule decision for a
/// running one (declare misinformation iff belief >= c_I/(c_I+c_II)).
Verdict verdict_of(const Policy& policy, const DetectorState& state);

TraceOutcome run_trace(const Policy& policy, double prior, std::span<const EdgeClass> classes);

/// run_trace, with undecided traces resolved by the terminal rule.
Verdict decide_trace(const Policy& policy, double prior, std::span<const EdgeClass> classes);

}  // namespace quickstop
