#include "quickstop/detector.hpp"

#include "quickstop/belief.hpp"

namespace quickstop {

DetectorState new_detector(const Policy& policy, double prior) {
  if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("detector prior must lie in (0,1)");
  if (policy.thresholds.class_count() != policy.model.class_count()) {
    throw InvalidArgument("policy thresholds do not match the model class count");
  }
  DetectorState s;
  s.belief = prior;
  return s;
}

DetectorState observe(const Policy& policy, const DetectorState& state, EdgeClass z) {
  if (!state.running()) throw InvalidArgument("observe called on a detector that already declared");
  policy.model.check_class(z);
  DetectorState next = state;
  if (state.last_class >= 0) {
    next.belief = posterior_step(state.belief, EdgeClass(state.last_class), z, policy.model);
  }
  next.last_class = z.value();
  next.observations = state.observations + 1;
  const auto& t = policy.thresholds;
  if (next.belief >= t.upper[z.value()]) {
    next.status = DetectorStatus::DeclaredMisinformation;
  } else if (next.belief <= t.lower[z.value()]) {
    next.status = DetectorStatus::DeclaredNews;
  }
  return next;
}

Verdict verdict_of(const Policy& policy, const DetectorState& state) {
  Verdict v;
  v.stopping_time = state.observations;
  v.final_belief = state.belief;
  switch (state.status) {
    case DetectorStatus::DeclaredMisinformation:
      v.decision = Hypothesis::Misinformation;
      break;
    case DetectorStatus::DeclaredNews:
      v.decision = Hypothesis::News;
      break;
    case DetectorStatus::Running:
      v.forced = true;
      v.decision = state.belief >= policy.costs.indifference() ? Hypothesis::Misinformation
                                                               : Hypothesis::News;
      break;
  }
  return v;
}

TraceOutcome run_trace(const Policy& policy, double prior, std::span<const EdgeClass> classes) {
  DetectorState s = new_detector(policy, prior);
  for (EdgeClass z : classes) {
    s = observe(policy, s, z);
    if (!s.running()) return verdict_of(policy, s);
  }
  return Undecided{s};
}

Verdict decide_trace(const Policy& policy, double prior, std::span<const EdgeClass> classes) {
  auto outcome = run_trace(policy, prior, classes);
  if (auto* v = std::get_if<Verdict>(&outcome)) return *v;
  return verdict_of(policy, std::get<Undecided>(outcome).state);
}

}  // namespace quickstop
