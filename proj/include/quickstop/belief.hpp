#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "quickstop/error.hpp"
#include "quickstop/types.hpp"

namespace quickstop {

/// Bayes update of Pr(H1) after observing the transition prev -> next.
///
/// Throws ImpossibleObservation when the transition has zero probability
/// under the current belief mixture (never returns NaN).
template <typename Scalar>
Scalar posterior_step(Scalar pi, EdgeClass prev, EdgeClass next,
                      const BasicTransitionModel<Scalar>& model) {
  model.check_class(prev);
  model.check_class(next);
  const Scalar a0 = model.news(prev, next);
  const Scalar a1 = model.misinformation(prev, next);
  const Scalar num = pi * a1;
  const Scalar den = (Scalar(1) - pi) * a0 + num;
  if (!(den > Scalar(0))) {
    throw ImpossibleObservation("transition " + std::to_string(prev.value()) + " -> " +
                                std::to_string(next.value()) +
                                " has zero probability under the current belief");
  }
  return num / den;
}

/// Sum over transitions of log alpha1 - log alpha0.
///
/// A transition impossible under exactly one hypothesis yields +inf (only
/// H0 excluded) or -inf (only H1 excluded). A path excluded under both
/// hypotheses throws ImpossibleObservation.
template <typename Scalar>
Scalar log_likelihood_ratio(std::span<const EdgeClass> classes,
                            const BasicTransitionModel<Scalar>& model) {
  using std::log;
  if (classes.empty()) throw InvalidArgument("log_likelihood_ratio needs at least one class");
  for (EdgeClass z : classes) model.check_class(z);

  Scalar sum = 0;
  bool h0_excluded = false;
  bool h1_excluded = false;
  for (std::size_t i = 1; i < classes.size(); ++i) {
    const Scalar a0 = model.news(classes[i - 1], classes[i]);
    const Scalar a1 = model.misinformation(classes[i - 1], classes[i]);
    h0_excluded |= a0 == Scalar(0);
    h1_excluded |= a1 == Scalar(0);
    if (a0 > Scalar(0) && a1 > Scalar(0)) sum += log(a1) - log(a0);
  }
  if (h0_excluded && h1_excluded) {
    throw ImpossibleObservation("class sequence has zero probability under both hypotheses");
  }
  if (h0_excluded) return std::numeric_limits<Scalar>::infinity();
  if (h1_excluded) return -std::numeric_limits<Scalar>::infinity();
  return sum;
}

/// Posterior Pr(H1 | Z_1..Z_k) in closed form. The first class is
/// uninformative, so a single-element sequence returns the prior.
template <typename Scalar>
Scalar posterior_batch(Scalar prior, std::span<const EdgeClass> classes,
                       const BasicTransitionModel<Scalar>& model) {
  using std::exp;
  using std::log;
  if (!(prior >= Scalar(0) && prior <= Scalar(1))) throw InvalidArgument("prior outside [0,1]");
  const Scalar llr = log_likelihood_ratio(classes, model);
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  // log of the unnormalized H1 and H0 masses, relative to the H0 path product
  const Scalar log_h1 = (prior > Scalar(0) ? log(prior) : -inf) + llr;
  const Scalar log_h0 = prior < Scalar(1) ? log(Scalar(1) - prior) : -inf;
  if (log_h1 == -inf && log_h0 == -inf) {
    throw ImpossibleObservation("class sequence has zero probability under the prior");
  }
  if (llr == inf) {
    if (prior == Scalar(0)) {
      throw ImpossibleObservation("class sequence excluded under H0 with a zero prior on H1");
    }
    return Scalar(1);
  }
  if (log_h1 == -inf) return Scalar(0);
  if (log_h0 == -inf) return Scalar(1);
  const Scalar d = log_h0 - log_h1;
  // logistic(-d), evaluated on the stable side
  if (d >= Scalar(0)) {
    const Scalar e = exp(-d);
    return e / (Scalar(1) + e);
  }
  return Scalar(1) / (Scalar(1) + exp(d));
}

template <typename Scalar>
Scalar posterior_batch(Scalar prior, const ClassEvents& classes,
                       const BasicTransitionModel<Scalar>& model) {
  return posterior_batch(prior, std::span<const EdgeClass>(classes), model);
}

template <typename Scalar>
Scalar log_likelihood_ratio(const ClassEvents& classes, const BasicTransitionModel<Scalar>& model) {
  return log_likelihood_ratio(std::span<const EdgeClass>(classes), model);
}

/// Predictive probability of observing `next` after `prev` at belief pi.
template <typename Scalar>
Scalar predictive(Scalar pi, EdgeClass prev, EdgeClass next,
                  const BasicTransitionModel<Scalar>& model) {
  return pi * model.misinformation(prev, next) + (Scalar(1) - pi) * model.news(prev, next);
}

}  // namespace quickstop
