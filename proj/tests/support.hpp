#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "quickstop/random.hpp"
#include "quickstop/types.hpp"

namespace quickstop::testing {

// Row-stochastic matrix with entries bounded away from zero.
inline MatrixXd random_stochastic(int c, RandomStream& rng, double floor = 0.02) {
  MatrixXd m(c, c);
  for (int r = 0; r < c; ++r) {
    for (int k = 0; k < c; ++k) m(r, k) = floor + rng.uniform();
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

inline TransitionModel random_model(int c, RandomStream& rng, double floor = 0.02) {
  MatrixXd a0 = random_stochastic(c, rng, floor);
  MatrixXd a1 = random_stochastic(c, rng, floor);
  return TransitionModel(a0, a1);
}

inline ClassEvents random_classes(int c, int n, RandomStream& rng) {
  ClassEvents out;
  for (int i = 0; i < n; ++i) out.emplace_back(static_cast<int>(rng.below(c)));
  return out;
}

inline ClassEvents classes(std::initializer_list<int> values) {
  ClassEvents out;
  for (int v : values) out.emplace_back(v);
  return out;
}

inline Trace class_trace(std::string id, Hypothesis label, ClassEvents events) {
  Trace t;
  t.id = std::move(id);
  t.label = label;
  t.events = std::move(events);
  return t;
}

}  // namespace quickstop::testing
