#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "quickstop/belief.hpp"
#include "quickstop/error.hpp"
#include "quickstop/types.hpp"

namespace quickstop {

struct SolverConfig {
  double grid_step = 1e-3;         // belief quantization step
  double tolerance = 1e-9;         // sup-norm convergence tolerance, also used for s == g tests
  long max_iterations = 100000;

  /// ceil(1/step) + 1 points spanning [0,1] inclusive.
  int grid_points() const {
    return static_cast<int>(std::ceil(1.0 / grid_step - 1e-9)) + 1;
  }

  void validate() const {
    if (!(grid_step > 0.0 && grid_step < 1.0)) throw InvalidArgument("grid step must lie in (0,1)");
    if (!(tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
  }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Per-class cost-to-go sampled on a uniform belief grid; off-grid beliefs
/// are linearly interpolated.
template <typename Scalar>
class BasicValueFunction {
 public:
  BasicValueFunction() = default;
  BasicValueFunction(int class_count, int grid_points)
      : values_(Matrix<Scalar>::Zero(class_count, grid_points)) {
    if (grid_points < 2) throw InvalidArgument("value function needs at least two grid points");
  }
  explicit BasicValueFunction(Matrix<Scalar> values) : values_(std::move(values)) {
    if (values_.cols() < 2) throw InvalidArgument("value function needs at least two grid points");
  }

  int class_count() const noexcept { return static_cast<int>(values_.rows()); }
  int grid_points() const noexcept { return static_cast<int>(values_.cols()); }

  Scalar grid(int i) const noexcept { return Scalar(i) / Scalar(grid_points() - 1); }

  const Matrix<Scalar>& values() const noexcept { return values_; }
  Matrix<Scalar>& values() noexcept { return values_; }

  Scalar at(int z, int i) const { return values_(z, i); }

  Scalar operator()(EdgeClass z, Scalar pi) const {
    const int last = grid_points() - 1;
    const Scalar x = std::clamp(pi, Scalar(0), Scalar(1)) * Scalar(last);
    int i = static_cast<int>(x);
    if (i >= last) i = last - 1;
    const Scalar frac = x - Scalar(i);
    return (Scalar(1) - frac) * values_(z.value(), i) + frac * values_(z.value(), i + 1);
  }

  friend bool operator==(const BasicValueFunction& a, const BasicValueFunction& b) {
    return a.values_ == b.values_;
  }

 private:
  Matrix<Scalar> values_;
};

using ValueFunction = BasicValueFunction<double>;

/// Stopping rule: declare news when belief <= lower[z], misinformation when
/// belief >= upper[z], where z is the latest observed class.
template <typename Scalar>
struct BasicPolicyThresholds {
  std::vector<Scalar> lower;
  std::vector<Scalar> upper;
  BasicValueFunction<Scalar> value_function;
  long iterations = 0;
  Scalar residual = 0;

  int class_count() const noexcept { return static_cast<int>(lower.size()); }

  friend bool operator==(const BasicPolicyThresholds&, const BasicPolicyThresholds&) = default;
};

using PolicyThresholds = BasicPolicyThresholds<double>;

/// Terminal cost g(pi) on the grid, replicated for every class.
template <typename Scalar>
BasicValueFunction<Scalar> terminal_value(int class_count, const CostConfig& costs,
                                          const SolverConfig& config) {
  BasicValueFunction<Scalar> g(class_count, config.grid_points());
  for (int i = 0; i < g.grid_points(); ++i) {
    const Scalar pi = g.grid(i);
    const Scalar stop = std::min(Scalar(costs.type2) * pi, Scalar(costs.type1) * (Scalar(1) - pi));
    g.values().col(i).setConstant(stop);
  }
  return g;
}

namespace detail {

// Precomputed successor beliefs and predictive weights for every
// (class, grid point, next class) triple. Reused across iterations.
template <typename Scalar>
class BackupKernel {
 public:
  BackupKernel(const BasicTransitionModel<Scalar>& model, const CostConfig& costs, int grid_points)
      : classes_(model.class_count()), points_(grid_points) {
    const int last = points_ - 1;
    const std::size_t n = static_cast<std::size_t>(classes_) * points_ * classes_;
    weight_.resize(n);
    left_.resize(n);
    frac_.resize(n);
    stop_.resize(points_);
    step_cost_.resize(points_);
    for (int i = 0; i < points_; ++i) {
      const Scalar pi = Scalar(i) / Scalar(last);
      stop_[i] = std::min(Scalar(costs.type2) * pi, Scalar(costs.type1) * (Scalar(1) - pi));
      step_cost_[i] = Scalar(costs.step) * pi;
    }
    for (int z = 0; z < classes_; ++z) {
      for (int i = 0; i < points_; ++i) {
        const Scalar pi = Scalar(i) / Scalar(last);
        for (int zn = 0; zn < classes_; ++zn) {
          const std::size_t k = index(z, i, zn);
          const Scalar p = predictive(pi, EdgeClass(z), EdgeClass(zn), model);
          weight_[k] = p;
          if (!(p > Scalar(0))) {
            left_[k] = 0;
            frac_[k] = 0;
            continue;
          }
          const Scalar next = pi * model.misinformation(EdgeClass(z), EdgeClass(zn)) / p;
          const Scalar x = std::clamp(next, Scalar(0), Scalar(1)) * Scalar(last);
          int j = static_cast<int>(x);
          if (j >= last) j = last - 1;
          left_[k] = j;
          frac_[k] = x - Scalar(j);
        }
      }
    }
  }

  /// One Bellman backup; returns the sup-norm change.
  Scalar apply(const Matrix<Scalar>& in, Matrix<Scalar>& out) const {
    Scalar change = 0;
    for (int z = 0; z < classes_; ++z) {
      for (int i = 0; i < points_; ++i) {
        Scalar cont = step_cost_[i];
        for (int zn = 0; zn < classes_; ++zn) {
          const std::size_t k = index(z, i, zn);
          const Scalar w = weight_[k];
          if (!(w > Scalar(0))) continue;
          const int j = left_[k];
          const Scalar f = frac_[k];
          cont += w * ((Scalar(1) - f) * in(zn, j) + f * in(zn, j + 1));
        }
        const Scalar v = std::min(stop_[i], cont);
        using std::abs;
        change = std::max(change, Scalar(abs(v - in(z, i))));
        out(z, i) = v;
      }
    }
    return change;
  }

 private:
  std::size_t index(int z, int i, int zn) const {
    return (static_cast<std::size_t>(z) * points_ + i) * classes_ + zn;
  }

  int classes_;
  int points_;
  std::vector<Scalar> weight_;
  std::vector<int> left_;
  std::vector<Scalar> frac_;
  std::vector<Scalar> stop_;
  std::vector<Scalar> step_cost_;
};

}  // namespace detail

/// s'(z)(pi) = min{ g(pi), sum_z' s(z')(pi'_z') Pr(z' | pi, z) + c pi }.
template <typename Scalar>
BasicValueFunction<Scalar> bellman_backup(const BasicValueFunction<Scalar>& s,
                                          const BasicTransitionModel<Scalar>& model,
                                          const CostConfig& costs, const SolverConfig& config) {
  if (s.class_count() != model.class_count() || s.grid_points() != config.grid_points()) {
    throw InvalidArgument("value function shape does not match model and grid");
  }
  detail::BackupKernel<Scalar> kernel(model, costs, s.grid_points());
  BasicValueFunction<Scalar> out(s.class_count(), s.grid_points());
  kernel.apply(s.values(), out.values());
  return out;
}

/// Reads the stopping thresholds off a converged value function: the
/// outermost grid points on each side of c_I/(c_I+c_II) where s equals the
/// matching terminal cost within `tolerance`.
template <typename Scalar>
BasicPolicyThresholds<Scalar> extract_thresholds(BasicValueFunction<Scalar> s,
                                                 const CostConfig& costs, double tolerance) {
  using std::abs;
  const Scalar pivot = Scalar(costs.indifference());
  BasicPolicyThresholds<Scalar> out;
  out.lower.assign(s.class_count(), Scalar(0));
  out.upper.assign(s.class_count(), Scalar(1));
  for (int z = 0; z < s.class_count(); ++z) {
    for (int i = 0; i < s.grid_points(); ++i) {
      const Scalar pi = s.grid(i);
      if (pi <= pivot && abs(s.at(z, i) - Scalar(costs.type2) * pi) <= Scalar(tolerance)) {
        out.lower[z] = pi;
      }
    }
    for (int i = s.grid_points() - 1; i >= 0; --i) {
      const Scalar pi = s.grid(i);
      if (pi >= pivot && abs(s.at(z, i) - Scalar(costs.type1) * (Scalar(1) - pi)) <= Scalar(tolerance)) {
        out.upper[z] = pi;
      }
    }
  }
  out.value_function = std::move(s);
  return out;
}

/// Value iteration from s = g until the sup-norm change drops to the
/// tolerance, then threshold extraction.
template <typename Scalar>
BasicPolicyThresholds<Scalar> solve(const BasicTransitionModel<Scalar>& model, const CostConfig& costs,
                                    const SolverConfig& config) {
  costs.validate();
  config.validate();
  if (model.class_count() < 2) throw InvalidArgument("model must have at least two classes");
  detail::BackupKernel<Scalar> kernel(model, costs, config.grid_points());
  BasicValueFunction<Scalar> current = terminal_value<Scalar>(model.class_count(), costs, config);
  BasicValueFunction<Scalar> next = current;
  Scalar residual = 0;
  for (long it = 1; it <= config.max_iterations; ++it) {
    residual = kernel.apply(current.values(), next.values());
    std::swap(current, next);
    if (residual <= Scalar(config.tolerance)) {
      auto out = extract_thresholds(std::move(current), costs, config.tolerance);
      out.iterations = it;
      out.residual = residual;
      return out;
    }
  }
  throw ConvergenceError("value iteration did not converge within " +
                             std::to_string(config.max_iterations) + " iterations (residual " +
                             std::to_string(static_cast<double>(residual)) + ")",
                         static_cast<double>(residual), config.max_iterations);
}

struct ThresholdSweepRow {
  double step_cost;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct ThresholdSweep {
  std::vector<ThresholdSweepRow> rows;
  // Human-readable descriptions of monotonicity violations beyond one grid step.
  std::vector<std::string> violations;

  bool monotone() const noexcept { return violations.empty(); }
};

/// Solves once per propagation cost and checks that the continuation
/// region shrinks as c grows.
inline ThresholdSweep threshold_monotonicity_sweep(const TransitionModel& model, const CostConfig& base,
                                                   const std::vector<double>& step_costs,
                                                   const SolverConfig& config) {
  if (step_costs.size() < 2) throw InvalidArgument("threshold sweep needs at least two c values");
  if (!std::is_sorted(step_costs.begin(), step_costs.end())) {
    throw InvalidArgument("threshold sweep c values must be ascending");
  }
  ThresholdSweep sweep;
  for (double c : step_costs) {
    CostConfig costs = base;
    costs.step = c;
    auto t = solve(model, costs, config);
    sweep.rows.push_back({c, t.lower, t.upper});
  }
  const double slack = 1.0 / (config.grid_points() - 1) + 1e-12;
  for (std::size_t r = 1; r < sweep.rows.size(); ++r) {
    const auto& prev = sweep.rows[r - 1];
    const auto& cur = sweep.rows[r];
    for (std::size_t z = 0; z < cur.lower.size(); ++z) {
      if (cur.lower[z] + slack < prev.lower[z]) {
        sweep.violations.push_back("lower threshold of class " + std::to_string(z) +
                                   " decreased at c=" + std::to_string(cur.step_cost));
      }
      if (cur.upper[z] > prev.upper[z] + slack) {
        sweep.violations.push_back("upper threshold of class " + std::to_string(z) +
                                   " increased at c=" + std::to_string(cur.step_cost));
      }
    }
  }
  return sweep;
}

}  // namespace quickstop

namespace quickstop {

/// Everything the online detector needs: the learned model, the costs the
/// thresholds were solved for, and the thresholds themselves.
struct Policy {
  TransitionModel model;
  CostConfig costs;
  SolverConfig solver;
  PolicyThresholds thresholds;

  friend bool operator==(const Policy&, const Policy&) = default;
};

inline Policy make_policy(const TransitionModel& model, const CostConfig& costs,
                          const SolverConfig& config = {}) {
  return Policy{model, costs, config, solve(model, costs, config)};
}

}  // namespace quickstop
