#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "quickstop/types.hpp"

namespace quickstop {

/// Maps a score in [0,1] to an edge class. Boundaries are ascending and
/// each boundary belongs to the lower bin: with (0.25, 0.5, 0.75),
/// [0,0.25] -> 0, (0.25,0.5] -> 1, (0.5,0.75] -> 2, (0.75,1] -> 3.
class Quantizer {
 public:
  Quantizer() : Quantizer(std::vector<double>{0.25, 0.5, 0.75}) {}
  explicit Quantizer(std::vector<double> boundaries);

  /// C equal-width bins.
  static Quantizer uniform(int class_count);

  int class_count() const noexcept { return static_cast<int>(boundaries_.size()) + 1; }
  const std::vector<double>& boundaries() const noexcept { return boundaries_; }

  EdgeClass operator()(double score) const;

  friend bool operator==(const Quantizer&, const Quantizer&) = default;

 private:
  std::vector<double> boundaries_;
};

enum class ScorerKind { Linear, Precomputed };

/// Edge scorer f(V, U) -> [0,1]. Linear scorers apply a logistic link to
/// w . [V; U] + b. Precomputed scorers stand in for traces that already
/// carry classes or scores and reject feature input.
class EdgeScorer {
 public:
  static EdgeScorer linear(VectorXd weights, double bias, int src_dim);
  static EdgeScorer precomputed() { return EdgeScorer(); }

  ScorerKind kind() const noexcept { return kind_; }
  const VectorXd& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  int src_dim() const noexcept { return src_dim_; }
  int dst_dim() const noexcept { return static_cast<int>(weights_.size()) - src_dim_; }

  double score(const VectorXd& src, const VectorXd& dst) const;
  double score(double stored) const;

  friend bool operator==(const EdgeScorer& a, const EdgeScorer& b) {
    return a.kind_ == b.kind_ && a.weights_ == b.weights_ && a.bias_ == b.bias_ &&
           a.src_dim_ == b.src_dim_;
  }

 private:
  EdgeScorer() = default;

  ScorerKind kind_ = ScorerKind::Precomputed;
  VectorXd weights_;
  double bias_ = 0.0;
  int src_dim_ = 0;
};

struct ScorerTrainingConfig {
  double l2 = 1.0;
  double learning_rate = 0.5;
  int iterations = 3000;
};

/// Fits an L2-regularized logistic scorer on per-trace mean edge features
/// against the trace label.
EdgeScorer train_scorer(std::span<const Trace> traces, const ScorerTrainingConfig& config = {});

EdgeClass classify_edge(const EdgeScorer& scorer, const Quantizer& quantizer, const VectorXd& src,
                        const VectorXd& dst);

/// Returns a copy of the trace with feature events replaced by classes.
/// Class-bearing traces are returned unchanged.
Trace classify_trace(const EdgeScorer& scorer, const Quantizer& quantizer, const Trace& trace);

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct TrainingReport {
  int class_count = 0;
  double smoothing = 0.0;
  std::array<CountMatrix, 2> transition_counts;  // [label](prev, next)
  std::array<long, 2> trace_counts{0, 0};
  // Per-label estimates; undefined rows are NaN.
  std::array<MatrixXd, 2> estimates;
  // (label, source class) pairs with no outgoing transitions and no smoothing.
  std::vector<std::pair<Hypothesis, int>> undefined_rows;
  // Absent when any row is undefined.
  std::optional<TransitionModel> model;
};

/// Counts labeled class transitions and converts them to row-stochastic
/// matrices: (count + a) / (row total + C a).
TrainingReport estimate_transitions(std::span<const Trace> traces, int class_count,
                                    double smoothing = 1.0);

}  // namespace quickstop
