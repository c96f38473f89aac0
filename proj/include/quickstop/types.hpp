#pragma once

#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "quickstop/error.hpp"

namespace quickstop {

/// Quantized edge score. 0 is the most news-like class, C-1 the most
/// misinformation-like.
class EdgeClass {
 public:
  constexpr EdgeClass() = default;
  constexpr explicit EdgeClass(int value) : value_(value) {}

  constexpr int value() const noexcept { return value_; }

  friend constexpr auto operator<=>(EdgeClass, EdgeClass) = default;

 private:
  int value_ = 0;
};

enum class Hypothesis { News = 0, Misinformation = 1 };

inline int to_int(Hypothesis h) { return h == Hypothesis::Misinformation ? 1 : 0; }

inline Hypothesis hypothesis_from_int(int v) {
  if (v == 0) return Hypothesis::News;
  if (v == 1) return Hypothesis::Misinformation;
  throw InvalidArgument("hypothesis label must be 0 or 1, got " + std::to_string(v));
}

inline const char* to_string(Hypothesis h) {
  return h == Hypothesis::Misinformation ? "misinformation" : "news";
}

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Per-hypothesis edge-class transition matrices. Row = previous class,
/// column = next class, so alpha(h)(prev, next) = Pr(next | prev, h).
template <typename Scalar>
class BasicTransitionModel {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  BasicTransitionModel() = default;

  BasicTransitionModel(Matrix<Scalar> alpha0, Matrix<Scalar> alpha1)
      : alpha0_(std::move(alpha0)), alpha1_(std::move(alpha1)) {
    validate();
  }

  /// Rescales every row to sum to one before validating. Used for
  /// published tables whose printed entries are rounded to three digits.
  static BasicTransitionModel normalized(Matrix<Scalar> alpha0, Matrix<Scalar> alpha1) {
    normalize_rows(alpha0);
    normalize_rows(alpha1);
    return BasicTransitionModel(std::move(alpha0), std::move(alpha1));
  }

  int class_count() const noexcept { return static_cast<int>(alpha0_.rows()); }

  const Matrix<Scalar>& alpha0() const noexcept { return alpha0_; }
  const Matrix<Scalar>& alpha1() const noexcept { return alpha1_; }
  const Matrix<Scalar>& alpha(Hypothesis h) const noexcept {
    return h == Hypothesis::Misinformation ? alpha1_ : alpha0_;
  }

  Scalar news(EdgeClass prev, EdgeClass next) const { return alpha0_(prev.value(), next.value()); }
  Scalar misinformation(EdgeClass prev, EdgeClass next) const {
    return alpha1_(prev.value(), next.value());
  }

  bool contains(EdgeClass z) const noexcept { return z.value() >= 0 && z.value() < class_count(); }

  void check_class(EdgeClass z) const {
    if (!contains(z)) {
      throw InvalidArgument("edge class " + std::to_string(z.value()) + " outside [0, " +
                            std::to_string(class_count() - 1) + "]");
    }
  }

  template <typename Other>
  BasicTransitionModel<Other> cast() const {
    return BasicTransitionModel<Other>(alpha0_.template cast<Other>(),
                                       alpha1_.template cast<Other>());
  }

  friend bool operator==(const BasicTransitionModel& a, const BasicTransitionModel& b) {
    return a.alpha0_ == b.alpha0_ && a.alpha1_ == b.alpha1_;
  }

 private:
  static void normalize_rows(Matrix<Scalar>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const Scalar sum = m.row(r).sum();
      if (sum <= Scalar(0)) throw InvalidArgument("transition row " + std::to_string(r) + " has no mass");
      m.row(r) /= sum;
    }
  }

  static void validate_matrix(const Matrix<Scalar>& m, const char* name) {
    using std::abs;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const Scalar v = m(r, c);
        if (!(v >= Scalar(0) && v <= Scalar(1))) {
          throw InvalidArgument(std::string(name) + " entry (" + std::to_string(r) + "," +
                                std::to_string(c) + ") outside [0,1]");
        }
      }
      if (abs(static_cast<double>(m.row(r).sum()) - 1.0) > kRowSumTolerance) {
        throw InvalidArgument(std::string(name) + " row " + std::to_string(r) +
                              " does not sum to 1");
      }
    }
  }

  void validate() const {
    if (alpha0_.rows() < 2 || alpha0_.rows() != alpha0_.cols()) {
      throw InvalidArgument("alpha0 must be square with at least 2 classes");
    }
    if (alpha1_.rows() != alpha0_.rows() || alpha1_.cols() != alpha0_.cols()) {
      throw InvalidArgument("alpha0 and alpha1 must share the class count");
    }
    validate_matrix(alpha0_, "alpha0");
    validate_matrix(alpha1_, "alpha1");
  }

  Matrix<Scalar> alpha0_;
  Matrix<Scalar> alpha1_;
};

using TransitionModel = BasicTransitionModel<double>;

struct CostConfig {
  double type1 = 10.0;   // false positive: news declared misinformation
  double type2 = 10.0;   // false negative: misinformation declared news
  double step = 0.05;    // per-observation propagation cost, charged under H1 only
  double prior = 0.5;    // Pr(H1)

  /// Belief at which both terminal decisions cost the same.
  double indifference() const noexcept { return type1 / (type1 + type2); }

  double terminal_cost(double pi) const noexcept {
    return std::fmin(type2 * pi, type1 * (1.0 - pi));
  }

  void validate() const {
    if (!(type1 > 0.0)) throw InvalidArgument("c_I must be positive");
    if (!(type2 > 0.0)) throw InvalidArgument("c_II must be positive");
    if (!(step >= 0.0) || !std::isfinite(step)) throw InvalidArgument("c must be finite and nonnegative");
    if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("prior must lie in (0,1)");
  }

  friend bool operator==(const CostConfig&, const CostConfig&) = default;
};

struct FeatureEvent {
  VectorXd src;  // followee features
  VectorXd dst;  // retweeter features

  friend bool operator==(const FeatureEvent& a, const FeatureEvent& b) {
    return a.src == b.src && a.dst == b.dst;
  }
};

using ClassEvents = std::vector<EdgeClass>;
using FeatureEvents = std::vector<FeatureEvent>;

/// One information-spreading trace. Events are either all pre-classified
/// or all feature-bearing.
struct Trace {
  std::string id;
  std::optional<Hypothesis> label;
  std::variant<ClassEvents, FeatureEvents> events;
  // Ground-truth classes, present for simulated traces only.
  ClassEvents true_classes;

  bool has_classes() const noexcept { return std::holds_alternative<ClassEvents>(events); }
  bool has_features() const noexcept { return std::holds_alternative<FeatureEvents>(events); }
  const ClassEvents& classes() const { return std::get<ClassEvents>(events); }
  const FeatureEvents& features() const { return std::get<FeatureEvents>(events); }

  std::size_t size() const {
    return std::visit([](const auto& e) { return e.size(); }, events);
  }

  void validate() const {
    if (size() == 0) throw DataError("trace '" + id + "' has no events");
    if (has_features()) {
      const auto& fe = features();
      const auto ns = fe.front().src.size();
      const auto nd = fe.front().dst.size();
      for (const auto& e : fe) {
        if (e.src.size() != ns || e.dst.size() != nd) {
          throw DataError("trace '" + id + "' mixes feature dimensions");
        }
      }
    }
    if (!true_classes.empty() && true_classes.size() != size()) {
      throw DataError("trace '" + id + "' true_class count differs from event count");
    }
  }

  friend bool operator==(const Trace&, const Trace&) = default;
};

}  // namespace quickstop
