#include "quickstop/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "quickstop/error.hpp"

namespace quickstop {

namespace {

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

VectorXd concat(const VectorXd& a, const VectorXd& b) {
  VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

Quantizer::Quantizer(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
  if (boundaries_.empty()) throw InvalidArgument("quantizer needs at least one boundary");
  for (std::size_t i = 0; i < boundaries_.size(); ++i) {
    const double b = boundaries_[i];
    if (!(b > 0.0 && b < 1.0)) throw InvalidArgument("quantizer boundaries must lie in (0,1)");
    if (i > 0 && !(b > boundaries_[i - 1])) {
      throw InvalidArgument("quantizer boundaries must be strictly ascending");
    }
  }
}

Quantizer Quantizer::uniform(int class_count) {
  if (class_count < 2) throw InvalidArgument("quantizer needs at least two classes");
  std::vector<double> b;
  for (int i = 1; i < class_count; ++i) b.push_back(static_cast<double>(i) / class_count);
  return Quantizer(std::move(b));
}

EdgeClass Quantizer::operator()(double score) const {
  if (std::isnan(score)) throw InvalidArgument("cannot quantize a NaN score");
  // first boundary >= score; boundaries belong to the lower bin
  const auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), score);
  return EdgeClass(static_cast<int>(it - boundaries_.begin()));
}

EdgeScorer EdgeScorer::linear(VectorXd weights, double bias, int src_dim) {
  if (src_dim < 0 || src_dim > weights.size()) throw InvalidArgument("invalid scorer source dimension");
  if (!weights.allFinite() || !std::isfinite(bias)) throw InvalidArgument("scorer parameters must be finite");
  EdgeScorer s;
  s.kind_ = ScorerKind::Linear;
  s.weights_ = std::move(weights);
  s.bias_ = bias;
  s.src_dim_ = src_dim;
  return s;
}

double EdgeScorer::score(const VectorXd& src, const VectorXd& dst) const {
  if (kind_ == ScorerKind::Precomputed) {
    throw InvalidArgument("precomputed scorer does not accept feature input");
  }
  if (src.size() != src_dim_ || dst.size() != dst_dim()) {
    throw DataError("edge feature dimensions (" + std::to_string(src.size()) + ", " +
                    std::to_string(dst.size()) + ") do not match scorer (" +
                    std::to_string(src_dim_) + ", " + std::to_string(dst_dim()) + ")");
  }
  const double x = weights_.head(src_dim_).dot(src) + weights_.tail(dst_dim()).dot(dst) + bias_;
  return logistic(x);
}

double EdgeScorer::score(double stored) const {
  if (kind_ != ScorerKind::Precomputed) throw InvalidArgument("linear scorer needs feature input");
  if (!(stored >= 0.0 && stored <= 1.0)) throw DataError("stored score outside [0,1]");
  return stored;
}

EdgeScorer train_scorer(std::span<const Trace> traces, const ScorerTrainingConfig& config) {
  if (traces.empty()) throw DataError("no training traces");
  const auto n = static_cast<Eigen::Index>(traces.size());
  Eigen::Index src_dim = -1;
  Eigen::Index dst_dim = -1;
  MatrixXd x;
  VectorXd y(n);
  std::array<long, 2> per_label{0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trace& t = traces[i];
    if (!t.label) throw DataError("trace '" + t.id + "' has no label");
    if (!t.has_features()) throw DataError("trace '" + t.id + "' carries no edge features");
    t.validate();
    const auto& ev = t.features();
    if (src_dim < 0) {
      src_dim = ev.front().src.size();
      dst_dim = ev.front().dst.size();
      x.resize(n, src_dim + dst_dim);
    }
    if (ev.front().src.size() != src_dim || ev.front().dst.size() != dst_dim) {
      throw DataError("trace '" + t.id + "' feature dimension differs from earlier traces");
    }
    VectorXd mean = VectorXd::Zero(src_dim + dst_dim);
    for (const auto& e : ev) mean += concat(e.src, e.dst);
    x.row(i) = (mean / static_cast<double>(ev.size())).transpose();
    y(i) = to_int(*t.label);
    ++per_label[to_int(*t.label)];
  }
  if (per_label[0] == 0 || per_label[1] == 0) {
    throw DataError("scorer training needs traces of both labels");
  }

  // Standardize columns; constant columns keep zero weight.
  const Eigen::Index d = x.cols();
  VectorXd mu = x.colwise().mean().transpose();
  VectorXd sd(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (x.col(j).array() - mu(j)).square().mean();
    sd(j) = var > 1e-24 ? std::sqrt(var) : 0.0;
  }
  MatrixXd z(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (sd(j) > 0) {
      z.col(j) = ((x.col(j).array() - mu(j)) / sd(j)).matrix();
    } else {
      z.col(j).setZero();
    }
  }

  VectorXd w = VectorXd::Zero(d);
  double b = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    VectorXd margin = (z * w).array() + b;
    VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i) residual(i) = logistic(margin(i)) - y(i);
    const VectorXd grad_w = z.transpose() * residual / static_cast<double>(n) + config.l2 * w;
    const double grad_b = residual.mean();
    w -= config.learning_rate * grad_w;
    b -= config.learning_rate * grad_b;
  }

  VectorXd weights = VectorXd::Zero(d);
  double bias = b;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (sd(j) > 0) {
      weights(j) = w(j) / sd(j);
      bias -= weights(j) * mu(j);
    }
  }
  return EdgeScorer::linear(std::move(weights), bias, static_cast<int>(src_dim));
}

EdgeClass classify_edge(const EdgeScorer& scorer, const Quantizer& quantizer, const VectorXd& src,
                        const VectorXd& dst) {
  return quantizer(scorer.score(src, dst));
}

Trace classify_trace(const EdgeScorer& scorer, const Quantizer& quantizer, const Trace& trace) {
  if (trace.has_classes()) return trace;
  Trace out;
  out.id = trace.id;
  out.label = trace.label;
  out.true_classes = trace.true_classes;
  ClassEvents classes;
  classes.reserve(trace.size());
  for (const auto& e : trace.features()) classes.push_back(classify_edge(scorer, quantizer, e.src, e.dst));
  out.events = std::move(classes);
  return out;
}

TrainingReport estimate_transitions(std::span<const Trace> traces, int class_count, double smoothing) {
  if (class_count < 2) throw InvalidArgument("class count must be at least 2");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw InvalidArgument("smoothing must be finite and nonnegative");
  }
  TrainingReport report;
  report.class_count = class_count;
  report.smoothing = smoothing;
  for (auto& m : report.transition_counts) m = CountMatrix::Zero(class_count, class_count);

  for (const Trace& t : traces) {
    if (!t.label) throw DataError("trace '" + t.id + "' has no label");
    if (!t.has_classes()) throw DataError("trace '" + t.id + "' is not classified");
    const int label = to_int(*t.label);
    ++report.trace_counts[label];
    const auto& cls = t.classes();
    for (EdgeClass z : cls) {
      if (z.value() < 0 || z.value() >= class_count) {
        throw DataError("trace '" + t.id + "' has class " + std::to_string(z.value()) +
                        " outside [0, " + std::to_string(class_count - 1) + "]");
      }
    }
    for (std::size_t k = 1; k < cls.size(); ++k) {
      ++report.transition_counts[label](cls[k - 1].value(), cls[k].value());
    }
  }

  auto& alpha = report.estimates;
  for (int label = 0; label < 2; ++label) {
    const CountMatrix& counts = report.transition_counts[label];
    if (report.trace_counts[label] == 0 || counts.sum() == 0) {
      throw DataError(std::string("no transitions observed for label ") +
                      to_string(hypothesis_from_int(label)));
    }
    alpha[label].resize(class_count, class_count);
    for (int r = 0; r < class_count; ++r) {
      const double total = static_cast<double>(counts.row(r).sum()) + class_count * smoothing;
      if (!(total > 0.0)) {
        report.undefined_rows.emplace_back(hypothesis_from_int(label), r);
        alpha[label].row(r).setConstant(std::nan(""));
        continue;
      }
      for (int c = 0; c < class_count; ++c) {
        alpha[label](r, c) = (static_cast<double>(counts(r, c)) + smoothing) / total;
      }
    }
  }
  if (report.undefined_rows.empty()) report.model = TransitionModel(alpha[0], alpha[1]);
  return report;
}

}  // namespace quickstop
